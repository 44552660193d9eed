#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace mmskit {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of the stream owned by `name` within a run seeded with `seed`.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name, std::uint64_t salt = 0) noexcept {
    return mix64(mix64(seed) ^ fnv1a(name) ^ mix64(salt + 0x632be59bd9b4e019ULL));
}

/// Random source with explicitly defined draws, so sequences do not depend
/// on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

    /// Uniform integer in [0, n). Requires n > 0.
    std::size_t index(std::size_t n) {
        // Lemire's multiply-shift with rejection.
        const std::uint64_t range = n;
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * range;
        auto low = static_cast<std::uint64_t>(m);
        if (low < range) {
            const std::uint64_t threshold = (0 - range) % range;
            while (low < threshold) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::size_t>(m >> 64);
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace mmskit
