// Bisects the per-contact infection probability so that index cases infect
// `--target` others on average with schools open.
#include "mmskit/abm.hpp"
#include "mmskit/rng.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <set>

using namespace mmskit;

namespace {

double mean_index_secondary(double p_inf, int reps, std::uint64_t seed) {
    double sum = 0.0;
    long count = 0;
    for (int r = 0; r < reps; ++r) {
        abm::AbmConfig cfg = abm::AbmConfig::defaults();
        cfg.contacts.p_inf = p_inf;
        Rng rng(stream_seed(seed + static_cast<std::uint64_t>(r), "calibrate"));
        abm::AgentPopulation pop = abm::make_population(cfg.population, cfg.contacts, rng);
        std::set<std::uint32_t> pending;
        for (std::uint32_t i = 0; i < pop.size(); ++i) {
            if (pop.agents[i].state == abm::EpiState::I) pending.insert(i);
        }
        std::size_t seen = 0;
        while (!pending.empty() && pop.day < cfg.duration_days) {
            abm::abm_step(pop, cfg.contacts, cfg.learning, true, rng);
            for (; seen < pop.recoveries.size(); ++seen) {
                const auto& ev = pop.recoveries[seen];
                if (pending.erase(ev.agent)) {
                    sum += ev.secondary_count;
                    ++count;
                }
            }
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"calibrate the default infection probability"};
    double target = 2.5;
    int reps = 2000;
    std::uint64_t seed = 7;
    app.add_option("--target", target, "mean secondary infections per index case");
    app.add_option("--reps", reps, "populations per probe");
    app.add_option("--seed", seed, "base seed");
    CLI11_PARSE(app, argc, argv);

    double lo = 0.0, hi = 0.2;
    for (int it = 0; it < 20; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = mean_index_secondary(mid, reps, seed);
        std::printf("p_inf=%.6f  R=%.4f\n", mid, r);
        (r < target ? lo : hi) = mid;
    }
    std::printf("calibrated p_inf=%.4f\n", 0.5 * (lo + hi));
    return 0;
}
