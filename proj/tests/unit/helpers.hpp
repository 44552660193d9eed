#pragma once

#include "mmskit/cld.hpp"

#include <string>
#include <vector>

namespace testing {

inline mmskit::Dimension time_dim() { return {"time", {"day", "week", "month", "year", "decade"}}; }
inline mmskit::Dimension governance_dim() { return {"governance", {"local", "municipal", "regional", "national"}}; }

inline mmskit::ScaleInterval iv(const std::string& g, const std::string& e) { return mmskit::ScaleInterval::make(g, e); }

inline mmskit::Factor factor(const std::string& id, const std::string& g, const std::string& e) {
    mmskit::Factor f;
    f.id = id;
    f.label = id;
    f.intervals["time"] = iv(g, e);
    return f;
}

inline mmskit::Factor constant_factor(const std::string& id) {
    mmskit::Factor f;
    f.id = id;
    f.label = id;
    f.intervals["time"] = mmskit::ScaleInterval::make_constant();
    return f;
}

inline mmskit::CausalLink link(int id, const std::string& s, const std::string& t, bool positive = true) {
    mmskit::CausalLink l;
    l.id = id;
    l.source = s;
    l.target = t;
    l.polarity = positive ? mmskit::Polarity::positive : mmskit::Polarity::negative;
    return l;
}

/// A CLD over the time dimension only.
inline mmskit::Cld time_cld(std::vector<mmskit::Factor> factors, std::vector<mmskit::CausalLink> links) {
    mmskit::Cld c;
    c.dimensions = {time_dim()};
    c.factors = std::move(factors);
    c.links = std::move(links);
    return c;
}

} // namespace testing

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace testing {

/// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("mmskit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testing
