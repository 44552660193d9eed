#include "mmskit/scales.hpp"

#include "mmskit/error.hpp"

#include <algorithm>

namespace mmskit {

std::optional<std::size_t> Dimension::index_of(std::string_view label) const {
    auto it = std::find(levels.begin(), levels.end(), label);
    if (it == levels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - levels.begin());
}

std::string check_interval(const ScaleInterval& interval, const Dimension& dim) {
    if (interval.constant) {
        if (!interval.grain.empty() || !interval.extent.empty())
            return "constant interval must not carry grain or extent";
        return {};
    }
    auto g = dim.index_of(interval.grain);
    auto e = dim.index_of(interval.extent);
    if (!g) return "grain '" + interval.grain + "' is not a level of dimension '" + dim.name + "'";
    if (!e) return "extent '" + interval.extent + "' is not a level of dimension '" + dim.name + "'";
    if (*g > *e) return "grain '" + interval.grain + "' exceeds extent '" + interval.extent + "'";
    return {};
}

std::string to_string(const ScaleInterval& interval) {
    if (interval.constant) return "(constant)";
    return "(" + interval.grain + ", " + interval.extent + ")";
}

std::string_view to_string(IntervalRelation relation) {
    switch (relation) {
    case IntervalRelation::separated: return "separated";
    case IntervalRelation::contiguous: return "contiguous";
    case IntervalRelation::overlapping: return "overlapping";
    }
    return "?";
}

IntervalRelation interval_relation(const ScaleInterval& a, const ScaleInterval& b, const Dimension& dim) {
    if (a.constant || b.constant) throw Error("relation undefined for constant intervals");
    for (const auto* iv : {&a, &b}) {
        if (auto defect = check_interval(*iv, dim); !defect.empty()) throw Error(defect);
    }
    const auto ag = *dim.index_of(a.grain), ae = *dim.index_of(a.extent);
    const auto bg = *dim.index_of(b.grain), be = *dim.index_of(b.extent);
    if (ae < bg || be < ag) return IntervalRelation::separated;
    if (ae == bg || be == ag) return IntervalRelation::contiguous;
    return IntervalRelation::overlapping;
}

} // namespace mmskit
