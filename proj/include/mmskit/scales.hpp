#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmskit {

/// A named scale dimension with ordinal levels, smallest first
/// (e.g. time: day < week < month < year < decade).
struct Dimension {
    std::string name;
    std::vector<std::string> levels;

    /// Position of `label` in the level order, if declared.
    std::optional<std::size_t> index_of(std::string_view label) const;
    bool has_level(std::string_view label) const { return index_of(label).has_value(); }

    bool operator==(const Dimension&) const = default;
};

/// (grain, extent) pair of levels within one dimension. A constant interval
/// marks a factor that does not change along the dimension; grain and
/// extent are empty in that case.
struct ScaleInterval {
    std::string grain;
    std::string extent;
    bool constant = false;

    static ScaleInterval make(std::string grain, std::string extent) {
        return {std::move(grain), std::move(extent), false};
    }
    static ScaleInterval make_constant() { return {{}, {}, true}; }

    bool operator==(const ScaleInterval&) const = default;
};

/// Empty string when `interval` is well formed in `dim`, else a description
/// of the defect.
std::string check_interval(const ScaleInterval& interval, const Dimension& dim);

std::string to_string(const ScaleInterval& interval);

enum class IntervalRelation { separated, contiguous, overlapping };

std::string_view to_string(IntervalRelation relation);

/// Classifies two non-constant intervals of the same dimension. Symmetric.
/// Throws Error for constant or malformed intervals.
IntervalRelation interval_relation(const ScaleInterval& a, const ScaleInterval& b, const Dimension& dim);

/// A user-declared coalescing of interval classes into one contiguous level
/// range [from, to] of a dimension.
struct Band {
    std::string name;
    std::string from;
    std::string to;

    bool operator==(const Band&) const = default;
};

/// Hints steering the scale decomposition: bands per dimension and the ids of
/// cross links whose value crosses as a constant copy in the receiving group.
struct MergeRules {
    std::map<std::string, std::vector<Band>> bands;
    std::vector<int> constant_transfers;

    bool empty() const { return bands.empty() && constant_transfers.empty(); }
    bool operator==(const MergeRules&) const = default;
};

} // namespace mmskit
