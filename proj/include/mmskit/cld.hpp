#pragma once

#include "mmskit/report.hpp"
#include "mmskit/scales.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmskit {

/// A concept in a causal loop diagram, annotated with the scale interval it
/// occupies in each relevant dimension. A dimension missing from
/// `intervals` is irrelevant to the factor.
struct Factor {
    std::string id;
    std::string label;
    std::string domain;
    std::map<std::string, ScaleInterval> intervals;
    std::string note;

    const ScaleInterval* interval(const std::string& dim) const {
        auto it = intervals.find(dim);
        return it == intervals.end() ? nullptr : &it->second;
    }

    bool operator==(const Factor&) const = default;
};

enum class Polarity { positive, negative };

struct CausalLink {
    int id = 0;
    std::string source;
    std::string target;
    Polarity polarity = Polarity::positive;
    bool allow_self_loop = false;
    std::string note;

    bool operator==(const CausalLink&) const = default;
};

struct Cld {
    std::vector<Dimension> dimensions;
    std::vector<Factor> factors;
    std::vector<CausalLink> links;
    MergeRules decomposition_hints;

    const Dimension* dimension(const std::string& name) const;
    const Factor* factor(const std::string& id) const;
    const CausalLink* link(int id) const;

    bool operator==(const Cld&) const = default;
};

/// Reports every referential or interval defect. Never throws.
ValidationReport validate_cld(const Cld& cld);

enum class LoopKind { reinforcing, balancing };

std::string_view to_string(LoopKind kind);

/// A simple directed cycle. `factors[i]` is the source of `link_ids[i]`; the
/// cycle starts at its lexicographically smallest factor id.
struct Loop {
    std::vector<std::string> factors;
    std::vector<int> link_ids;
    LoopKind kind = LoopKind::reinforcing;

    bool operator==(const Loop&) const = default;
};

struct LoopSearch {
    std::vector<Loop> loops;
    std::size_t max_length = 10;
    /// True when some path was cut at `max_length` and longer cycles may exist.
    bool truncated = false;
};

/// Enumerates all simple cycles of at most `max_length` links. Parallel links
/// between the same pair of factors yield distinct loops.
LoopSearch find_loops(const Cld& cld, std::size_t max_length = 10);

/// JSON document codec. Structural problems (wrong types, unknown polarity)
/// raise ParseError; semantic ones are left to validate_cld.
Cld parse_cld(const nlohmann::json& doc);
nlohmann::json to_json(const Cld& cld);

nlohmann::json interval_to_json(const ScaleInterval& interval);
ScaleInterval interval_from_json(const nlohmann::json& value, const std::string& field);

} // namespace mmskit
