#pragma once

#include "mmskit/cld.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmskit {

/// Factors sharing the same interval class over the decomposition dimensions.
struct SubmodelGroup {
    std::string id;
    std::vector<std::string> factors;
    /// Constant-interval (or unscaled) factors linked to this group, plus any
    /// constant copies created for it.
    std::vector<std::string> parameters;
    std::map<std::string, ScaleInterval> intervals;

    bool operator==(const SubmodelGroup&) const = default;
};

struct ReplicatedFactor {
    std::string original;
    std::string copy;
    std::string group;
    int link_id = 0;

    bool operator==(const ReplicatedFactor&) const = default;
};

struct Decomposition {
    std::vector<std::string> dimensions;
    std::vector<SubmodelGroup> groups;
    std::vector<int> cross_links;
    std::vector<int> internal_links;
    /// Links with at least one endpoint outside every group.
    std::vector<int> parameter_links;
    std::vector<ReplicatedFactor> replicated_factors;
    std::vector<std::string> warnings;

    const SubmodelGroup* group(const std::string& id) const;
    /// Group owning factor `factor_id`, or null for parameter factors.
    const SubmodelGroup* group_of(const std::string& factor_id) const;
    const ReplicatedFactor* replica_for_link(int link_id) const;

    bool operator==(const Decomposition&) const = default;
};

/// Splits a valid CLD into groups with homogeneous scale intervals over
/// `dims`. Bands in `rules` coalesce interval classes; without bands a
/// dimension groups by exact interval equality. Throws Error if the CLD is
/// invalid, a dimension is undeclared, or `rules` references unknown
/// dimensions, levels or links.
Decomposition decompose(const Cld& cld, const std::vector<std::string>& dims,
                        const std::optional<MergeRules>& rules = std::nullopt);

nlohmann::json to_json(const Decomposition& decomposition);
Decomposition parse_decomposition(const nlohmann::json& doc);

/// A factor whose governance interval spans several decision-making
/// perspectives and should be split into one factor per level.
struct GovernanceFinding {
    std::string factor;
    std::vector<std::string> levels;
    std::string reason;

    bool operator==(const GovernanceFinding&) const = default;
};

/// Flags factors whose governance interval is ambiguous under the supplied
/// decision-making levels: either more than one decision level lies inside
/// the interval, or a decision level lies above its extent. Factors without
/// a governance interval, or with a constant one, are never flagged.
std::vector<GovernanceFinding> governance_check(const Cld& cld, const std::vector<std::string>& decision_levels,
                                                const std::string& dimension = "governance");

} // namespace mmskit
