#include "mmskit/advisor.hpp"

namespace mmskit {

namespace {
const std::string kHeterogeneity = "Heterogeneity in attributes";
const std::string kMixing = "Mixing (patterns in space or topology of interactions)";
const std::string kBehavior = "Complexity of behavior (Adaptation and Learning)";
const std::string kDiscrete = "Discrete system's behavior";
const std::string kData = "Aggregation level, availability, and uncertainty of Knowledge and Data";
const std::string kFeasibility = "Project feasibility (time and budget)";
} // namespace

const std::vector<std::string>& paradigm_criteria_rows() {
    static const std::vector<std::string> rows{kHeterogeneity, kMixing, kBehavior, kDiscrete, kData, kFeasibility};
    return rows;
}

ParadigmAdvice advise_paradigm(const ParadigmCriteria& c) {
    ParadigmAdvice advice;
    auto fire = [&](const char* rule, const std::string& criterion, Paradigm favors, const char* why) {
        advice.rationale.push_back({rule, criterion, favors, why});
        (favors == Paradigm::agent_based ? advice.agent_score : advice.stock_score) += 1;
    };

    if (c.heterogeneity == Level::high)
        fire("A1", kHeterogeneity, Paradigm::agent_based, "entities differ in attributes that affect the outcome");
    if (c.mixing == Mixing::networked)
        fire("A2", kMixing, Paradigm::agent_based, "interactions follow a contact structure, not homogeneous mixing");
    if (c.discreteness_matters && !c.threshold_known)
        fire("A3", kDiscrete, Paradigm::agent_based,
             "discrete events matter and no threshold is known for imposing them on continuous stocks");
    if (c.data_level == DataLevel::micro)
        fire("A4", kData, Paradigm::agent_based, "data and knowledge are available at the individual level");
    if (c.adaptive_behavior && (c.heterogeneity == Level::high || c.mixing == Mixing::networked))
        fire("A5", kBehavior, Paradigm::agent_based, "entities adapt, and adaptation varies across individuals");

    if (c.data_level == DataLevel::macro && c.heterogeneity == Level::low && c.mixing == Mixing::well_mixed)
        fire("S1", kData, Paradigm::stock_flow, "aggregate data on a homogeneous, well-mixed population");
    if (c.time_budget == TimeBudget::tight)
        fire("S2", kFeasibility, Paradigm::stock_flow, "a tight time budget favors the cheaper aggregate model");

    if (advice.agent_score != advice.stock_score)
        advice.recommendation = advice.agent_score > advice.stock_score ? Paradigm::agent_based : Paradigm::stock_flow;
    else
        advice.recommendation = c.time_budget == TimeBudget::tight ? Paradigm::stock_flow : Paradigm::agent_based;
    return advice;
}

} // namespace mmskit
