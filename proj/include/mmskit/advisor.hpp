#pragma once

#include "mmskit/mms.hpp"

#include <string>
#include <vector>

namespace mmskit {

enum class Level { low, high };
enum class Mixing { well_mixed, networked };
enum class DataLevel { micro, macro };
enum class TimeBudget { tight, ample };

struct ParadigmCriteria {
    Level heterogeneity = Level::low;
    Mixing mixing = Mixing::well_mixed;
    bool adaptive_behavior = false;
    bool discreteness_matters = false;
    DataLevel data_level = DataLevel::macro;
    TimeBudget time_budget = TimeBudget::ample;
    /// Whether it is known when a discrete event (eradication, extinction)
    /// must be imposed on a continuous model.
    bool threshold_known = false;
};

struct RationaleRow {
    std::string rule;
    /// Paradigm-selection criterion the rule is drawn from.
    std::string criterion;
    Paradigm favors = Paradigm::agent_based;
    std::string explanation;

    bool operator==(const RationaleRow&) const = default;
};

struct ParadigmAdvice {
    Paradigm recommendation = Paradigm::agent_based;
    std::vector<RationaleRow> rationale;
    int agent_score = 0;
    int stock_score = 0;

    bool operator==(const ParadigmAdvice&) const = default;
};

/// The criterion rows rules may cite.
const std::vector<std::string>& paradigm_criteria_rows();

/// Rule-based recommendation. Agent-side rules win on score; a tie goes to
/// stock_flow when the time budget is tight and to agent_based otherwise.
ParadigmAdvice advise_paradigm(const ParadigmCriteria& criteria);

} // namespace mmskit
