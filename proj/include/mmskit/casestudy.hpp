#pragma once

#include "mmskit/abm.hpp"
#include "mmskit/cld.hpp"
#include "mmskit/engine.hpp"
#include "mmskit/mms.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mmskit::casestudy {

/// Pre-pandemic share of highly skilled pupils used by the learning mapper.
inline constexpr double kHspPre = 0.4;

/// The shipped school-closure CLD document (data/school_closure_cld.json).
const std::string& cld_document();
Cld case_cld();

/// M1: cumulated learning -> % highly skilled pupils
/// (`hsp_pre * L / L_cf`); M2: value transfer of % high-income families.
std::vector<Mapper> case_mappers(double hsp_pre, double counterfactual_learning);

/// Decomposes the shipped CLD into short/long time bands, assigns the
/// agent-based and stock-flow paradigms and binds M1/M2. Cycle bound 1.
Mms build_case_mms();

struct ScenarioSuite {
    std::vector<abm::ClosurePolicy> policies = abm::all_policies();
    int replications = 30;
    std::uint64_t base_seed = 42;
    int pandemic_duration = 730;
    double sdm_horizon = 30.0;
    bool second_pandemic = false;
    /// Extra dotted-path overrides applied to every run.
    Scenario overrides = Scenario::object();
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned jobs = 0;

    /// Throws Error when replications < 1 or durations are not positive.
    void check() const;
};

struct SeedRow {
    abm::ClosurePolicy policy = abm::ClosurePolicy::none;
    std::uint64_t seed = 0;
    double attack_rate = 0.0;
    double total_learning = 0.0;
    double final_hsp = 0.0;
    double final_hif = 0.0;
};

struct LongTermRow {
    abm::ClosurePolicy policy = abm::ClosurePolicy::none;
    std::uint64_t seed = 0;
    double year = 0.0;
    double hsp = 0.0;
    double hif = 0.0;
};

struct TransferRow {
    abm::ClosurePolicy policy = abm::ClosurePolicy::none;
    std::uint64_t seed = 0;
    TransferRecord record;
};

struct PolicySummary {
    abm::ClosurePolicy policy = abm::ClosurePolicy::none;
    int replications = 0;
    double mean_attack_rate = 0.0;
    double sd_attack_rate = 0.0;
    double mean_learning = 0.0;
    double mean_final_hsp = 0.0;
    double mean_final_hif = 0.0;
};

struct SuiteReport {
    std::vector<PolicySummary> summaries;
    /// Ordered by policy, then seed.
    std::vector<SeedRow> rows;
    std::vector<LongTermRow> long_term;
    std::vector<TransferRow> transfers;

    const PolicySummary& summary(abm::ClosurePolicy policy) const;
    std::string summary_text() const;
};

/// Every policy x seed (seeds base_seed .. base_seed + replications - 1)
/// through the engine. Errors carry the (policy, seed) context.
SuiteReport run_suite(const ScenarioSuite& suite, const Mms& mms);
SuiteReport run_suite(const ScenarioSuite& suite);

/// Mean/sd summaries computed from seed rows.
std::vector<PolicySummary> summarize(const std::vector<SeedRow>& rows);

/// suite_summary.txt, attack_rates.csv, long_term.csv, transfers.csv.
void write_suite(const SuiteReport& report, const std::filesystem::path& dir);

/// Reads attack_rates.csv and long_term.csv back from an output directory.
SuiteReport read_suite(const std::filesystem::path& dir);

} // namespace mmskit::casestudy
