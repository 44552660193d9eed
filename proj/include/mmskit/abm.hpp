#pragma once

#include "mmskit/engine.hpp"
#include "mmskit/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmskit::abm {

enum class AgeClass : std::uint8_t { pupil, adult, senior };
enum class EpiState : std::uint8_t { S, I, R };
enum class Income : std::uint8_t { low, high };

struct Agent {
    AgeClass age = AgeClass::adult;
    EpiState state = EpiState::S;
    Income income = Income::low;
    std::optional<std::uint32_t> infector;
    /// Infections caused during the current (or most recent) infectious episode.
    std::uint32_t secondary_count = 0;
    double learning = 0.0;
};

struct RecoveryEvent {
    int day = 0;
    std::uint32_t agent = 0;
    std::uint32_t secondary_count = 0;
};

using Graph = std::vector<std::vector<std::uint32_t>>;

struct AgentPopulation {
    std::vector<Agent> agents;
    Graph community;
    std::vector<std::uint32_t> pupils;
    /// Days simulated so far.
    int day = 0;
    std::uint64_t cumulative_infections = 0;
    std::vector<RecoveryEvent> recoveries;

    std::size_t size() const { return agents.size(); }
    std::size_t count(EpiState state) const;
};

struct ContactConfig {
    int k_comm = 10;
    double rewiring = 0.1;
    int c_school = 8;
    double p_inf = 0.0;
    double d_inf = 7.0;
    double d_imm = 180.0;
};

/// Daily learning units for pupils while schools are closed.
struct LearningRates {
    double f_hi = 0.75;
    double f_lo = 0.50;
};

struct PopulationConfig {
    std::size_t n = 1000;
    double pupil_fraction = 0.20;
    double adult_fraction = 0.45;
    double pct_high_income = 0.30;
    std::size_t initial_infected = 5;
};

/// Throws Error naming the first out-of-range field.
void check(const ContactConfig& cfg);
void check(const PopulationConfig& cfg);

/// Watts-Strogatz ring of degree k (rounded down to even) with each edge
/// rewired with probability p. Adjacency lists are sorted.
Graph small_world_graph(std::size_t n, int k, double p, Rng& rng);

/// Assigns age classes and family incomes, wires the community network and
/// seeds `initial_infected` distinct agents (counted as infection events).
AgentPopulation make_population(const PopulationConfig& pop, const ContactConfig& contacts, Rng& rng);

/// A contact between two agents; `school` marks the school layer.
struct Contact {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    bool school = false;

    bool operator==(const Contact&) const = default;
};

/// The day's contacts that could carry infection: every community edge of
/// each infected agent, followed (when schools are open) by `c_school`
/// uniform draws among pupils for every pupil. Consumes randomness only for
/// the school layer.
std::vector<Contact> daily_contacts(const AgentPopulation& pop, const ContactConfig& cfg, bool schools_open, Rng& rng);

struct DailyStats {
    int day = 0;
    std::uint32_t new_infections = 0;
    std::uint32_t recoveries = 0;
    std::uint32_t waned = 0;
    std::size_t susceptible = 0;
    std::size_t infected = 0;
    std::size_t recovered = 0;
    std::uint64_t cumulative_infections = 0;
    double prevalence = 0.0;
    double learning_added = 0.0;
    std::size_t contacts = 0;
    bool schools_open = true;
};

/// One day: transmission over the day's contacts (states as of the start of
/// the day), recovery with probability 1/d_inf, waning with probability
/// 1/d_imm, then pupil learning.
DailyStats abm_step(AgentPopulation& pop, const ContactConfig& cfg, const LearningRates& learning,
                    bool schools_open, Rng& rng);

/// Mean secondary count over recoveries in the trailing `window_days` days;
/// 0 when none. Throws Error for window_days < 1.
double estimate_reff(const AgentPopulation& pop, int window_days);

enum class ClosurePolicy { none, reff_gt_1, reff_gt_1_and_i_gt_10pct };

std::string_view to_string(ClosurePolicy policy);
std::optional<ClosurePolicy> policy_from_string(std::string_view s);
const std::vector<ClosurePolicy>& all_policies();

/// Whether schools are open today.
bool apply_policy(ClosurePolicy policy, double reff, std::uint64_t cumulative_infections, std::size_t n);

/// Infection events per person; may exceed 1. Throws Error for n == 0.
double attack_rate(std::uint64_t total_infection_events, std::size_t n);

/// p_inf giving the default early-epidemic reproduction number with schools
/// open (see tools/calibrate).
inline constexpr double kDefaultInfectionProbability = 0.0372;

struct AbmConfig {
    PopulationConfig population;
    ContactConfig contacts;
    LearningRates learning;
    ClosurePolicy policy = ClosurePolicy::none;
    int duration_days = 730;
    int reff_window = 14;

    static AbmConfig defaults();
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults; unknown keys raise ParseError.
    static AbmConfig from_json(const nlohmann::json& j);
};

/// Agent-based school-closure kernel. Ports: F_init `pct_high_income_const`
/// (family income share); O_f `cumulated_learning`, `counterfactual_learning`,
/// `attack_rate`, `total_infections`, `days_closed`; O_i `prevalence`,
/// `new_infections`, `schools_open`, `cumulated_learning`; S/B accepts
/// `p_inf`, `c_school`.
class AbmKernel : public SubmodelInstance {
public:
    void initialize(const nlohmann::json& config, const PortValues& f_init, std::uint64_t stream_seed) override;
    void advance() override;
    bool finished() const override;
    PortValues intermediate_outputs() const override;
    void accept(const PortValues& inputs) override;
    PortValues final_outputs() const override;
    long tick() const override { return pop_.day; }
    double clock_days() const override { return pop_.day; }
    const Trace& trace() const override { return trace_; }

    const AgentPopulation& population() const { return pop_; }
    const AbmConfig& config() const { return cfg_; }

private:
    double mean_learning() const;

    AbmConfig cfg_;
    AgentPopulation pop_;
    std::optional<Rng> rng_;
    Trace trace_;
    DailyStats last_;
    int days_closed_ = 0;
};

} // namespace mmskit::abm
