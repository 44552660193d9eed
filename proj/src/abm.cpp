#include "mmskit/abm.hpp"

#include "json_util.hpp"
#include "mmskit/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace mmskit::abm {

std::size_t AgentPopulation::count(EpiState state) const {
    return static_cast<std::size_t>(
        std::count_if(agents.begin(), agents.end(), [&](const Agent& a) { return a.state == state; }));
}

void check(const ContactConfig& cfg) {
    if (cfg.k_comm < 0) throw Error("contacts.k_comm must be >= 0");
    if (!(cfg.rewiring >= 0.0 && cfg.rewiring <= 1.0)) throw Error("contacts.rewiring must lie in [0, 1]");
    if (cfg.c_school < 0) throw Error("contacts.c_school must be >= 0");
    if (!(cfg.p_inf >= 0.0 && cfg.p_inf <= 1.0)) throw Error("contacts.p_inf must lie in [0, 1]");
    if (!(cfg.d_inf > 0.0) || !std::isfinite(cfg.d_inf)) throw Error("contacts.d_inf must be > 0");
    if (!(cfg.d_imm > 0.0) || !std::isfinite(cfg.d_imm)) throw Error("contacts.d_imm must be > 0");
}

void check(const PopulationConfig& cfg) {
    if (cfg.n == 0) throw Error("population.n must be >= 1");
    if (!(cfg.pupil_fraction >= 0.0 && cfg.pupil_fraction <= 1.0)) throw Error("population.pupil_fraction must lie in [0, 1]");
    if (!(cfg.adult_fraction >= 0.0 && cfg.adult_fraction <= 1.0)) throw Error("population.adult_fraction must lie in [0, 1]");
    if (cfg.pupil_fraction + cfg.adult_fraction > 1.0 + 1e-12)
        throw Error("population.pupil_fraction + adult_fraction must not exceed 1");
    if (!(cfg.pct_high_income >= 0.0 && cfg.pct_high_income <= 1.0))
        throw Error("population.pct_high_income must lie in [0, 1]");
    if (cfg.initial_infected > cfg.n) throw Error("population.initial_infected must not exceed population.n");
}

Graph small_world_graph(std::size_t n, int k, double p, Rng& rng) {
    const std::size_t half = static_cast<std::size_t>(std::max(k, 0) / 2);
    if (n > 0 && 2 * half >= n) throw Error("small-world degree must be below the population size");
    std::vector<std::set<std::uint32_t>> adj(n);
    auto link = [&](std::size_t a, std::size_t b) {
        adj[a].insert(static_cast<std::uint32_t>(b));
        adj[b].insert(static_cast<std::uint32_t>(a));
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 1; j <= half; ++j) link(i, (i + j) % n);
    }
    for (std::size_t j = 1; j <= half; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto b = static_cast<std::uint32_t>((i + j) % n);
            if (!adj[i].count(b) || !rng.bernoulli(p)) continue;
            if (adj[i].size() + 1 >= n) continue;
            std::uint32_t c;
            do {
                c = static_cast<std::uint32_t>(rng.index(n));
            } while (c == i || adj[i].count(c));
            adj[i].erase(b);
            adj[b].erase(static_cast<std::uint32_t>(i));
            link(i, c);
        }
    }
    Graph g(n);
    for (std::size_t i = 0; i < n; ++i) g[i].assign(adj[i].begin(), adj[i].end());
    return g;
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

std::size_t share(std::size_t n, double fraction) {
    return std::min(n, static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction)));
}

} // namespace

AgentPopulation make_population(const PopulationConfig& cfg, const ContactConfig& contacts, Rng& rng) {
    check(cfg);
    check(contacts);
    AgentPopulation pop;
    pop.agents.resize(cfg.n);

    std::vector<std::uint32_t> order(cfg.n);
    std::iota(order.begin(), order.end(), 0u);
    shuffle(order, rng);
    const std::size_t n_pupils = share(cfg.n, cfg.pupil_fraction);
    const std::size_t n_adults = std::min(cfg.n - n_pupils, share(cfg.n, cfg.adult_fraction));
    for (std::size_t i = 0; i < cfg.n; ++i) {
        pop.agents[order[i]].age = i < n_pupils ? AgeClass::pupil : i < n_pupils + n_adults ? AgeClass::adult : AgeClass::senior;
    }
    std::vector<std::uint32_t> others;
    for (std::uint32_t i = 0; i < cfg.n; ++i) (pop.agents[i].age == AgeClass::pupil ? pop.pupils : others).push_back(i);

    // Exact high-income shares within pupils and within everyone else.
    for (auto* group : {&pop.pupils, &others}) {
        std::vector<std::uint32_t> g = *group;
        shuffle(g, rng);
        const std::size_t high = share(g.size(), cfg.pct_high_income);
        for (std::size_t i = 0; i < g.size(); ++i) pop.agents[g[i]].income = i < high ? Income::high : Income::low;
    }

    pop.community = small_world_graph(cfg.n, contacts.k_comm, contacts.rewiring, rng);

    std::vector<std::uint32_t> pick(cfg.n);
    std::iota(pick.begin(), pick.end(), 0u);
    for (std::size_t i = 0; i < cfg.initial_infected; ++i) {
        std::swap(pick[i], pick[i + rng.index(cfg.n - i)]);
        pop.agents[pick[i]].state = EpiState::I;
    }
    pop.cumulative_infections = cfg.initial_infected;
    return pop;
}

std::vector<Contact> daily_contacts(const AgentPopulation& pop, const ContactConfig& cfg, bool schools_open, Rng& rng) {
    std::vector<Contact> out;
    for (std::uint32_t i = 0; i < pop.agents.size(); ++i) {
        if (pop.agents[i].state != EpiState::I) continue;
        for (std::uint32_t j : pop.community[i]) out.push_back({i, j, false});
    }
    const std::size_t p = pop.pupils.size();
    if (schools_open && p > 1) {
        for (std::size_t k = 0; k < p; ++k) {
            for (int c = 0; c < cfg.c_school; ++c) {
                std::size_t other = rng.index(p - 1);
                if (other >= k) ++other;
                out.push_back({pop.pupils[k], pop.pupils[other], true});
            }
        }
    }
    return out;
}

DailyStats abm_step(AgentPopulation& pop, const ContactConfig& cfg, const LearningRates& learning, bool schools_open,
                    Rng& rng) {
    const std::size_t n = pop.agents.size();
    std::vector<EpiState> start(n);
    for (std::size_t i = 0; i < n; ++i) start[i] = pop.agents[i].state;

    DailyStats stats;
    stats.day = pop.day + 1;
    stats.schools_open = schools_open;

    const auto contacts = daily_contacts(pop, cfg, schools_open, rng);
    stats.contacts = contacts.size();
    std::vector<bool> infected_today(n, false);
    auto transmit = [&](std::uint32_t from, std::uint32_t to) {
        if (start[from] != EpiState::I || start[to] != EpiState::S || infected_today[to]) return;
        if (!rng.bernoulli(cfg.p_inf)) return;
        infected_today[to] = true;
        Agent& target = pop.agents[to];
        target.state = EpiState::I;
        target.infector = from;
        target.secondary_count = 0;
        ++pop.agents[from].secondary_count;
        ++stats.new_infections;
    };
    for (const auto& c : contacts) {
        transmit(c.a, c.b);
        transmit(c.b, c.a);
    }

    const double p_recover = std::min(1.0, 1.0 / cfg.d_inf);
    const double p_wane = std::min(1.0, 1.0 / cfg.d_imm);
    for (std::uint32_t i = 0; i < n; ++i) {
        Agent& a = pop.agents[i];
        if (start[i] == EpiState::I) {
            if (rng.bernoulli(p_recover)) {
                a.state = EpiState::R;
                pop.recoveries.push_back({stats.day, i, a.secondary_count});
                ++stats.recoveries;
            }
        } else if (start[i] == EpiState::R) {
            if (rng.bernoulli(p_wane)) {
                a.state = EpiState::S;
                ++stats.waned;
            }
        }
    }

    for (std::uint32_t i : pop.pupils) {
        Agent& a = pop.agents[i];
        const double gain = schools_open ? 1.0 : a.income == Income::high ? learning.f_hi : learning.f_lo;
        a.learning += gain;
        stats.learning_added += gain;
    }

    pop.day = stats.day;
    pop.cumulative_infections += stats.new_infections;
    stats.susceptible = pop.count(EpiState::S);
    stats.infected = pop.count(EpiState::I);
    stats.recovered = pop.count(EpiState::R);
    stats.cumulative_infections = pop.cumulative_infections;
    stats.prevalence = n ? static_cast<double>(stats.infected) / static_cast<double>(n) : 0.0;
    return stats;
}

double estimate_reff(const AgentPopulation& pop, int window_days) {
    if (window_days < 1) throw Error("reff window must be at least one day");
    const int cutoff = pop.day - window_days;
    double sum = 0.0;
    std::size_t count = 0;
    for (auto it = pop.recoveries.rbegin(); it != pop.recoveries.rend() && it->day > cutoff; ++it) {
        sum += it->secondary_count;
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

std::string_view to_string(ClosurePolicy policy) {
    switch (policy) {
    case ClosurePolicy::none: return "none";
    case ClosurePolicy::reff_gt_1: return "reff_gt_1";
    case ClosurePolicy::reff_gt_1_and_i_gt_10pct: return "reff_gt_1_and_i_gt_10pct";
    }
    return "?";
}

std::optional<ClosurePolicy> policy_from_string(std::string_view s) {
    for (auto p : all_policies()) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

const std::vector<ClosurePolicy>& all_policies() {
    static const std::vector<ClosurePolicy> v{ClosurePolicy::none, ClosurePolicy::reff_gt_1,
                                              ClosurePolicy::reff_gt_1_and_i_gt_10pct};
    return v;
}

bool apply_policy(ClosurePolicy policy, double reff, std::uint64_t cumulative_infections, std::size_t n) {
    switch (policy) {
    case ClosurePolicy::none: return true;
    case ClosurePolicy::reff_gt_1: return !(reff > 1.0);
    case ClosurePolicy::reff_gt_1_and_i_gt_10pct:
        return !(reff > 1.0 && static_cast<double>(cumulative_infections) >= 0.10 * static_cast<double>(n));
    }
    return true;
}

double attack_rate(std::uint64_t total_infection_events, std::size_t n) {
    if (n == 0) throw Error("attack rate of an empty population");
    return static_cast<double>(total_infection_events) / static_cast<double>(n);
}

AbmConfig AbmConfig::defaults() {
    AbmConfig c;
    c.contacts.p_inf = kDefaultInfectionProbability;
    return c;
}

nlohmann::json AbmConfig::to_json() const {
    return {{"population",
             {{"n", population.n},
              {"pupil_fraction", population.pupil_fraction},
              {"adult_fraction", population.adult_fraction},
              {"pct_high_income", population.pct_high_income},
              {"initial_infected", population.initial_infected}}},
            {"contacts",
             {{"k_comm", contacts.k_comm},
              {"rewiring", contacts.rewiring},
              {"c_school", contacts.c_school},
              {"p_inf", contacts.p_inf},
              {"d_inf", contacts.d_inf},
              {"d_imm", contacts.d_imm}}},
            {"learning", {{"f_hi", learning.f_hi}, {"f_lo", learning.f_lo}}},
            {"policy", std::string(to_string(policy))},
            {"duration_days", duration_days},
            {"reff_window", reff_window}};
}

namespace {

using nlohmann::json;

void read_section(const json& j, const std::string& path,
                  const std::map<std::string, std::function<void(const json&, const std::string&)>>& fields) {
    detail::as_object(j, path);
    for (const auto& [key, value] : j.items()) {
        const std::string p = detail::child(path, key.c_str());
        auto it = fields.find(key);
        if (it == fields.end()) throw ParseError(p, "unknown key");
        it->second(value, p);
    }
}

std::size_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ParseError(path, "expected a non-negative integer");
    return v.get<std::size_t>();
}

} // namespace

AbmConfig AbmConfig::from_json(const json& j) {
    AbmConfig c = defaults();
    auto num = [](double& dst) { return [&dst](const json& v, const std::string& p) { dst = detail::as_number(v, p); }; };
    auto integer = [](int& dst) { return [&dst](const json& v, const std::string& p) { dst = detail::as_int(v, p); }; };
    auto count = [](std::size_t& dst) { return [&dst](const json& v, const std::string& p) { dst = as_count(v, p); }; };
    read_section(j, "",
                 {{"population",
                   [&](const json& v, const std::string& p) {
                       read_section(v, p,
                                    {{"n", count(c.population.n)},
                                     {"pupil_fraction", num(c.population.pupil_fraction)},
                                     {"adult_fraction", num(c.population.adult_fraction)},
                                     {"pct_high_income", num(c.population.pct_high_income)},
                                     {"initial_infected", count(c.population.initial_infected)}});
                   }},
                  {"contacts",
                   [&](const json& v, const std::string& p) {
                       read_section(v, p,
                                    {{"k_comm", integer(c.contacts.k_comm)},
                                     {"rewiring", num(c.contacts.rewiring)},
                                     {"c_school", integer(c.contacts.c_school)},
                                     {"p_inf", num(c.contacts.p_inf)},
                                     {"d_inf", num(c.contacts.d_inf)},
                                     {"d_imm", num(c.contacts.d_imm)}});
                   }},
                  {"learning",
                   [&](const json& v, const std::string& p) {
                       read_section(v, p, {{"f_hi", num(c.learning.f_hi)}, {"f_lo", num(c.learning.f_lo)}});
                   }},
                  {"policy",
                   [&](const json& v, const std::string& p) {
                       const auto policy = policy_from_string(detail::as_string(v, p));
                       if (!policy) throw ParseError(p, "unknown closure policy '" + v.get<std::string>() + "'");
                       c.policy = *policy;
                   }},
                  {"duration_days", integer(c.duration_days)},
                  {"reff_window", integer(c.reff_window)}});
    return c;
}

void AbmKernel::initialize(const nlohmann::json& config, const PortValues& f_init, std::uint64_t stream_seed) {
    json cfg = config.is_null() ? json::object() : config;
    json inputs = {{"pct_high_income_const", "population.pct_high_income"}};
    if (auto it = cfg.find("inputs"); it != cfg.end()) {
        inputs.update(detail::as_object(*it, "inputs"));
        cfg.erase("inputs");
    }
    for (const auto& [port, value] : f_init) {
        auto it = inputs.find(port);
        if (it == inputs.end() || !it->is_string()) throw Error("agent-based kernel has no F_init port '" + port + "'");
        std::string pointer = "/" + it->get<std::string>();
        std::replace(pointer.begin(), pointer.end(), '.', '/');
        cfg[json::json_pointer(pointer)] = value;
    }
    cfg_ = AbmConfig::from_json(cfg);
    if (cfg_.duration_days < 0) throw Error("duration_days must be >= 0");
    if (cfg_.reff_window < 1) throw Error("reff_window must be >= 1");

    rng_.emplace(stream_seed);
    pop_ = make_population(cfg_.population, cfg_.contacts, *rng_);
    days_closed_ = 0;
    last_ = DailyStats{};
    last_.susceptible = pop_.count(EpiState::S);
    last_.infected = pop_.count(EpiState::I);
    last_.recovered = pop_.count(EpiState::R);
    last_.cumulative_infections = pop_.cumulative_infections;
    last_.prevalence = static_cast<double>(last_.infected) / static_cast<double>(pop_.size());

    trace_ = Trace{};
    trace_.columns = {"susceptible", "infected", "recovered", "new_infections", "cumulative_infections",
                      "prevalence", "reff", "schools_open", "cumulated_learning"};
    trace_.append(0, {double(last_.susceptible), double(last_.infected), double(last_.recovered), 0.0,
                      double(last_.cumulative_infections), last_.prevalence, 0.0, 1.0, 0.0});
}

void AbmKernel::advance() {
    if (finished()) return;
    if (!rng_) throw Error("agent-based kernel advanced before initialize");
    const double reff = estimate_reff(pop_, cfg_.reff_window);
    const bool open = apply_policy(cfg_.policy, reff, pop_.cumulative_infections, pop_.size());
    last_ = abm_step(pop_, cfg_.contacts, cfg_.learning, open, *rng_);
    if (!open) ++days_closed_;
    trace_.append(pop_.day, {double(last_.susceptible), double(last_.infected), double(last_.recovered),
                             double(last_.new_infections), double(last_.cumulative_infections), last_.prevalence,
                             reff, open ? 1.0 : 0.0, mean_learning()});
}

bool AbmKernel::finished() const { return pop_.day >= cfg_.duration_days; }

double AbmKernel::mean_learning() const {
    if (pop_.pupils.empty()) return 0.0;
    double sum = 0.0;
    for (auto i : pop_.pupils) sum += pop_.agents[i].learning;
    return sum / static_cast<double>(pop_.pupils.size());
}

PortValues AbmKernel::intermediate_outputs() const {
    return {{"prevalence", last_.prevalence},
            {"new_infections", double(last_.new_infections)},
            {"schools_open", last_.schools_open ? 1.0 : 0.0},
            {"cumulated_learning", mean_learning()}};
}

void AbmKernel::accept(const PortValues& inputs) {
    ContactConfig next = cfg_.contacts;
    for (const auto& [port, value] : inputs) {
        if (port == "p_inf") next.p_inf = value;
        else if (port == "c_school") next.c_school = static_cast<int>(std::lround(value));
        else throw Error("agent-based kernel has no state port '" + port + "'");
    }
    check(next);
    cfg_.contacts = next;
}

PortValues AbmKernel::final_outputs() const {
    return {{"cumulated_learning", mean_learning()},
            {"counterfactual_learning", double(cfg_.duration_days)},
            {"attack_rate", attack_rate(pop_.cumulative_infections, pop_.size())},
            {"total_infections", double(pop_.cumulative_infections)},
            {"days_closed", double(days_closed_)}};
}

} // namespace mmskit::abm
