#include "mmskit/abm.hpp"
#include "mmskit/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace mmskit;
using namespace mmskit::abm;

namespace {

/// Agents 0..n-1, all adults and susceptible, with the given undirected edges.
AgentPopulation tiny(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    AgentPopulation pop;
    pop.agents.resize(n);
    pop.community.resize(n);
    for (auto [a, b] : edges) {
        pop.community[a].push_back(b);
        pop.community[b].push_back(a);
    }
    for (auto& adj : pop.community) std::sort(adj.begin(), adj.end());
    return pop;
}

ContactConfig certain_transmission() {
    ContactConfig c;
    c.p_inf = 1.0;
    c.d_inf = 1e9;
    c.d_imm = 1e9;
    return c;
}

} // namespace

TEST_CASE("one infected agent with three susceptible neighbours infects all three") {
    AgentPopulation pop = tiny(5, {{0, 1}, {0, 2}, {0, 3}, {3, 4}});
    pop.agents[0].state = EpiState::I;
    Rng rng(1);
    const auto stats = abm_step(pop, certain_transmission(), {}, false, rng);
    CHECK(stats.new_infections == 3);
    CHECK(pop.agents[4].state == EpiState::S);
    for (std::uint32_t a : {1u, 2u, 3u}) {
        CHECK(pop.agents[a].infector == std::optional<std::uint32_t>(0));
    }
    CHECK(pop.agents[0].secondary_count == 3);
    CHECK(pop.cumulative_infections == 3);
}

TEST_CASE("certain transmission matches a brute-force neighbourhood count") {
    Rng graph_rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + graph_rng.index(9);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (std::uint32_t a = 0; a < n; ++a)
            for (std::uint32_t b = a + 1; b < n; ++b)
                if (graph_rng.bernoulli(0.3)) edges.emplace_back(a, b);
        AgentPopulation pop = tiny(n, edges);
        for (auto& ag : pop.agents) {
            const double u = graph_rng.uniform();
            ag.state = u < 0.3 ? EpiState::I : (u < 0.4 ? EpiState::R : EpiState::S);
        }

        // Oracle: every susceptible agent adjacent to an infected one.
        std::set<std::uint32_t> expected;
        for (auto [a, b] : edges) {
            if (pop.agents[a].state == EpiState::I && pop.agents[b].state == EpiState::S) expected.insert(b);
            if (pop.agents[b].state == EpiState::I && pop.agents[a].state == EpiState::S) expected.insert(a);
        }
        const auto before = pop.agents;
        Rng rng(static_cast<std::uint64_t>(trial));
        const auto stats = abm_step(pop, certain_transmission(), {}, false, rng);
        CAPTURE(trial);
        CHECK(stats.new_infections == expected.size());
        for (std::uint32_t a = 0; a < n; ++a) {
            const bool infected_now = before[a].state == EpiState::S && pop.agents[a].state == EpiState::I;
            CHECK(infected_now == (expected.count(a) == 1));
        }
    }
}

TEST_CASE("no infection source or zero transmission gives no new infections") {
    ContactConfig c;
    c.p_inf = 0.3;
    PopulationConfig p;
    p.initial_infected = 0;
    Rng rng(5);
    AgentPopulation pop = make_population(p, c, rng);
    for (int d = 0; d < 10; ++d) {
        const auto s = abm_step(pop, c, {}, true, rng);
        CHECK(s.new_infections == 0);
        CHECK(s.susceptible == 1000);
        CHECK(s.learning_added == 200.0);
    }

    c.p_inf = 0.0;
    p.initial_infected = 50;
    AgentPopulation pop2 = make_population(p, c, rng);
    for (int d = 0; d < 30; ++d) CHECK(abm_step(pop2, c, {}, true, rng).new_infections == 0);
    CHECK(pop2.cumulative_infections == 50);
}

TEST_CASE("population composition") {
    ContactConfig c;
    PopulationConfig p;
    Rng rng(11);
    const auto pop = make_population(p, c, rng);
    CHECK(pop.size() == 1000);
    CHECK(pop.pupils.size() == 200);
    CHECK(pop.count(EpiState::I) == 5);
    CHECK(pop.cumulative_infections == 5);
    std::size_t high_pupils = 0, high = 0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        const bool hi = pop.agents[i].income == Income::high;
        high += hi;
        if (pop.agents[i].age == AgeClass::pupil) high_pupils += hi;
        CHECK(std::is_sorted(pop.community[i].begin(), pop.community[i].end()));
        CHECK(std::find(pop.community[i].begin(), pop.community[i].end(), i) == pop.community[i].end());
    }
    CHECK(high_pupils == 60);
    CHECK(high == 300);
}

TEST_CASE("small world graph keeps the mean degree") {
    Rng rng(3);
    const Graph g = small_world_graph(200, 10, 0.1, rng);
    std::size_t degree = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        degree += g[i].size();
        for (auto j : g[i]) CHECK(std::binary_search(g[j].begin(), g[j].end(), static_cast<std::uint32_t>(i)));
    }
    CHECK(degree == 200 * 10);
    CHECK_THROWS_AS(small_world_graph(10, 10, 0.1, rng), Error);
}

TEST_CASE("closing schools never adds contacts") {
    ContactConfig c;
    PopulationConfig p;
    p.initial_infected = 100;
    Rng rng(21);
    const auto pop = make_population(p, c, rng);
    Rng r1(1), r2(1);
    const auto open = daily_contacts(pop, c, true, r1);
    const auto closed = daily_contacts(pop, c, false, r2);
    CHECK(closed.size() < open.size());
    CHECK(open.size() - closed.size() == 200u * 8u);
    CHECK(std::none_of(closed.begin(), closed.end(), [](const Contact& x) { return x.school; }));
    CHECK(std::equal(closed.begin(), closed.end(), open.begin()));
}

TEST_CASE("learning depends on family income while closed") {
    AgentPopulation pop = tiny(3, {});
    pop.agents[0].age = AgeClass::pupil;
    pop.agents[1].age = AgeClass::pupil;
    pop.agents[1].income = Income::high;
    pop.pupils = {0, 1};
    Rng rng(1);
    ContactConfig c;
    c.c_school = 0;
    abm_step(pop, c, {}, false, rng);
    CHECK(pop.agents[0].learning == 0.5);
    CHECK(pop.agents[1].learning == 0.75);
    abm_step(pop, c, {}, true, rng);
    CHECK(pop.agents[0].learning == 1.5);
    CHECK(pop.agents[2].learning == 0.0);
}

TEST_CASE("effective reproduction number estimate") {
    AgentPopulation pop;
    pop.day = 20;
    CHECK(estimate_reff(pop, 14) == 0.0);
    pop.recoveries = {{3, 7, 9}, {18, 1, 3}, {20, 2, 1}};
    CHECK(estimate_reff(pop, 14) == 2.0);
    CHECK(estimate_reff(pop, 1) == 1.0);
    pop.recoveries = {{20, 2, 0}};
    CHECK(estimate_reff(pop, 14) == 0.0);
    CHECK_THROWS_AS(estimate_reff(pop, 0), Error);
}

TEST_CASE("closure policies") {
    CHECK_FALSE(apply_policy(ClosurePolicy::reff_gt_1, 1.2, 0, 1000));
    CHECK(apply_policy(ClosurePolicy::reff_gt_1, 1.0, 0, 1000));
    CHECK(apply_policy(ClosurePolicy::reff_gt_1_and_i_gt_10pct, 1.2, 50, 1000));
    CHECK_FALSE(apply_policy(ClosurePolicy::reff_gt_1_and_i_gt_10pct, 1.2, 100, 1000));
    CHECK(apply_policy(ClosurePolicy::reff_gt_1_and_i_gt_10pct, 0.8, 500, 1000));
    CHECK(apply_policy(ClosurePolicy::none, 5.0, 900, 1000));
    for (auto p : all_policies()) CHECK(policy_from_string(to_string(p)) == p);
    CHECK_FALSE(policy_from_string("always").has_value());
}

TEST_CASE("attack rate") {
    CHECK(attack_rate(1000, 1000) == 1.0);
    CHECK(attack_rate(0, 1000) == 0.0);
    CHECK(attack_rate(2500, 1000) == 2.5);
    CHECK_THROWS_AS(attack_rate(1, 0), Error);
}

TEST_CASE("config round trip and errors") {
    AbmConfig c = AbmConfig::defaults();
    CHECK(c.contacts.p_inf == kDefaultInfectionProbability);
    c.policy = ClosurePolicy::reff_gt_1;
    c.population.n = 400;
    c.learning.f_hi = 0.6;
    const auto back = AbmConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(AbmConfig::from_json(nlohmann::json::object()).to_json() == AbmConfig::defaults().to_json());
    CHECK_THROWS_AS(AbmConfig::from_json({{"contacts", {{"p_info", 0.1}}}}), ParseError);
    CHECK_THROWS_AS(AbmConfig::from_json({{"policy", "always"}}), ParseError);
    CHECK_THROWS_AS(AbmConfig::from_json({{"population", {{"n", -3}}}}), ParseError);
}

TEST_CASE("kernel conserves the population and stays eradicated") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        AbmKernel k;
        auto cfg = AbmConfig::defaults().to_json();
        cfg["duration_days"] = 200;
        k.initialize(cfg, {}, seed);
        const auto& t = k.trace();
        while (!k.finished()) k.advance();
        REQUIRE(t.rows.size() == 201);
        const auto s = t.column("susceptible"), i = t.column("infected"), r = t.column("recovered");
        const auto ni = t.column("new_infections");
        bool eradicated = false;
        for (const auto& row : t.rows) {
            CHECK(row[s] + row[i] + row[r] == 1000.0);
            if (eradicated) CHECK(row[ni] == 0.0);
            if (row[i] == 0.0) eradicated = true;
        }
        const auto out = k.final_outputs();
        CHECK(out.at("attack_rate") == attack_rate(k.population().cumulative_infections, 1000));
        CHECK(out.at("counterfactual_learning") == 200.0);
        CHECK(out.at("cumulated_learning") == 200.0);
        CHECK(out.at("days_closed") == 0.0);
    }
}

TEST_CASE("kernel ports") {
    AbmKernel k;
    auto cfg = AbmConfig::defaults().to_json();
    cfg["duration_days"] = 5;
    k.initialize(cfg, {{"pct_high_income_const", 0.5}}, 1);
    CHECK(k.config().population.pct_high_income == 0.5);
    k.accept({{"p_inf", 0.0}, {"c_school", 2.0}});
    CHECK(k.config().contacts.p_inf == 0.0);
    CHECK(k.config().contacts.c_school == 2);
    CHECK_THROWS_AS(k.accept({{"nothing", 1.0}}), Error);
    AbmKernel k2;
    CHECK_THROWS_AS(k2.initialize(cfg, {{"nothing", 1.0}}, 1), Error);

    AbmKernel a, b;
    a.initialize(cfg, {}, 77);
    b.initialize(cfg, {}, 77);
    while (!a.finished()) a.advance();
    while (!b.finished()) b.advance();
    CHECK(a.trace() == b.trace());
}
