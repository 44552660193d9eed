// Acceptance checks for the school-closure multi-model pipeline. Prints one
// PASS/FAIL line per criterion; exits non-zero when any selected criterion
// fails.

#include "random_mms.hpp"

#include "mmskit/abm.hpp"
#include "mmskit/advisor.hpp"
#include "mmskit/casestudy.hpp"
#include "mmskit/decomposition.hpp"
#include "mmskit/mms_json.hpp"
#include "mmskit/scales.hpp"
#include "mmskit/sdm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace mmskit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string title;
    double budget_seconds;
    std::function<Outcome()> check;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

// Time dimension with five levels, as used by the case study.
const Dimension& five_levels() {
    static const Dimension d{"time", {"day", "week", "month", "year", "decade"}};
    return d;
}

// --- 1 -------------------------------------------------------------------

Outcome decomposition_fidelity() {
    const Cld cld = casestudy::case_cld();
    const auto dec = decompose(cld, {"time"});
    const bool ok = dec.groups.size() == 2 && dec.cross_links.size() == 2;
    std::string ids;
    for (int id : dec.cross_links) ids += (ids.empty() ? "" : ",") + std::to_string(id);
    return {ok, std::to_string(dec.groups.size()) + " groups, cross links {" + ids + "}"};
}

// --- 2 -------------------------------------------------------------------

Outcome coupling_inference() {
    const Dimension& d = five_levels();
    bool ok = infer_coupling_template(ScaleInterval::make("day", "year"), ScaleInterval::make("year", "decade"), d) ==
              CouplingTemplate::serial;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t g = 0; g < d.levels.size(); ++g)
        for (std::size_t e = g; e < d.levels.size(); ++e) spans.emplace_back(g, e);

    int pairs = 0;
    for (auto [ga, ea] : spans) {
        for (auto [gb, eb] : spans) {
            ++pairs;
            // Level-set oracle: one shared boundary level is contiguous, more
            // sharing is overlapping, none is separated.
            std::set<std::size_t> a, b, shared;
            for (auto i = ga; i <= ea; ++i) a.insert(i);
            for (auto i = gb; i <= eb; ++i) b.insert(i);
            for (auto i : a)
                if (b.count(i)) shared.insert(i);
            const bool boundary = shared.size() == 1 && ((*shared.begin() == ea && *shared.begin() == gb) ||
                                                         (*shared.begin() == eb && *shared.begin() == ga));
            const bool contiguous = boundary;
            const bool overlapping = !shared.empty() && !boundary;
            const bool separated = shared.empty();
            if (overlapping + contiguous + separated != 1) ok = false;

            const auto ia = ScaleInterval::make(d.levels[ga], d.levels[ea]);
            const auto ib = ScaleInterval::make(d.levels[gb], d.levels[eb]);
            const auto rel = interval_relation(ia, ib, d);
            const auto expected = overlapping ? IntervalRelation::overlapping
                                  : contiguous ? IntervalRelation::contiguous
                                               : IntervalRelation::separated;
            if (rel != expected) ok = false;
            const auto tmpl = infer_coupling_template(ia, ib, d);
            if (tmpl != (overlapping ? CouplingTemplate::parallel : CouplingTemplate::serial)) ok = false;
            if (tmpl != infer_coupling_template(ib, ia, d)) ok = false;
        }
    }
    return {ok, std::to_string(pairs) + " ordered interval pairs over " + std::to_string(spans.size()) +
                    " intervals"};
}

// --- 3 -------------------------------------------------------------------

Outcome mapper_exactness() {
    const auto mappers = casestudy::case_mappers(casestudy::kHspPre, 730.0);
    const double m1 = eval_mapper(mappers[0], {{"hsp_pre", 0.4}, {"L", 0.9}, {"L_cf", 1.0}}).at("hsp");
    const double in = 0.3;
    const double m2 = eval_mapper(mappers[1], {{"hif", in}}).at("pct_high_income");
    const bool ok = std::fabs(m1 - 0.36) <= 1e-12 && std::memcmp(&m2, &in, sizeof in) == 0;
    return {ok, fmt("M1 = %.17g, M2 bit-exact = ", m1) + (std::memcmp(&m2, &in, sizeof in) == 0 ? "yes" : "no")};
}

// --- 4 -------------------------------------------------------------------

Outcome conservation_and_eradication() {
    int conservation_breaks = 0, eradication_breaks = 0, eradicated_runs = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        abm::AbmKernel k;
        auto cfg = abm::AbmConfig::defaults();
        cfg.population.n = 1000;
        cfg.duration_days = 730;
        k.initialize(cfg.to_json(), {}, stream_seed(seed, "acceptance"));
        while (!k.finished()) k.advance();
        const Trace& t = k.trace();
        const auto s = t.column("susceptible"), i = t.column("infected"), r = t.column("recovered");
        const auto ni = t.column("new_infections");
        bool eradicated = false;
        for (const auto& row : t.rows) {
            if (row[s] + row[i] + row[r] != 1000.0) ++conservation_breaks;
            if (eradicated && row[ni] != 0.0) ++eradication_breaks;
            if (row[i] == 0.0) eradicated = true;
        }
        eradicated_runs += eradicated;
    }
    return {conservation_breaks == 0 && eradication_breaks == 0,
            std::to_string(conservation_breaks) + " conservation and " + std::to_string(eradication_breaks) +
                " post-eradication violations; " + std::to_string(eradicated_runs) + "/30 runs eradicated"};
}

// --- 5, 6 ----------------------------------------------------------------

const casestudy::SuiteReport& suite() {
    static const casestudy::SuiteReport report = [] {
        casestudy::ScenarioSuite s;
        s.replications = 30;
        return casestudy::run_suite(s);
    }();
    return report;
}

Outcome short_term_ordering() {
    const auto& r = suite();
    const double none = r.summary(abm::ClosurePolicy::none).mean_attack_rate;
    const double immediate = r.summary(abm::ClosurePolicy::reff_gt_1).mean_attack_rate;
    const double delayed = r.summary(abm::ClosurePolicy::reff_gt_1_and_i_gt_10pct).mean_attack_rate;
    const bool reduced = immediate < 0.8 * none;
    const bool ineffective = std::fabs(delayed - none) < 0.15 * none;
    return {reduced && ineffective,
            fmt("AR none %.4f, reff_gt_1 %.4f (needs < %.4f), delayed %.4f", none, immediate, 0.8 * none, delayed) +
                (reduced ? "" : "; immediate closure does not reduce the attack rate by 20%") +
                (ineffective ? "" : "; delayed closure differs by 15% or more")};
}

Outcome long_term_ordering() {
    const auto& r = suite();
    std::map<std::pair<std::uint64_t, double>, const casestudy::LongTermRow*> baseline;
    for (const auto& row : r.long_term)
        if (row.policy == abm::ClosurePolicy::none) baseline[{row.seed, row.year}] = &row;
    int compared = 0, violations = 0;
    for (const auto& row : r.long_term) {
        if (row.policy == abm::ClosurePolicy::none) continue;
        const auto it = baseline.find({row.seed, row.year});
        if (it == baseline.end()) {
            ++violations;
            continue;
        }
        ++compared;
        if (row.hsp > it->second->hsp || row.hif > it->second->hif) ++violations;
    }
    return {compared > 0 && violations == 0,
            std::to_string(compared) + " seed-year points compared, " + std::to_string(violations) + " above baseline"};
}

// --- 7 -------------------------------------------------------------------

double decay_endpoint(double dt) {
    sdm::StockFlowSystem s;
    s.stocks = {{"x", 1.0}};
    s.parameters = {{"tau", 2.0}};
    s.flows = {{"x", Expression::parse("(0 - x) / tau")}};
    s.dt = dt;
    s.horizon = 10.0;
    for (long i = 0, n = std::lround(s.horizon / dt); i < n; ++i) sdm::advance(s);
    return s.stocks.at("x");
}

Outcome euler_correctness() {
    const double exact = std::exp(-10.0 / 2.0);
    const double e1 = std::fabs(decay_endpoint(0.1) - exact);
    const double e2 = std::fabs(decay_endpoint(0.05) - exact);
    const double ratio = e1 / e2;
    // Relative endpoint error at most 2 dt.
    const bool within = e1 / exact <= 2.0 * 0.1 && e2 / exact <= 2.0 * 0.05;
    return {ratio >= 1.8 && ratio <= 2.2 && within,
            fmt("relative error %.4g at dt 0.1, %.4g at dt 0.05, ratio %.4f", e1 / exact, e2 / exact, ratio)};
}

// --- 8 -------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const std::string& cli) {
    const auto root = std::filesystem::temp_directory_path() / ("mmskit_acceptance_" + std::to_string(::getpid()));
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
    const std::string mms = MMSKIT_SOURCE_DIR "/data/school_closure_mms.json";
    for (const char* name : {"a", "b"}) {
        const std::string cmd = "\"" + cli + "\" run \"" + mms + "\" --seeds 42 --replications 30 --out \"" +
                                (root / name).string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) {
            std::filesystem::remove_all(root);
            return {false, "command failed: " + cmd};
        }
    }
    int files = 0, differing = 0;
    for (const auto& entry : std::filesystem::directory_iterator(root / "a")) {
        if (entry.path().extension() != ".csv") continue;
        ++files;
        if (slurp(entry.path()) != slurp(root / "b" / entry.path().filename())) ++differing;
    }
    std::filesystem::remove_all(root);
    return {files > 0 && differing == 0,
            std::to_string(files) + " CSV files compared, " + std::to_string(differing) + " differ"};
}

// --- 9 -------------------------------------------------------------------

Outcome round_trip() {
    int failures = 0;
    const Mms m = casestudy::build_case_mms();
    if (parse_mms_text(dump_mms(m)) != m) ++failures;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const Mms r = testing::random_mms(seed);
        if (!validate_mms(r).empty() || parse_mms_text(dump_mms(r)) != r) ++failures;
    }
    return {failures == 0, "case MMS + 100 random documents, " + std::to_string(failures) + " mismatches"};
}

// --- 10 ------------------------------------------------------------------

Outcome advisor_consistency() {
    ParadigmCriteria short_term;
    short_term.heterogeneity = Level::high;
    short_term.mixing = Mixing::networked;
    short_term.discreteness_matters = true;
    short_term.data_level = DataLevel::micro;
    ParadigmCriteria long_term;
    long_term.time_budget = TimeBudget::tight;

    const auto a = advise_paradigm(short_term);
    const auto b = advise_paradigm(long_term);
    const auto& rows = paradigm_criteria_rows();
    auto cites = [&](const ParadigmAdvice& adv) {
        return std::any_of(adv.rationale.begin(), adv.rationale.end(), [&](const RationaleRow& r) {
            return std::find(rows.begin(), rows.end(), r.criterion) != rows.end();
        });
    };
    const bool ok = a.recommendation == Paradigm::agent_based && b.recommendation == Paradigm::stock_flow &&
                    cites(a) && cites(b);
    return {ok, std::string(to_string(a.recommendation)) + " (" + std::to_string(a.rationale.size()) + " rows), " +
                    std::string(to_string(b.recommendation)) + " (" + std::to_string(b.rationale.size()) + " rows)"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmskit acceptance checks"};
    std::vector<int> only;
    std::string cli_path = MMSKIT_CLI_PATH;
    app.add_option("--criterion", only, "run only these criteria")->check(CLI::Range(1, 10));
    app.add_option("--cli", cli_path, "mmskit executable used by the determinism check");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "decomposition fidelity", 1.0, decomposition_fidelity},
        {2, "coupling inference", 1.0, coupling_inference},
        {3, "mapper exactness", 1.0, mapper_exactness},
        {4, "conservation and eradication", 120.0, conservation_and_eradication},
        {5, "short-term policy ordering", 300.0, short_term_ordering},
        {6, "long-term policy ordering", 60.0, long_term_ordering},
        {7, "Euler correctness", 1.0, euler_correctness},
        {8, "determinism of run", 60.0, [&] { return determinism(cli_path); }},
        {9, "document round trip", 10.0, round_trip},
        {10, "advisor consistency", 1.0, advisor_consistency},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_seconds) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", c.budget_seconds);
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.number << ". " << c.title << ": " << o.detail
                  << fmt(" [%.3f s]", secs) << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
