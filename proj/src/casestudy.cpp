#include "mmskit/casestudy.hpp"

#include "csv_util.hpp"
#include "mmskit/decomposition.hpp"
#include "mmskit/error.hpp"
#include "mmskit/paradigms.hpp"
#include "mmskit/sdm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace mmskit::casestudy {

Cld case_cld() { return parse_cld(nlohmann::json::parse(cld_document())); }

std::vector<Mapper> case_mappers(double hsp_pre, double counterfactual_learning) {
    Mapper m1;
    m1.id = "M1";
    m1.kind = MapperKind::expression;
    m1.inputs = {"L", "hsp_pre", "L_cf"};
    m1.outputs = {"hsp"};
    m1.parameters = {{"hsp_pre", hsp_pre}, {"L_cf", counterfactual_learning}};
    m1.body = "hsp_pre * L / L_cf";

    Mapper m2;
    m2.id = "M2";
    m2.kind = MapperKind::value_transfer;
    m2.inputs = {"hif"};
    m2.outputs = {"pct_high_income"};
    return {m1, m2};
}

Mms build_case_mms() {
    const Cld cld = case_cld();
    const Decomposition dec = decompose(cld, {"time", "governance"});

    BuildOptions options;
    options.name = "school_closure";
    options.version = "1.0";
    options.max_iterations = 1;
    nlohmann::json abm_config = abm::AbmConfig::defaults().to_json();
    abm_config["inputs"] = {{"pct_high_income_const", "population.pct_high_income"}};
    options.configs["short"] = abm_config;
    options.configs["long"] = sdm::default_config();

    Mms mms = build_mms(cld, dec, {{"short", Paradigm::agent_based}, {"long", Paradigm::stock_flow}},
                        case_mappers(kHspPre, abm::AbmConfig::defaults().duration_days), {{17, "M1"}, {16, "M2"}},
                        options);
    mms.meta.constraints = {"desk scale: a full policy suite runs on one workstation in minutes",
                            "exogenous long-term factors stay constant over the horizon"};
    const ValidationReport report = validate_mms(mms);
    if (!report.empty()) {
        std::ostringstream os;
        os << "case MMS does not validate: " << report;
        throw Error(os.str());
    }
    return mms;
}

void ScenarioSuite::check() const {
    if (replications < 1) throw Error("replications must be >= 1");
    if (pandemic_duration < 1) throw Error("pandemic duration must be positive");
    if (!(sdm_horizon > 0.0)) throw Error("SDM horizon must be positive");
    if (policies.empty()) throw Error("no policies selected");
    if (!overrides.is_null() && !overrides.is_object()) throw Error("overrides must be a JSON object");
}

const PolicySummary& SuiteReport::summary(abm::ClosurePolicy policy) const {
    for (const auto& s : summaries) {
        if (s.policy == policy) return s;
    }
    throw Error("no summary for policy '" + std::string(abm::to_string(policy)) + "'");
}

std::string SuiteReport::summary_text() const {
    std::ostringstream os;
    os << "policy                     reps  attack_rate (sd)         learning    final_hsp   final_hif\n";
    for (const auto& s : summaries) {
        char line[256];
        std::snprintf(line, sizeof line, "%-26s %4d  %.4f (%.4f)   %10.3f   %9.5f   %9.5f\n",
                      std::string(abm::to_string(s.policy)).c_str(), s.replications, s.mean_attack_rate,
                      s.sd_attack_rate, s.mean_learning, s.mean_final_hsp, s.mean_final_hif);
        os << line;
    }
    return os.str();
}

std::vector<PolicySummary> summarize(const std::vector<SeedRow>& rows) {
    std::vector<PolicySummary> out;
    for (const auto& r : rows) {
        if (std::none_of(out.begin(), out.end(), [&](const PolicySummary& s) { return s.policy == r.policy; }))
            out.push_back({r.policy});
    }
    for (auto& s : out) {
        std::vector<const SeedRow*> mine;
        for (const auto& r : rows) {
            if (r.policy == s.policy) mine.push_back(&r);
        }
        const double n = static_cast<double>(mine.size());
        s.replications = static_cast<int>(mine.size());
        for (const auto* r : mine) {
            s.mean_attack_rate += r->attack_rate / n;
            s.mean_learning += r->total_learning / n;
            s.mean_final_hsp += r->final_hsp / n;
            s.mean_final_hif += r->final_hif / n;
        }
        if (mine.size() > 1) {
            double ss = 0.0;
            for (const auto* r : mine) ss += (r->attack_rate - s.mean_attack_rate) * (r->attack_rate - s.mean_attack_rate);
            s.sd_attack_rate = std::sqrt(ss / (n - 1.0));
        }
    }
    return out;
}

namespace {

const SubmodelSpec& only(const Mms& mms, Paradigm p) {
    const SubmodelSpec* found = nullptr;
    for (const auto& s : mms.submodels) {
        if (s.paradigm != p) continue;
        if (found) throw Error("suite expects exactly one " + std::string(to_string(p)) + " sub-model");
        found = &s;
    }
    if (!found) throw Error("suite expects exactly one " + std::string(to_string(p)) + " sub-model");
    return *found;
}

struct SeedOutcome {
    SeedRow row;
    std::vector<LongTermRow> long_term;
    std::vector<TransferRow> transfers;
};

} // namespace

SuiteReport run_suite(const ScenarioSuite& suite, const Mms& mms) {
    suite.check();
    const std::string abm_id = only(mms, Paradigm::agent_based).id;
    const std::string sdm_id = only(mms, Paradigm::stock_flow).id;
    const Registry registry = builtin_registry(mms);

    struct Task {
        abm::ClosurePolicy policy;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (auto p : suite.policies) {
        for (int r = 0; r < suite.replications; ++r) tasks.push_back({p, suite.base_seed + static_cast<std::uint64_t>(r)});
    }

    std::vector<SeedOutcome> outcomes(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());

    auto work = [&](std::size_t i) {
        const Task& t = tasks[i];
        Scenario scenario = suite.overrides.is_null() ? Scenario::object() : suite.overrides;
        scenario[abm_id + ".policy"] = std::string(abm::to_string(t.policy));
        scenario[abm_id + ".duration_days"] = suite.pandemic_duration;
        scenario[sdm_id + ".horizon"] = suite.sdm_horizon;
        for (const auto& c : mms.conduits) {
            if (c.from.submodel == abm_id && c.mapper) {
                const Mapper* m = mms.mapper(*c.mapper);
                if (m && m->parameters.count("L_cf"))
                    scenario["mappers." + m->id + ".L_cf"] = static_cast<double>(suite.pandemic_duration);
            }
        }
        if (suite.second_pandemic) scenario["meta.max_iterations"] = 2;

        const RunResult result = run(mms, registry, scenario, t.seed);
        SeedOutcome& out = outcomes[i];
        out.row.policy = t.policy;
        out.row.seed = t.seed;
        const SubmodelRun* first_abm = nullptr;
        for (const auto& r : result.runs) {
            if (r.submodel == abm_id && !first_abm) first_abm = &r;
            if (r.submodel == sdm_id) {
                const auto tcol = r.trace.column("time");
                const auto hcol = r.trace.column("hsp");
                const auto fcol = r.trace.column("hif");
                const double offset = static_cast<double>(r.iteration - 1) * suite.sdm_horizon;
                for (const auto& row : r.trace.rows) {
                    const double tm = row[tcol];
                    if (std::fabs(tm - std::round(tm)) < 1e-9)
                        out.long_term.push_back({t.policy, t.seed, std::round(tm) + offset, row[hcol], row[fcol]});
                }
            }
        }
        if (!first_abm) throw Error("agent-based sub-model did not run");
        out.row.attack_rate = first_abm->final_outputs.at("attack_rate");
        out.row.total_learning = first_abm->final_outputs.at("cumulated_learning");
        const SubmodelRun* last_sdm = result.last_run(sdm_id);
        if (!last_sdm) throw Error("stock-flow sub-model did not run");
        out.row.final_hsp = last_sdm->final_outputs.at("pct_highly_skilled");
        out.row.final_hif = last_sdm->final_outputs.at("pct_high_income");
        for (const auto& tr : result.transfers) out.transfers.push_back({t.policy, t.seed, tr});
    };

    unsigned jobs = suite.jobs ? suite.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                work(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SuiteReport report;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (errors[i]) {
            const std::string ctx = "policy " + std::string(abm::to_string(tasks[i].policy)) + ", seed " +
                                    std::to_string(tasks[i].seed) + ": ";
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                throw Error(ctx + e.what());
            }
        }
        auto& o = outcomes[i];
        report.rows.push_back(o.row);
        report.long_term.insert(report.long_term.end(), o.long_term.begin(), o.long_term.end());
        report.transfers.insert(report.transfers.end(), o.transfers.begin(), o.transfers.end());
    }
    report.summaries = summarize(report.rows);
    return report;
}

SuiteReport run_suite(const ScenarioSuite& suite) { return run_suite(suite, build_case_mms()); }

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

abm::ClosurePolicy policy_cell(const std::string& s, const std::filesystem::path& path) {
    auto p = abm::policy_from_string(s);
    if (!p) throw Error(path.string() + ": unknown policy '" + s + "'");
    return *p;
}

double number_cell(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(path.string() + ": malformed number '" + s + "'");
    }
}

} // namespace

void write_suite(const SuiteReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    using detail::format_double;
    {
        auto out = open_out(dir / "suite_summary.txt");
        out << report.summary_text();
    }
    {
        auto out = open_out(dir / "attack_rates.csv");
        out << "policy,seed,attack_rate,total_learning,final_hsp,final_hif\n";
        for (const auto& r : report.rows)
            out << abm::to_string(r.policy) << "," << r.seed << "," << format_double(r.attack_rate) << ","
                << format_double(r.total_learning) << "," << format_double(r.final_hsp) << ","
                << format_double(r.final_hif) << "\n";
    }
    {
        auto out = open_out(dir / "long_term.csv");
        out << "policy,seed,year,hsp,hif\n";
        for (const auto& r : report.long_term)
            out << abm::to_string(r.policy) << "," << r.seed << "," << format_double(r.year) << ","
                << format_double(r.hsp) << "," << format_double(r.hif) << "\n";
    }
    {
        auto out = open_out(dir / "transfers.csv");
        out << "policy,seed,iteration,tick,conduit,value_in,value_out\n";
        for (const auto& t : report.transfers)
            out << abm::to_string(t.policy) << "," << t.seed << "," << t.record.iteration << "," << t.record.tick << ","
                << t.record.conduit << "," << format_double(t.record.value_in) << ","
                << format_double(t.record.value_out) << "\n";
    }
}

SuiteReport read_suite(const std::filesystem::path& dir) {
    SuiteReport report;
    const auto ar_path = dir / "attack_rates.csv";
    const auto ar = read_csv(ar_path);
    for (std::size_t i = 1; i < ar.size(); ++i) {
        const auto& c = ar[i];
        if (c.size() != 6) throw Error(ar_path.string() + ": row " + std::to_string(i + 1) + " has wrong column count");
        report.rows.push_back({policy_cell(c[0], ar_path), static_cast<std::uint64_t>(number_cell(c[1], ar_path)),
                               number_cell(c[2], ar_path), number_cell(c[3], ar_path), number_cell(c[4], ar_path),
                               number_cell(c[5], ar_path)});
    }
    const auto lt_path = dir / "long_term.csv";
    if (std::filesystem::exists(lt_path)) {
        const auto lt = read_csv(lt_path);
        for (std::size_t i = 1; i < lt.size(); ++i) {
            const auto& c = lt[i];
            if (c.size() != 5) throw Error(lt_path.string() + ": row " + std::to_string(i + 1) + " has wrong column count");
            report.long_term.push_back({policy_cell(c[0], lt_path), static_cast<std::uint64_t>(number_cell(c[1], lt_path)),
                                        number_cell(c[2], lt_path), number_cell(c[3], lt_path), number_cell(c[4], lt_path)});
        }
    }
    report.summaries = summarize(report.rows);
    return report;
}

} // namespace mmskit::casestudy
