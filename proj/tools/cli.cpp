#include "cli.hpp"

#include "mmskit/advisor.hpp"
#include "mmskit/casestudy.hpp"
#include "mmskit/cld.hpp"
#include "mmskit/decomposition.hpp"
#include "mmskit/error.hpp"
#include "mmskit/mms_json.hpp"
#include "mmskit/paradigms.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mmskit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for usage and I/O problems; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": malformed JSON: " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text, bool force) {
    if (fs::exists(path) && !force) throw UsageError("'" + path.string() + "' exists; pass --force to overwrite");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    out << text;
}

void prepare_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw UsageError("'" + dir.string() + "' is not a directory");
        if (!fs::is_empty(dir) && !force)
            throw UsageError("output directory '" + dir.string() + "' is not empty; pass --force to overwrite");
    }
    fs::create_directories(dir);
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("MMSKIT_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw UsageError(std::string("MMSKIT_SEED is not an unsigned integer: '") + env + "'");
    }
    return 42;
}

enum class DocKind { cld, mms };

DocKind detect(const json& doc, const std::string& path) {
    const bool cld = doc.is_object() && doc.contains("factors") && doc.contains("links");
    const bool mms = doc.is_object() && doc.contains("submodels") && doc.contains("conduits");
    if (cld == mms)
        throw UsageError(path + ": " + (cld ? "ambiguous document (both CLD and MMS keys)" : "not a CLD or MMS document"));
    return cld ? DocKind::cld : DocKind::mms;
}

Cld load_cld(const std::string& path) {
    const json doc = read_json(path);
    try {
        return parse_cld(doc);
    } catch (const ParseError& e) {
        throw UsageError(path + ": " + e.what());
    }
}

Mms load_mms(const std::string& path) {
    const json doc = read_json(path);
    try {
        return parse_mms(doc);
    } catch (const ParseError& e) {
        throw UsageError(path + ": " + e.what());
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

int cmd_validate(const std::string& path, std::ostream& out) {
    const json doc = read_json(path);
    ValidationReport report;
    if (detect(doc, path) == DocKind::cld) {
        try {
            report = validate_cld(parse_cld(doc));
        } catch (const ParseError& e) {
            throw UsageError(path + ": " + e.what());
        }
        out << "CLD " << path << ": ";
    } else {
        try {
            report = validate_mms(parse_mms(doc));
        } catch (const ParseError& e) {
            throw UsageError(path + ": " + e.what());
        }
        out << "MMS " << path << ": ";
    }
    out << report;
    if (!report.empty()) out << "\n";
    return report.empty() ? ok : violation;
}

int cmd_decompose(const std::string& path, const std::string& dims_arg, const std::string& out_path, bool force,
                  std::ostream& out) {
    const Cld cld = load_cld(path);
    const auto dims = split_list(dims_arg);
    if (dims.empty()) throw UsageError("--dims names no dimension");
    for (const auto& d : dims) {
        if (!cld.dimension(d)) throw UsageError("unknown dimension '" + d + "'");
    }
    const ValidationReport report = validate_cld(cld);
    if (!report.empty()) {
        out << report << "\n";
        return violation;
    }
    const Decomposition dec = decompose(cld, dims);
    out << "groups (" << dec.groups.size() << "):\n";
    for (const auto& g : dec.groups) {
        out << "  " << g.id;
        for (const auto& [dim, iv] : g.intervals) out << "  " << dim << "=" << to_string(iv);
        out << "\n    factors: " << join(g.factors) << "\n";
        if (!g.parameters.empty()) out << "    parameters: " << join(g.parameters) << "\n";
    }
    out << "cross links (" << dec.cross_links.size() << "):\n";
    for (int id : dec.cross_links) {
        const CausalLink* l = cld.link(id);
        out << "  " << id << ": " << l->source << " (" << dec.group_of(l->source)->id << ") -> " << l->target << " ("
            << dec.group_of(l->target)->id << ")\n";
    }
    for (const auto& r : dec.replicated_factors)
        out << "replicated " << r.original << " as " << r.copy << " in " << r.group << " (link " << r.link_id << ")\n";
    for (const auto& w : dec.warnings) out << "warning: " << w << "\n";
    if (!out_path.empty()) write_text_file(out_path, to_json(dec).dump(2) + "\n", force);
    return ok;
}

int cmd_advise(const ParadigmCriteria& c, bool as_json, std::ostream& out) {
    const ParadigmAdvice a = advise_paradigm(c);
    if (as_json) {
        json rows = json::array();
        for (const auto& r : a.rationale)
            rows.push_back({{"rule", r.rule},
                            {"criterion", r.criterion},
                            {"favors", std::string(to_string(r.favors))},
                            {"explanation", r.explanation}});
        out << json{{"recommendation", std::string(to_string(a.recommendation))},
                    {"agent_score", a.agent_score},
                    {"stock_score", a.stock_score},
                    {"rationale", rows}}
                   .dump(2)
            << "\n";
        return ok;
    }
    out << "recommendation: " << to_string(a.recommendation) << " (agent " << a.agent_score << ", stock " << a.stock_score
        << ")\n";
    for (const auto& r : a.rationale)
        out << "  " << r.rule << " [" << r.criterion << "] favors " << to_string(r.favors) << ": " << r.explanation << "\n";
    return ok;
}

int cmd_build(const std::string& cld_path, const std::string& spec_path, bool use_case, const std::string& out_path,
              bool force, std::ostream& out) {
    Mms mms;
    if (use_case) {
        mms = casestudy::build_case_mms();
    } else {
        if (cld_path.empty() || spec_path.empty()) throw UsageError("build needs a CLD path and --spec, or --case");
        const Cld cld = load_cld(cld_path);
        const ValidationReport cld_report = validate_cld(cld);
        if (!cld_report.empty()) {
            out << cld_report << "\n";
            return violation;
        }
        const json spec = read_json(spec_path);
        try {
            if (!spec.is_object()) throw ParseError("(document)", "expected an object");
            std::vector<std::string> dims;
            for (const auto& d : spec.value("dims", json::array({"time"}))) dims.push_back(d.get<std::string>());
            for (const auto& d : dims) {
                if (!cld.dimension(d)) throw UsageError("unknown dimension '" + d + "'");
            }
            const Decomposition dec = decompose(cld, dims);

            std::map<std::string, Paradigm> paradigms;
            for (const auto& [group, p] : spec.value("paradigms", json::object()).items()) {
                const auto parsed = paradigm_from_string(p.get<std::string>());
                if (!parsed) throw ParseError("paradigms." + group, "unknown paradigm");
                paradigms[group] = *parsed;
            }
            // Mappers share the MMS document's encoding.
            const Mms holder = parse_mms(json{{"meta", {{"name", "mappers"}}},
                                              {"submodels", json::array()},
                                              {"conduits", json::array()},
                                              {"mappers", spec.value("mappers", json::array())}});
            std::map<int, Binding> bindings;
            for (const auto& [link, b] : spec.value("bindings", json::object()).items()) {
                int id = 0;
                try {
                    id = std::stoi(link);
                } catch (const std::exception&) {
                    throw ParseError("bindings." + link, "expected a link id");
                }
                if (b.is_null()) bindings[id] = ValueTransfer{};
                else bindings[id] = b.get<std::string>();
            }
            BuildOptions options;
            options.name = spec.value("name", std::string("mms"));
            options.version = spec.value("version", std::string("1.0"));
            if (spec.contains("max_iterations")) options.max_iterations = spec["max_iterations"].get<int>();
            for (const auto& [group, cfg] : spec.value("configs", json::object()).items()) options.configs[group] = cfg;
            mms = build_mms(cld, dec, paradigms, holder.mappers, bindings, options);
        } catch (const ParseError& e) {
            throw UsageError(spec_path + ": " + e.what());
        } catch (const json::exception& e) {
            throw UsageError(spec_path + ": " + e.what());
        }
    }
    const ValidationReport report = validate_mms(mms);
    const std::string text = dump_mms(mms);
    if (out_path.empty()) out << text;
    else write_text_file(out_path, text, force);
    if (!report.empty()) {
        out << report << "\n";
        return violation;
    }
    out << "built " << mms.submodels.size() << " sub-models, " << mms.conduits.size() << " conduits, "
        << mms.mappers.size() << " mappers\n";
    return ok;
}

struct RunArgs {
    std::string mms_path;
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    int replications = 30;
    std::string out_dir = "results";
    unsigned jobs = 0;
    bool force = false;
    bool second_pandemic = false;
    std::vector<std::string> policies;
    int duration = 730;
    double horizon = 30.0;
};

bool suite_shaped(const Mms& mms) {
    const auto n = [&](Paradigm p) {
        return std::count_if(mms.submodels.begin(), mms.submodels.end(), [&](const auto& s) { return s.paradigm == p; });
    };
    return n(Paradigm::agent_based) == 1 && n(Paradigm::stock_flow) == 1;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    const Mms mms = load_mms(a.mms_path);
    Scenario scenario = Scenario::object();
    if (!a.scenario_path.empty()) {
        if (!fs::exists(a.scenario_path)) throw UsageError("scenario file '" + a.scenario_path + "' does not exist");
        scenario = read_json(a.scenario_path);
        if (!scenario.is_object()) throw UsageError(a.scenario_path + ": scenario must be a JSON object");
    }
    const ValidationReport report = validate_mms(mms);
    if (!report.empty()) {
        err << report << "\n";
        return violation;
    }
    if (a.replications < 1) throw UsageError("--replications must be >= 1");
    const std::uint64_t seed = a.seed ? *a.seed : default_seed();
    prepare_dir(a.out_dir, a.force);

    if (!suite_shaped(mms)) {
        const Registry registry = builtin_registry(mms);
        for (int r = 0; r < a.replications; ++r) {
            const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
            try {
                const RunResult result = run(mms, registry, scenario, s);
                write_run_result(result, fs::path(a.out_dir) / ("seed_" + std::to_string(s)));
                out << "seed " << s << ": " << result.runs.size() << " sub-model runs, " << result.transfers.size()
                    << " transfers\n";
            } catch (const Error& e) {
                err << "seed " << s << ": " << e.what() << "\n";
                return violation;
            }
        }
        return ok;
    }

    casestudy::ScenarioSuite suite;
    suite.replications = a.replications;
    suite.base_seed = seed;
    suite.pandemic_duration = a.duration;
    suite.sdm_horizon = a.horizon;
    suite.second_pandemic = a.second_pandemic;
    suite.overrides = scenario;
    suite.jobs = a.jobs;
    if (!a.policies.empty()) {
        suite.policies.clear();
        for (const auto& p : a.policies) {
            const auto parsed = abm::policy_from_string(p);
            if (!parsed) throw UsageError("unknown policy '" + p + "'");
            suite.policies.push_back(*parsed);
        }
    }
    try {
        const auto report = casestudy::run_suite(suite, mms);
        casestudy::write_suite(report, a.out_dir);
        out << report.summary_text();
    } catch (const Error& e) {
        err << "run failed: " << e.what() << "\n";
        return violation;
    }
    return ok;
}

int cmd_report(const std::string& dir, std::ostream& out) {
    if (!fs::is_directory(dir)) throw UsageError("'" + dir + "' is not a directory");
    try {
        out << casestudy::read_suite(dir).summary_text();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return ok;
}

template <class E>
CLI::Transformer enum_map(std::map<std::string, E> m) {
    return CLI::Transformer(std::move(m), CLI::ignore_case);
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"multi-paradigm multi-model construction and execution", "mmskit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "mmskit 1.0");

    std::string path, dims = "time", out_path, spec_path;
    bool force = false, use_case = false, as_json = false;

    auto* validate = app.add_subcommand("validate", "check a CLD or MMS document");
    validate->add_option("path", path, "document to check")->required();

    auto* decomp = app.add_subcommand("decompose", "split a CLD into scale-separated sub-model groups");
    decomp->add_option("cld", path, "CLD document")->required();
    decomp->add_option("--dims", dims, "comma-separated scale dimensions")->capture_default_str();
    decomp->add_option("--out", out_path, "write the decomposition JSON here");
    decomp->add_flag("--force", force, "overwrite an existing output file");

    ParadigmCriteria criteria;
    auto* advise = app.add_subcommand("advise", "recommend a modelling paradigm");
    advise->add_option("--heterogeneity", criteria.heterogeneity, "low|high")
        ->transform(enum_map<Level>({{"low", Level::low}, {"high", Level::high}}));
    advise->add_option("--mixing", criteria.mixing, "well_mixed|networked")
        ->transform(enum_map<Mixing>({{"well_mixed", Mixing::well_mixed}, {"networked", Mixing::networked}}));
    advise->add_flag("--adaptive", criteria.adaptive_behavior, "entities adapt or learn");
    advise->add_flag("--discrete", criteria.discreteness_matters, "discrete events matter");
    advise->add_flag("--threshold-known", criteria.threshold_known, "a threshold for discrete events is known");
    advise->add_option("--data", criteria.data_level, "micro|macro")
        ->transform(enum_map<DataLevel>({{"micro", DataLevel::micro}, {"macro", DataLevel::macro}}));
    advise->add_option("--budget", criteria.time_budget, "tight|ample")
        ->transform(enum_map<TimeBudget>({{"tight", TimeBudget::tight}, {"ample", TimeBudget::ample}}));
    advise->add_flag("--json", as_json, "print JSON");

    std::string cld_path;
    auto* build = app.add_subcommand("build", "assemble an MMS document");
    build->add_option("cld", cld_path, "CLD document");
    build->add_option("--spec", spec_path, "build spec (dims, paradigms, mappers, bindings)");
    build->add_flag("--case", use_case, "build the shipped school-closure MMS");
    build->add_option("--out", out_path, "write the MMS here (stdout otherwise)");
    build->add_flag("--force", force, "overwrite an existing output file");

    RunArgs ra;
    std::uint64_t seed_value = 0;
    auto* runc = app.add_subcommand("run", "execute an MMS over policies and seeds");
    runc->add_option("mms", ra.mms_path, "MMS document")->required();
    runc->add_option("--scenario", ra.scenario_path, "JSON object of dotted-path overrides");
    auto* seed_opt = runc->add_option("--seeds", seed_value, "base seed (default: MMSKIT_SEED or 42)");
    runc->add_option("--replications", ra.replications, "seeds per policy")->capture_default_str();
    runc->add_option("--out", ra.out_dir, "output directory")->capture_default_str();
    runc->add_option("--jobs", ra.jobs, "worker threads (0 = all cores)");
    runc->add_option("--policies", ra.policies, "closure policies to run")->delimiter(',');
    runc->add_option("--duration", ra.duration, "pandemic duration in days")->capture_default_str();
    runc->add_option("--horizon", ra.horizon, "long-term horizon in years")->capture_default_str();
    runc->add_flag("--second-pandemic", ra.second_pandemic, "feed the long-term result into a second pandemic");
    runc->add_flag("--force", ra.force, "write into a non-empty output directory");

    auto* report = app.add_subcommand("report", "summarize a run output directory");
    report->add_option("dir", path, "output directory of `run`")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return usage;
    }

    try {
        if (validate->parsed()) return cmd_validate(path, out);
        if (decomp->parsed()) return cmd_decompose(path, dims, out_path, force, out);
        if (advise->parsed()) return cmd_advise(criteria, as_json, out);
        if (build->parsed()) return cmd_build(cld_path, spec_path, use_case, out_path, force, out);
        if (runc->parsed()) {
            if (*seed_opt) ra.seed = seed_value;
            return cmd_run(ra, out, err);
        }
        if (report->parsed()) return cmd_report(path, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return violation;
    }
    return usage;
}

} // namespace mmskit::cli
