#include "mmskit/engine.hpp"

#include "csv_util.hpp"
#include "mmskit/error.hpp"
#include "mmskit/rng.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace mmskit {

std::size_t Trace::column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error("trace has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::size_t ExecutionPlan::serial_firings() const {
    std::size_t n = 0;
    for (const auto& b : blocks) {
        std::size_t per = 0;
        for (const auto& p : b.phases) per += p.fire_after.size();
        n += per * static_cast<std::size_t>(b.iterations);
    }
    return n;
}

std::vector<Phase> ExecutionPlan::flattened() const {
    std::vector<Phase> out;
    for (const auto& b : blocks) {
        for (int i = 0; i < b.iterations; ++i) out.insert(out.end(), b.phases.begin(), b.phases.end());
    }
    return out;
}

std::string ExecutionPlan::describe() const {
    std::ostringstream os;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const auto& b = blocks[bi];
        os << "block " << bi + 1;
        if (b.cyclic) os << " (cyclic, " << b.iterations << " iteration" << (b.iterations == 1 ? "" : "s") << ")";
        os << "\n";
        for (const auto& p : b.phases) {
            if (p.kind == PhaseKind::serial_run) {
                os << "  run " << p.submodels.front() << "\n";
            } else {
                os << "  parallel {";
                for (std::size_t i = 0; i < p.submodels.size(); ++i) os << (i ? ", " : " ") << p.submodels[i];
                os << " } sync every " << p.sync_level << " of " << p.pacer;
                for (const auto& c : p.exchanges) os << " exchange " << c;
                os << "\n";
            }
            for (const auto& c : p.fire_after) os << "  fire " << c << "\n";
        }
    }
    return os.str();
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

ExecutionPlan plan_execution(const Mms& mms) {
    const ValidationReport report = validate_mms(mms);
    if (!report.empty()) {
        const auto& v = report.violations.front();
        throw Error("invalid MMS (" + std::to_string(report.size()) + " violations), first: " + v.code + " " +
                    v.subject + ": " + v.message);
    }

    const std::size_t n = mms.submodels.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[mms.submodels[i].id] = i;

    UnionFind uf(n);
    for (const auto& c : mms.conduits) {
        if (c.coupling == CouplingTemplate::parallel) uf.unite(index.at(c.from.submodel), index.at(c.to.submodel));
    }
    // Components are identified by their smallest declaration index.
    std::vector<std::size_t> comps;
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = uf.find(i);
        if (!members.count(r)) comps.push_back(r);
        members[r].push_back(i);
    }
    std::map<std::size_t, std::size_t> comp_pos;
    for (std::size_t k = 0; k < comps.size(); ++k) comp_pos[comps[k]] = k;

    const std::size_t m = comps.size();
    std::vector<std::set<std::size_t>> adj(m);
    std::vector<bool> self_loop(m, false);
    for (const auto& c : mms.conduits) {
        if (c.coupling != CouplingTemplate::serial) continue;
        const std::size_t a = comp_pos.at(uf.find(index.at(c.from.submodel)));
        const std::size_t b = comp_pos.at(uf.find(index.at(c.to.submodel)));
        if (a == b) self_loop[a] = true;
        else adj[a].insert(b);
    }

    // Tarjan's SCC over components.
    std::vector<int> idx(m, -1), low(m, 0), scc_of(m, -1);
    std::vector<bool> on_stack(m, false);
    std::vector<std::size_t> stack;
    int counter = 0, scc_count = 0;
    std::function<void(std::size_t)> strong = [&](std::size_t v) {
        idx[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (std::size_t w : adj[v]) {
            if (idx[w] < 0) {
                strong(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], idx[w]);
            }
        }
        if (low[v] == idx[v]) {
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                scc_of[w] = scc_count;
            } while (w != v);
            ++scc_count;
        }
    };
    for (std::size_t v = 0; v < m; ++v) {
        if (idx[v] < 0) strong(v);
    }

    std::vector<std::vector<std::size_t>> scc_members(static_cast<std::size_t>(scc_count));
    for (std::size_t v = 0; v < m; ++v) scc_members[static_cast<std::size_t>(scc_of[v])].push_back(v);
    std::vector<std::set<int>> scc_adj(scc_members.size());
    std::vector<int> indegree(scc_members.size(), 0);
    for (std::size_t v = 0; v < m; ++v) {
        for (std::size_t w : adj[v]) {
            if (scc_of[v] != scc_of[w] && scc_adj[static_cast<std::size_t>(scc_of[v])].insert(scc_of[w]).second)
                ++indegree[static_cast<std::size_t>(scc_of[w])];
        }
    }

    // Kahn's algorithm; ties go to the SCC declared first.
    std::set<std::pair<std::size_t, int>> ready;
    auto first_decl = [&](int s) { return scc_members[static_cast<std::size_t>(s)].front(); };
    for (int s = 0; s < scc_count; ++s) {
        if (indegree[static_cast<std::size_t>(s)] == 0) ready.insert({first_decl(s), s});
    }

    const Dimension* time = mms.meta.dimension("time");
    ExecutionPlan plan;
    while (!ready.empty()) {
        const int s = ready.begin()->second;
        ready.erase(ready.begin());
        const auto& comps_in = scc_members[static_cast<std::size_t>(s)];

        PlanBlock block;
        block.cyclic = comps_in.size() > 1 || self_loop[comps_in.front()];
        if (block.cyclic) {
            if (!mms.meta.max_iterations || *mms.meta.max_iterations < 1)
                throw Error("serial cycle without meta.max_iterations");
            block.iterations = *mms.meta.max_iterations;
        }
        for (std::size_t k : comps_in) {
            Phase phase;
            std::set<std::string> ids;
            for (std::size_t i : members.at(comps[k])) {
                phase.submodels.push_back(mms.submodels[i].id);
                ids.insert(mms.submodels[i].id);
            }
            for (const auto& c : mms.conduits) {
                if (c.coupling == CouplingTemplate::parallel && ids.count(c.from.submodel)) phase.exchanges.push_back(c.id);
                if (c.coupling == CouplingTemplate::serial && ids.count(c.from.submodel)) phase.fire_after.push_back(c.id);
            }
            if (phase.submodels.size() == 1 && phase.exchanges.empty()) {
                phase.kind = PhaseKind::serial_run;
            } else {
                phase.kind = PhaseKind::parallel_group;
                std::optional<std::size_t> coarsest;
                for (const auto& id : phase.submodels) {
                    const ScaleInterval* iv = time ? mms.submodel(id)->interval("time") : nullptr;
                    std::optional<std::size_t> g;
                    if (iv && !iv->constant) g = time->index_of(iv->grain);
                    if (phase.pacer.empty() || (g && (!coarsest || *g > *coarsest))) {
                        phase.pacer = id;
                        coarsest = g;
                    }
                }
                phase.sync_level = coarsest ? time->levels[*coarsest] : "step";
            }
            block.phases.push_back(std::move(phase));
        }
        plan.blocks.push_back(std::move(block));

        for (int t : scc_adj[static_cast<std::size_t>(s)]) {
            if (--indegree[static_cast<std::size_t>(t)] == 0) ready.insert({first_decl(t), t});
        }
    }
    return plan;
}

namespace {

void set_path(nlohmann::json& target, const std::string& dotted, const nlohmann::json& value) {
    nlohmann::json* node = &target;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw Error("malformed scenario path '" + dotted + "'");
        if (!node->is_object()) throw Error("scenario path '" + dotted + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = nlohmann::json::object();
        start = dot + 1;
    }
}

} // namespace

Mms apply_scenario(const Mms& mms, const Scenario& scenario) {
    Mms out = mms;
    if (scenario.is_null()) return out;
    if (!scenario.is_object()) throw Error("scenario must be a JSON object of dotted paths");
    for (const auto& [path, value] : scenario.items()) {
        if (path == "meta.max_iterations") {
            if (!value.is_number_integer()) throw Error("scenario 'meta.max_iterations' must be an integer");
            out.meta.max_iterations = value.get<int>();
            continue;
        }
        if (path.rfind("mappers.", 0) == 0) {
            const std::string rest = path.substr(8);
            const std::size_t dot = rest.rfind('.');
            if (dot == std::string::npos) throw Error("scenario path '" + path + "' names no mapper slot");
            const std::string id = rest.substr(0, dot);
            const std::string slot = rest.substr(dot + 1);
            Mapper* m = out.mapper(id);
            if (!m) throw Error("scenario path '" + path + "' names unknown mapper '" + id + "'");
            if (std::find(m->inputs.begin(), m->inputs.end(), slot) == m->inputs.end())
                throw Error("scenario path '" + path + "' names unknown slot '" + slot + "'");
            if (!value.is_number()) throw Error("scenario value for '" + path + "' must be a number");
            m->parameters[slot] = value.get<double>();
            continue;
        }
        // Longest sub-model id that prefixes the path.
        SubmodelSpec* target = nullptr;
        for (auto& s : out.submodels) {
            if (path.size() > s.id.size() + 1 && path.compare(0, s.id.size(), s.id) == 0 && path[s.id.size()] == '.' &&
                (!target || s.id.size() > target->id.size()))
                target = &s;
        }
        if (!target) throw Error("scenario path '" + path + "' names no known sub-model");
        set_path(target->config, path.substr(target->id.size() + 1), value);
    }
    return out;
}

const SubmodelRun* RunResult::last_run(const std::string& submodel) const {
    for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
        if (it->submodel == submodel) return &*it;
    }
    return nullptr;
}

bool RunResult::same_outcome(const RunResult& other) const {
    return seed == other.seed && runs == other.runs && transfers == other.transfers && log == other.log;
}

namespace {

class Executor {
public:
    Executor(const Mms& mms, const Registry& registry, std::uint64_t seed, RunResult& result)
        : mms_(mms), registry_(registry), seed_(seed), result_(result) {}

    void run_phase(const Phase& phase, int iteration) {
        std::map<std::string, std::unique_ptr<SubmodelInstance>> live;
        for (const auto& id : phase.submodels) {
            auto inst = registry_.at(id)();
            if (!inst) throw Error("factory for sub-model '" + id + "' returned no instance");
            const std::uint64_t s = stream_seed(seed_, id, static_cast<std::uint64_t>(iteration - 1));
            try {
                inst->initialize(mms_.submodel(id)->config, f_init_[id], s);
            } catch (const Error& err) {
                throw Error("sub-model '" + id + "' failed to initialize: " + err.what());
            }
            live[id] = std::move(inst);
        }

        if (phase.kind == PhaseKind::serial_run) {
            auto& inst = *live.begin()->second;
            while (!inst.finished()) inst.advance();
            result_.log.push_back("ran " + phase.submodels.front() + " iteration " + std::to_string(iteration) +
                                  " for " + std::to_string(inst.tick()) + " steps");
        } else {
            SubmodelInstance& pacer = *live.at(phase.pacer);
            long ticks = 0;
            while (!pacer.finished()) {
                pacer.advance();
                ++ticks;
                const double t = pacer.clock_days();
                for (auto& [id, inst] : live) {
                    if (id == phase.pacer) continue;
                    while (!inst->finished() && inst->clock_days() < t - 1e-9) inst->advance();
                }
                for (const auto& cid : phase.exchanges) {
                    const Conduit& c = *mms_.conduit(cid);
                    const PortValues out = live.at(c.from.submodel)->intermediate_outputs();
                    const double v = read_port(out, c, pacer.tick());
                    const double w = apply(c, v, pacer.tick());
                    live.at(c.to.submodel)->accept({{c.to.port, w}});
                    result_.transfers.push_back({pacer.tick(), c.id, iteration, v, w});
                }
            }
            for (auto& [id, inst] : live) {
                while (!inst->finished()) inst->advance();
            }
            result_.log.push_back("ran parallel group of " + std::to_string(phase.submodels.size()) +
                                  " sub-models, " + std::to_string(ticks) + " synchronization ticks at " +
                                  phase.sync_level + " grain");
        }

        for (const auto& id : phase.submodels) {
            const auto& inst = *live.at(id);
            result_.runs.push_back({id, iteration, inst.trace(), inst.final_outputs()});
        }

        for (const auto& cid : phase.fire_after) {
            const Conduit& c = *mms_.conduit(cid);
            const auto& sender = *live.at(c.from.submodel);
            const double v = read_port(sender.final_outputs(), c, sender.tick());
            const double w = apply(c, v, sender.tick());
            f_init_[c.to.submodel][c.to.port] = w;
            result_.transfers.push_back({sender.tick(), c.id, iteration, v, w});
            result_.log.push_back("fired " + c.id + " " + c.from.submodel + "." + c.from.port + " -> " +
                                  c.to.submodel + "." + c.to.port);
        }
    }

private:
    static double read_port(const PortValues& values, const Conduit& c, long tick) {
        auto it = values.find(c.from.port);
        if (it == values.end())
            throw Error("conduit " + c.id + " at tick " + std::to_string(tick) + ": sender '" + c.from.submodel +
                        "' does not output '" + c.from.port + "'");
        return it->second;
    }

    double apply(const Conduit& c, double value, long tick) const {
        if (!c.mapper) return value;
        const Mapper& m = *mms_.mapper(*c.mapper);
        try {
            const SlotValues out = eval_mapper(m, {{m.free_inputs().front(), value}});
            return out.at(m.outputs.front());
        } catch (const Error& err) {
            throw Error("conduit " + c.id + " at tick " + std::to_string(tick) + ": " + err.what());
        }
    }

    const Mms& mms_;
    const Registry& registry_;
    std::uint64_t seed_;
    RunResult& result_;
    std::map<std::string, PortValues> f_init_;
};

} // namespace

RunResult run(const Mms& mms, const Registry& registry, const Scenario& scenario, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> missing;
    for (const auto& s : mms.submodels) {
        if (!registry.count(s.id)) missing.push_back(s.id);
    }
    if (!missing.empty()) {
        std::string msg = "unregistered sub-model(s):";
        for (const auto& id : missing) msg += " " + id;
        throw Error(msg);
    }

    const Mms effective = apply_scenario(mms, scenario);
    const ExecutionPlan plan = plan_execution(effective);

    RunResult result;
    result.seed = seed;
    Executor exec(effective, registry, seed, result);
    for (const auto& block : plan.blocks) {
        for (int it = 1; it <= block.iterations; ++it) {
            for (const auto& phase : block.phases) exec.run_phase(phase, it);
        }
    }
    result.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_run_result(const RunResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream out(dir / name);
        if (!out) throw Error("cannot write " + (dir / name).string());
        return out;
    };
    for (const auto& r : result.runs) {
        std::string name = r.submodel;
        std::replace(name.begin(), name.end(), '/', '_');
        if (r.iteration > 1) name += "_iter" + std::to_string(r.iteration);
        auto out = open(name + ".csv");
        out << "tick";
        for (const auto& c : r.trace.columns) out << "," << c;
        out << "\n";
        for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
            out << r.trace.ticks[i];
            for (double v : r.trace.rows[i]) out << "," << detail::format_double(v);
            out << "\n";
        }
    }
    auto out = open("transfers.csv");
    out << "tick,conduit,value_in,value_out\n";
    for (const auto& t : result.transfers)
        out << t.tick << "," << t.conduit << "," << detail::format_double(t.value_in) << ","
            << detail::format_double(t.value_out) << "\n";
}

} // namespace mmskit
