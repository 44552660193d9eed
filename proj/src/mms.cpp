#include "mmskit/mms.hpp"

#include "mmskit/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace mmskit {

std::string_view to_string(Paradigm p) { return p == Paradigm::agent_based ? "agent_based" : "stock_flow"; }
std::string_view to_string(PortDirection d) { return d == PortDirection::in ? "in" : "out"; }
std::string_view to_string(CouplingTemplate t) { return t == CouplingTemplate::serial ? "serial" : "parallel"; }

std::string_view to_string(PortKind k) {
    switch (k) {
    case PortKind::O_i: return "O_i";
    case PortKind::O_f: return "O_f";
    case PortKind::F_init: return "F_init";
    case PortKind::S: return "S";
    case PortKind::B: return "B";
    }
    return "?";
}

std::string_view to_string(MapperKind k) {
    switch (k) {
    case MapperKind::value_transfer: return "value_transfer";
    case MapperKind::aggregate: return "aggregate";
    case MapperKind::disaggregate: return "disaggregate";
    case MapperKind::expression: return "expression";
    case MapperKind::conditional: return "conditional";
    case MapperKind::composite: return "composite";
    }
    return "?";
}

std::string_view to_string(AggregationMethod m) {
    switch (m) {
    case AggregationMethod::sum: return "sum";
    case AggregationMethod::mean: return "mean";
    case AggregationMethod::weighted: return "weighted";
    case AggregationMethod::uniform: return "uniform";
    }
    return "?";
}

std::optional<Paradigm> paradigm_from_string(std::string_view s) {
    if (s == "agent_based") return Paradigm::agent_based;
    if (s == "stock_flow") return Paradigm::stock_flow;
    return std::nullopt;
}

std::optional<PortKind> port_kind_from_string(std::string_view s) {
    for (auto k : {PortKind::O_i, PortKind::O_f, PortKind::F_init, PortKind::S, PortKind::B}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::optional<CouplingTemplate> template_from_string(std::string_view s) {
    if (s == "serial") return CouplingTemplate::serial;
    if (s == "parallel") return CouplingTemplate::parallel;
    return std::nullopt;
}

std::optional<MapperKind> mapper_kind_from_string(std::string_view s) {
    for (auto k : {MapperKind::value_transfer, MapperKind::aggregate, MapperKind::disaggregate, MapperKind::expression,
                   MapperKind::conditional, MapperKind::composite}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::optional<AggregationMethod> aggregation_from_string(std::string_view s) {
    for (auto m : {AggregationMethod::sum, AggregationMethod::mean, AggregationMethod::weighted, AggregationMethod::uniform}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

PortDirection direction_of(PortKind kind) {
    return kind == PortKind::O_i || kind == PortKind::O_f ? PortDirection::out : PortDirection::in;
}

const Port* SubmodelSpec::port(std::string_view name) const {
    auto it = std::find_if(ports.begin(), ports.end(), [&](const Port& p) { return p.name == name; });
    return it == ports.end() ? nullptr : &*it;
}

const ScaleInterval* SubmodelSpec::interval(const std::string& dim) const {
    auto it = intervals.find(dim);
    return it == intervals.end() ? nullptr : &it->second;
}

std::vector<std::string> Mapper::free_inputs() const {
    std::vector<std::string> out;
    for (const auto& slot : inputs) {
        if (!parameters.count(slot)) out.push_back(slot);
    }
    return out;
}

const Dimension* MmsMeta::dimension(std::string_view name) const {
    auto it = std::find_if(dimensions.begin(), dimensions.end(), [&](const Dimension& d) { return d.name == name; });
    return it == dimensions.end() ? nullptr : &*it;
}

namespace {
template <class Vec, class Id>
auto find_by_id(Vec& v, Id id) -> decltype(&v.front()) {
    auto it = std::find_if(v.begin(), v.end(), [&](const auto& x) { return x.id == id; });
    return it == v.end() ? nullptr : &*it;
}
} // namespace

const SubmodelSpec* Mms::submodel(std::string_view id) const { return find_by_id(submodels, id); }
SubmodelSpec* Mms::submodel(std::string_view id) { return find_by_id(submodels, id); }
const Mapper* Mms::mapper(std::string_view id) const { return find_by_id(mappers, id); }
Mapper* Mms::mapper(std::string_view id) { return find_by_id(mappers, id); }
const Conduit* Mms::conduit(std::string_view id) const { return find_by_id(conduits, id); }

CouplingTemplate infer_coupling_template(const ScaleInterval& sender, const ScaleInterval& receiver, const Dimension& time) {
    return interval_relation(sender, receiver, time) == IntervalRelation::overlapping ? CouplingTemplate::parallel
                                                                                      : CouplingTemplate::serial;
}

namespace {

// Returns the port name actually used. A factor needed under two kinds gets
// a second port suffixed with the kind.
std::string add_port(SubmodelSpec& spec, Port port) {
    if (const Port* existing = spec.port(port.name)) {
        if (*existing == port) return port.name;
        port.name += "." + std::string(to_string(port.kind));
        if (const Port* again = spec.port(port.name); again && *again == port) return port.name;
    }
    spec.ports.push_back(port);
    return port.name;
}

} // namespace

Mms build_mms(const Cld& cld, const Decomposition& decomp, const std::map<std::string, Paradigm>& paradigms,
              const std::vector<Mapper>& mappers, const std::map<int, Binding>& bindings, const BuildOptions& options) {
    std::vector<std::string> missing_paradigm;
    for (const auto& g : decomp.groups) {
        if (!paradigms.count(g.id)) missing_paradigm.push_back(g.id);
    }
    if (!missing_paradigm.empty()) {
        std::string msg = "no paradigm assigned to group(s):";
        for (const auto& id : missing_paradigm) msg += " " + id;
        throw Error(msg);
    }
    std::vector<int> unbound;
    for (int id : decomp.cross_links) {
        if (!bindings.count(id)) unbound.push_back(id);
    }
    if (!unbound.empty()) {
        std::string msg = "unbound cross link(s):";
        for (int id : unbound) msg += " " + std::to_string(id);
        throw Error(msg);
    }

    Mms mms;
    mms.meta.name = options.name;
    mms.meta.version = options.version;
    mms.meta.dimensions = cld.dimensions;
    mms.meta.max_iterations = options.max_iterations;
    mms.mappers = mappers;

    for (const auto& g : decomp.groups) {
        SubmodelSpec spec;
        spec.id = g.id;
        spec.factors = g.factors;
        spec.factors.insert(spec.factors.end(), g.parameters.begin(), g.parameters.end());
        spec.intervals = g.intervals;
        spec.paradigm = paradigms.at(g.id);
        if (auto it = options.configs.find(g.id); it != options.configs.end()) spec.config = it->second;
        mms.submodels.push_back(std::move(spec));
    }

    const Dimension* time = cld.dimension(options.time_dimension);
    if (!decomp.cross_links.empty() && !time)
        throw Error("time dimension '" + options.time_dimension + "' is not declared");

    for (int link_id : decomp.cross_links) {
        const CausalLink* link = cld.link(link_id);
        if (!link) throw Error("cross link " + std::to_string(link_id) + " is not in the CLD");
        const SubmodelGroup* from = decomp.group_of(link->source);
        const SubmodelGroup* to = decomp.group_of(link->target);
        if (!from || !to) throw Error("cross link " + std::to_string(link_id) + " endpoints are not grouped");
        const ScaleInterval* ft = mms.submodel(from->id)->interval(options.time_dimension);
        const ScaleInterval* tt = mms.submodel(to->id)->interval(options.time_dimension);
        if (!ft || !tt)
            throw Error("cross link " + std::to_string(link_id) + " joins groups without time intervals");
        const CouplingTemplate tmpl = infer_coupling_template(*ft, *tt, *time);

        Conduit c;
        c.id = "c" + std::to_string(link_id);
        c.coupling = tmpl;
        c.from = {from->id, link->source};
        const ReplicatedFactor* replica = decomp.replica_for_link(link_id);
        c.to = {to->id, replica ? replica->copy : link->target};
        const Binding& binding = bindings.at(link_id);
        if (const auto* mapper_id = std::get_if<std::string>(&binding)) {
            if (!mms.mapper(*mapper_id))
                throw Error("cross link " + std::to_string(link_id) + " is bound to unknown mapper '" + *mapper_id + "'");
            c.mapper = *mapper_id;
        }
        const bool serial = tmpl == CouplingTemplate::serial;
        c.from.port = add_port(*mms.submodel(c.from.submodel),
                               {c.from.port, PortDirection::out, serial ? PortKind::O_f : PortKind::O_i});
        c.to.port = add_port(*mms.submodel(c.to.submodel),
                             {c.to.port, PortDirection::in, serial ? PortKind::F_init : PortKind::S});
        mms.conduits.push_back(std::move(c));
    }
    return mms;
}

namespace {

bool weights_ok(const std::vector<double>& w) {
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    return std::fabs(sum - 1.0) <= 1e-9 && std::all_of(w.begin(), w.end(), [](double x) { return std::isfinite(x); });
}

template <class T>
bool has_duplicates(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) != v.end();
}

} // namespace

void validate_mapper(const Mapper& m, ValidationReport& report, const std::string& subject) {
    if (has_duplicates(m.inputs)) report.add("mapper_slots", subject, "duplicate input slot");
    if (has_duplicates(m.outputs)) report.add("mapper_slots", subject, "duplicate output slot");
    if (m.outputs.empty()) report.add("mapper_arity", subject, "declares no output slot");
    for (const auto& [slot, value] : m.parameters) {
        if (std::find(m.inputs.begin(), m.inputs.end(), slot) == m.inputs.end())
            report.add("mapper_parameter", subject, "parameter '" + slot + "' is not an input slot");
        if (!std::isfinite(value)) report.add("mapper_parameter", subject, "parameter '" + slot + "' is not finite");
    }

    auto need_aggregation = [&](std::initializer_list<AggregationMethod> allowed, std::size_t weight_count) {
        if (!m.aggregation) {
            report.add("mapper_aggregation", subject, "missing aggregation spec");
            return;
        }
        if (std::find(allowed.begin(), allowed.end(), m.aggregation->method) == allowed.end()) {
            report.add("mapper_aggregation", subject,
                       "method '" + std::string(to_string(m.aggregation->method)) + "' not valid for " +
                           std::string(to_string(m.kind)));
            return;
        }
        if (m.aggregation->method == AggregationMethod::weighted) {
            if (m.aggregation->weights.size() != weight_count)
                report.add("mapper_arity", subject, "weight count does not match slot count");
            else if (!weights_ok(m.aggregation->weights))
                report.add("mapper_weights", subject, "weights must sum to 1 within 1e-9");
        }
    };

    auto check_body = [&](bool want_conditional) {
        if (m.outputs.size() != 1) report.add("mapper_arity", subject, "expression mappers have exactly one output");
        try {
            const Expression e = Expression::parse(m.body);
            if (e.is_conditional() != want_conditional)
                report.add("mapper_body", subject,
                           want_conditional ? "conditional mapper body must be an if-then-else"
                                            : "expression mapper body must not be an if-then-else");
            for (const auto& v : e.free_variables()) {
                if (std::find(m.inputs.begin(), m.inputs.end(), v) == m.inputs.end())
                    report.add("mapper_free_variable", subject, "body uses undeclared variable '" + v + "'");
            }
        } catch (const ParseError& err) {
            report.add("mapper_body", subject, std::string("body does not parse: ") + err.what());
        }
    };

    switch (m.kind) {
    case MapperKind::value_transfer:
        if (m.inputs.empty() || m.inputs.size() != m.outputs.size())
            report.add("mapper_arity", subject, "value transfer needs as many outputs as inputs");
        break;
    case MapperKind::aggregate:
        if (m.inputs.empty()) report.add("mapper_arity", subject, "aggregate needs at least one input");
        if (m.outputs.size() != 1) report.add("mapper_arity", subject, "aggregate has exactly one output");
        need_aggregation({AggregationMethod::sum, AggregationMethod::mean, AggregationMethod::weighted}, m.inputs.size());
        break;
    case MapperKind::disaggregate:
        if (m.inputs.size() != 1) report.add("mapper_arity", subject, "disaggregate has exactly one input");
        need_aggregation({AggregationMethod::uniform, AggregationMethod::weighted}, m.outputs.size());
        break;
    case MapperKind::expression: check_body(false); break;
    case MapperKind::conditional: check_body(true); break;
    case MapperKind::composite: {
        if (m.stages.empty()) report.add("mapper_arity", subject, "composite needs at least one stage");
        std::set<std::string> env(m.inputs.begin(), m.inputs.end());
        for (std::size_t i = 0; i < m.stages.size(); ++i) {
            const auto& stage = m.stages[i];
            const std::string ssub = subject + ".stages[" + std::to_string(i) + "]";
            validate_mapper(stage, report, ssub);
            for (const auto& slot : stage.free_inputs()) {
                if (!env.count(slot)) report.add("mapper_arity", ssub, "input '" + slot + "' is not available");
            }
            env.insert(stage.outputs.begin(), stage.outputs.end());
        }
        for (const auto& out : m.outputs) {
            if (!env.count(out)) report.add("mapper_arity", subject, "output '" + out + "' is never produced");
        }
        break;
    }
    }
}

bool has_serial_cycle(const Mms& mms) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& c : mms.conduits) {
        if (c.coupling == CouplingTemplate::serial && mms.submodel(c.from.submodel) && mms.submodel(c.to.submodel))
            adj[c.from.submodel].push_back(c.to.submodel);
    }
    std::map<std::string, int> color;
    std::function<bool(const std::string&)> visit = [&](const std::string& n) {
        color[n] = 1;
        for (const auto& t : adj[n]) {
            if (color[t] == 1) return true;
            if (color[t] == 0 && visit(t)) return true;
        }
        color[n] = 2;
        return false;
    };
    for (const auto& s : mms.submodels) {
        if (color[s.id] == 0 && visit(s.id)) return true;
    }
    return false;
}

ValidationReport validate_mms(const Mms& mms) {
    ValidationReport report;

    std::set<std::string> ids;
    for (const auto& s : mms.submodels) {
        const std::string subject = "submodel " + s.id;
        if (s.id.empty()) report.add("submodel_unnamed", subject, "sub-model has an empty id");
        if (!ids.insert(s.id).second) report.add("submodel_duplicate", subject, "id declared more than once");
        std::set<std::string> port_names;
        for (const auto& p : s.ports) {
            if (!port_names.insert(p.name).second)
                report.add("port_duplicate", subject, "port '" + p.name + "' declared more than once");
            if (direction_of(p.kind) != p.direction)
                report.add("port_kind", subject,
                           "port '" + p.name + "' of kind " + std::string(to_string(p.kind)) + " cannot be an " +
                               std::string(to_string(p.direction)) + "-port");
        }
        if (!s.config.is_object()) report.add("submodel_config", subject, "config must be an object");
        for (const auto& [dim, iv] : s.intervals) {
            if (const Dimension* d = mms.meta.dimension(dim)) {
                if (auto defect = check_interval(iv, *d); !defect.empty())
                    report.add("malformed_interval", subject, dim + " interval: " + defect);
            } else if (!mms.meta.dimensions.empty()) {
                report.add("undeclared_dimension", subject, "interval on undeclared dimension '" + dim + "'");
            }
        }
    }

    std::set<std::string> mapper_ids;
    for (const auto& m : mms.mappers) {
        const std::string subject = "mapper " + m.id;
        if (!mapper_ids.insert(m.id).second) report.add("mapper_duplicate", subject, "id declared more than once");
        validate_mapper(m, report, subject);
    }

    const Dimension* time = mms.meta.dimension("time");
    std::set<std::string> conduit_ids;
    for (const auto& c : mms.conduits) {
        const std::string subject = "conduit " + c.id;
        if (!conduit_ids.insert(c.id).second) report.add("conduit_duplicate", subject, "id declared more than once");

        auto resolve = [&](const Endpoint& e, PortDirection dir) -> const Port* {
            const SubmodelSpec* s = mms.submodel(e.submodel);
            if (!s) {
                report.add("unresolved_reference", subject, "unknown sub-model '" + e.submodel + "'");
                return nullptr;
            }
            const Port* p = s->port(e.port);
            if (!p) {
                report.add("unresolved_reference", subject, "sub-model '" + e.submodel + "' has no port '" + e.port + "'");
                return nullptr;
            }
            if (p->direction != dir)
                report.add("port_direction", subject,
                           "port '" + e.submodel + "." + e.port + "' is not an " + std::string(to_string(dir)) + "-port");
            return p;
        };
        const Port* from = resolve(c.from, PortDirection::out);
        const Port* to = resolve(c.to, PortDirection::in);

        if (from && to) {
            if (c.coupling == CouplingTemplate::serial) {
                if (from->kind != PortKind::O_f || to->kind != PortKind::F_init)
                    report.add("template_port_mismatch", subject,
                               "serial conduits connect O_f to F_init, found " + std::string(to_string(from->kind)) +
                                   " -> " + std::string(to_string(to->kind)));
            } else if (from->kind != PortKind::O_i || (to->kind != PortKind::S && to->kind != PortKind::B)) {
                report.add("template_port_mismatch", subject,
                           "parallel conduits connect O_i to S or B, found " + std::string(to_string(from->kind)) +
                               " -> " + std::string(to_string(to->kind)));
            }
        }

        if (c.mapper) {
            const Mapper* m = mms.mapper(*c.mapper);
            if (!m) {
                report.add("unresolved_reference", subject, "unknown mapper '" + *c.mapper + "'");
            } else if (m->free_inputs().size() != 1 || m->outputs.size() != 1) {
                report.add("mapper_arity", subject,
                           "mapper '" + m->id + "' must expose exactly one free input and one output on a conduit");
            }
        }

        const SubmodelSpec* fs = mms.submodel(c.from.submodel);
        const SubmodelSpec* ts = mms.submodel(c.to.submodel);
        if (time && fs && ts) {
            const ScaleInterval* fi = fs->interval("time");
            const ScaleInterval* ti = ts->interval("time");
            if (fi && ti && !fi->constant && !ti->constant && check_interval(*fi, *time).empty() &&
                check_interval(*ti, *time).empty()) {
                const auto expected = infer_coupling_template(*fi, *ti, *time);
                if (expected != c.coupling)
                    report.add("template_interval_mismatch", subject,
                               "time intervals imply a " + std::string(to_string(expected)) + " coupling");
            }
        }
    }

    if (has_serial_cycle(mms) && (!mms.meta.max_iterations || *mms.meta.max_iterations < 1))
        report.add("unbounded_cycle", "meta", "serial conduits form a cycle but meta.max_iterations is not set");

    report.normalize();
    return report;
}

SlotValues eval_mapper(const Mapper& m, const SlotValues& inputs) {
    auto fail = [&](const std::string& msg) -> Error { return Error("mapper '" + m.id + "': " + msg); };

    SlotValues env(m.parameters.begin(), m.parameters.end());
    for (const auto& [slot, value] : inputs) {
        if (std::find(m.inputs.begin(), m.inputs.end(), slot) == m.inputs.end()) throw fail("unknown input slot '" + slot + "'");
        if (!std::isfinite(value)) throw fail("input '" + slot + "' is not finite");
        env[slot] = value;
    }
    for (const auto& slot : m.inputs) {
        if (!env.count(slot)) throw fail("input slot '" + slot + "' is unbound");
    }

    SlotValues out;
    auto need_spec = [&]() -> const AggregationSpec& {
        if (!m.aggregation) throw fail("missing aggregation spec");
        return *m.aggregation;
    };

    switch (m.kind) {
    case MapperKind::value_transfer:
        if (m.inputs.size() != m.outputs.size()) throw fail("value transfer needs as many outputs as inputs");
        for (std::size_t i = 0; i < m.inputs.size(); ++i) out[m.outputs[i]] = env.at(m.inputs[i]);
        break;
    case MapperKind::aggregate: {
        const auto& spec = need_spec();
        if (m.outputs.size() != 1 || m.inputs.empty()) throw fail("aggregate maps n inputs to one output");
        double acc = 0.0;
        if (spec.method == AggregationMethod::weighted) {
            if (spec.weights.size() != m.inputs.size()) throw fail("weight count does not match input count");
            if (!weights_ok(spec.weights)) throw fail("weights must sum to 1 within 1e-9");
            for (std::size_t i = 0; i < m.inputs.size(); ++i) acc += spec.weights[i] * env.at(m.inputs[i]);
        } else if (spec.method == AggregationMethod::sum || spec.method == AggregationMethod::mean) {
            for (const auto& slot : m.inputs) acc += env.at(slot);
            if (spec.method == AggregationMethod::mean) acc /= static_cast<double>(m.inputs.size());
        } else {
            throw fail("aggregation method '" + std::string(to_string(spec.method)) + "' not valid for aggregate");
        }
        out[m.outputs[0]] = acc;
        break;
    }
    case MapperKind::disaggregate: {
        const auto& spec = need_spec();
        if (m.inputs.size() != 1 || m.outputs.empty()) throw fail("disaggregate maps one input to n outputs");
        const double total = env.at(m.inputs[0]);
        const std::size_t n = m.outputs.size();
        if (spec.method == AggregationMethod::weighted) {
            if (spec.weights.size() != n) throw fail("weight count does not match output count");
            if (!weights_ok(spec.weights)) throw fail("weights must sum to 1 within 1e-9");
            for (std::size_t i = 0; i < n; ++i) out[m.outputs[i]] = total * spec.weights[i];
        } else if (spec.method == AggregationMethod::uniform) {
            for (const auto& slot : m.outputs) out[slot] = total / static_cast<double>(n);
        } else {
            throw fail("aggregation method '" + std::string(to_string(spec.method)) + "' not valid for disaggregate");
        }
        break;
    }
    case MapperKind::expression:
    case MapperKind::conditional: {
        if (m.outputs.size() != 1) throw fail("expression mappers have exactly one output");
        Expression e = [&] {
            try {
                return Expression::parse(m.body);
            } catch (const ParseError& err) {
                throw fail(std::string("body does not parse: ") + err.what());
            }
        }();
        if (e.is_conditional() != (m.kind == MapperKind::conditional)) throw fail("body form does not match mapper kind");
        Bindings b;
        for (const auto& slot : m.inputs) b.emplace(slot, env.at(slot));
        try {
            out[m.outputs[0]] = e.evaluate(b);
        } catch (const Error& err) {
            throw fail(err.what());
        }
        break;
    }
    case MapperKind::composite: {
        if (m.stages.empty()) throw fail("composite needs at least one stage");
        for (const auto& stage : m.stages) {
            SlotValues stage_in;
            for (const auto& slot : stage.inputs) {
                if (auto it = env.find(slot); it != env.end()) stage_in[slot] = it->second;
            }
            for (auto& [slot, value] : eval_mapper(stage, stage_in)) env[slot] = value;
        }
        for (const auto& slot : m.outputs) {
            auto it = env.find(slot);
            if (it == env.end()) throw fail("output '" + slot + "' is never produced");
            out[slot] = it->second;
        }
        break;
    }
    }

    for (const auto& [slot, value] : out) {
        if (!std::isfinite(value)) throw fail("output '" + slot + "' is not finite");
    }
    return out;
}

} // namespace mmskit
