#include "mmskit/mms_json.hpp"

#include "json_util.hpp"
#include "mmskit/cld.hpp"

namespace mmskit {

using nlohmann::json;
namespace d = detail;

namespace {

json mapper_to_json(const Mapper& m) {
    json j = {{"id", m.id}, {"kind", std::string(to_string(m.kind))}, {"inputs", m.inputs}, {"outputs", m.outputs}};
    j["parameters"] = json::object();
    for (const auto& [k, v] : m.parameters) j["parameters"][k] = v;
    if (!m.body.empty()) j["body"] = m.body;
    if (m.aggregation) {
        j["aggregation"] = {{"method", std::string(to_string(m.aggregation->method))}};
        if (!m.aggregation->weights.empty()) j["aggregation"]["weights"] = m.aggregation->weights;
    }
    if (!m.stages.empty()) {
        json stages = json::array();
        for (const auto& s : m.stages) stages.push_back(mapper_to_json(s));
        j["stages"] = std::move(stages);
    }
    return j;
}

Mapper mapper_from_json(const json& j, const std::string& path) {
    Mapper m;
    m.id = d::as_string(d::require(j, "id", path), d::child(path, "id"));
    const std::string kp = d::child(path, "kind");
    const auto kind = mapper_kind_from_string(d::as_string(d::require(j, "kind", path), kp));
    if (!kind) throw ParseError(kp, "unknown mapper kind '" + j.at("kind").get<std::string>() + "'");
    m.kind = *kind;
    m.inputs = d::as_string_list(d::require(j, "inputs", path), d::child(path, "inputs"));
    m.outputs = d::as_string_list(d::require(j, "outputs", path), d::child(path, "outputs"));
    if (auto it = j.find("parameters"); it != j.end()) {
        const std::string pp = d::child(path, "parameters");
        for (const auto& [k, v] : d::as_object(*it, pp).items()) m.parameters[k] = d::as_number(v, pp + "." + k);
    }
    m.body = d::optional_string(j, "body", path);
    if (auto it = j.find("aggregation"); it != j.end()) {
        const std::string ap = d::child(path, "aggregation");
        const std::string mp = d::child(ap, "method");
        AggregationSpec spec;
        const auto method = aggregation_from_string(d::as_string(d::require(*it, "method", ap), mp));
        if (!method) throw ParseError(mp, "unknown aggregation method");
        spec.method = *method;
        if (auto w = it->find("weights"); w != it->end()) {
            const std::string wp = d::child(ap, "weights");
            const auto& arr = d::as_array(*w, wp);
            for (std::size_t i = 0; i < arr.size(); ++i) spec.weights.push_back(d::as_number(arr[i], d::element(wp, i)));
        }
        m.aggregation = spec;
    }
    if (auto it = j.find("stages"); it != j.end()) {
        const std::string sp = d::child(path, "stages");
        const auto& arr = d::as_array(*it, sp);
        for (std::size_t i = 0; i < arr.size(); ++i) m.stages.push_back(mapper_from_json(arr[i], d::element(sp, i)));
    }
    return m;
}

Endpoint endpoint_from_json(const json& j, const std::string& path) {
    return {d::as_string(d::require(j, "submodel", path), d::child(path, "submodel")),
            d::as_string(d::require(j, "port", path), d::child(path, "port"))};
}

} // namespace

json serialize_mms(const Mms& mms) {
    json meta = {{"name", mms.meta.name}, {"version", mms.meta.version}, {"constraints", mms.meta.constraints}};
    json dims = json::array();
    for (const auto& dim : mms.meta.dimensions) dims.push_back({{"name", dim.name}, {"levels", dim.levels}});
    meta["dimensions"] = std::move(dims);
    if (mms.meta.max_iterations) meta["max_iterations"] = *mms.meta.max_iterations;

    json submodels = json::array();
    for (const auto& s : mms.submodels) {
        json ports = json::array();
        for (const auto& p : s.ports)
            ports.push_back({{"name", p.name},
                             {"direction", std::string(to_string(p.direction))},
                             {"kind", std::string(to_string(p.kind))}});
        json intervals = json::object();
        for (const auto& [dim, iv] : s.intervals) intervals[dim] = interval_to_json(iv);
        submodels.push_back({{"id", s.id},
                             {"paradigm", std::string(to_string(s.paradigm))},
                             {"factors", s.factors},
                             {"intervals", std::move(intervals)},
                             {"ports", std::move(ports)},
                             {"config", s.config}});
    }

    json mappers = json::array();
    for (const auto& m : mms.mappers) mappers.push_back(mapper_to_json(m));

    json conduits = json::array();
    for (const auto& c : mms.conduits) {
        json j = {{"id", c.id},
                  {"from", {{"submodel", c.from.submodel}, {"port", c.from.port}}},
                  {"to", {{"submodel", c.to.submodel}, {"port", c.to.port}}},
                  {"template", std::string(to_string(c.coupling))}};
        j["mapper"] = c.mapper ? json(*c.mapper) : json(nullptr);
        conduits.push_back(std::move(j));
    }

    return {{"meta", std::move(meta)},
            {"submodels", std::move(submodels)},
            {"mappers", std::move(mappers)},
            {"conduits", std::move(conduits)}};
}

std::string dump_mms(const Mms& mms) { return serialize_mms(mms).dump(2) + "\n"; }

Mms parse_mms(const json& doc) {
    Mms mms;
    if (!doc.is_object()) throw ParseError("(document)", "expected an object");

    const json& meta = d::require(doc, "meta", "");
    mms.meta.name = d::as_string(d::require(meta, "name", "meta"), "meta.name");
    mms.meta.version = d::optional_string(meta, "version", "meta");
    if (auto it = meta.find("dimensions"); it != meta.end()) {
        const auto& arr = d::as_array(*it, "meta.dimensions");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = d::element("meta.dimensions", i);
            Dimension dim;
            dim.name = d::as_string(d::require(arr[i], "name", p), p + ".name");
            dim.levels = d::as_string_list(d::require(arr[i], "levels", p), p + ".levels");
            mms.meta.dimensions.push_back(std::move(dim));
        }
    }
    if (auto it = meta.find("max_iterations"); it != meta.end() && !it->is_null())
        mms.meta.max_iterations = d::as_int(*it, "meta.max_iterations");
    if (auto it = meta.find("constraints"); it != meta.end())
        mms.meta.constraints = d::as_string_list(*it, "meta.constraints");

    const auto& subs = d::as_array(d::require(doc, "submodels", ""), "submodels");
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const std::string p = d::element("submodels", i);
        SubmodelSpec s;
        s.id = d::as_string(d::require(subs[i], "id", p), p + ".id");
        const auto paradigm = paradigm_from_string(d::as_string(d::require(subs[i], "paradigm", p), p + ".paradigm"));
        if (!paradigm) throw ParseError(p + ".paradigm", "unknown paradigm");
        s.paradigm = *paradigm;
        if (auto it = subs[i].find("factors"); it != subs[i].end()) s.factors = d::as_string_list(*it, p + ".factors");
        if (auto it = subs[i].find("intervals"); it != subs[i].end()) {
            for (const auto& [dim, v] : d::as_object(*it, p + ".intervals").items())
                s.intervals[dim] = interval_from_json(v, p + ".intervals." + dim);
        }
        const auto& ports = d::as_array(d::require(subs[i], "ports", p), p + ".ports");
        for (std::size_t k = 0; k < ports.size(); ++k) {
            const std::string pp = d::element(p + ".ports", k);
            Port port;
            port.name = d::as_string(d::require(ports[k], "name", pp), pp + ".name");
            const auto kind = port_kind_from_string(d::as_string(d::require(ports[k], "kind", pp), pp + ".kind"));
            if (!kind) throw ParseError(pp + ".kind", "unknown port kind '" + ports[k]["kind"].get<std::string>() + "'");
            port.kind = *kind;
            port.direction = direction_of(port.kind);
            if (auto it = ports[k].find("direction"); it != ports[k].end()) {
                const std::string dir = d::as_string(*it, pp + ".direction");
                if (dir == "in") port.direction = PortDirection::in;
                else if (dir == "out") port.direction = PortDirection::out;
                else throw ParseError(pp + ".direction", "expected 'in' or 'out'");
            }
            s.ports.push_back(std::move(port));
        }
        if (auto it = subs[i].find("config"); it != subs[i].end()) s.config = d::as_object(*it, p + ".config");
        mms.submodels.push_back(std::move(s));
    }

    if (auto it = doc.find("mappers"); it != doc.end()) {
        const auto& arr = d::as_array(*it, "mappers");
        for (std::size_t i = 0; i < arr.size(); ++i) mms.mappers.push_back(mapper_from_json(arr[i], d::element("mappers", i)));
    }

    const auto& conds = d::as_array(d::require(doc, "conduits", ""), "conduits");
    for (std::size_t i = 0; i < conds.size(); ++i) {
        const std::string p = d::element("conduits", i);
        Conduit c;
        c.id = d::as_string(d::require(conds[i], "id", p), p + ".id");
        c.from = endpoint_from_json(d::require(conds[i], "from", p), p + ".from");
        c.to = endpoint_from_json(d::require(conds[i], "to", p), p + ".to");
        if (auto it = conds[i].find("mapper"); it != conds[i].end() && !it->is_null())
            c.mapper = d::as_string(*it, p + ".mapper");
        const auto tmpl = template_from_string(d::as_string(d::require(conds[i], "template", p), p + ".template"));
        if (!tmpl) throw ParseError(p + ".template", "expected 'serial' or 'parallel'");
        c.coupling = *tmpl;
        mms.conduits.push_back(std::move(c));
    }
    return mms;
}

Mms parse_mms_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ParseError("(document)", err.what());
    }
    return parse_mms(doc);
}

} // namespace mmskit
