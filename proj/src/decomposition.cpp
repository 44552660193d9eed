#include "mmskit/decomposition.hpp"

#include "json_util.hpp"
#include "mmskit/error.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

namespace mmskit {

using nlohmann::json;

const SubmodelGroup* Decomposition::group(const std::string& id) const {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.id == id; });
    return it == groups.end() ? nullptr : &*it;
}

const SubmodelGroup* Decomposition::group_of(const std::string& factor_id) const {
    for (const auto& g : groups) {
        if (std::find(g.factors.begin(), g.factors.end(), factor_id) != g.factors.end()) return &g;
    }
    return nullptr;
}

const ReplicatedFactor* Decomposition::replica_for_link(int link_id) const {
    auto it = std::find_if(replicated_factors.begin(), replicated_factors.end(),
                           [&](const auto& r) { return r.link_id == link_id; });
    return it == replicated_factors.end() ? nullptr : &*it;
}

namespace {

// One coordinate of a factor's interval class.
struct Component {
    enum Kind { band = 0, exact = 1, absent = 2 } kind = absent;
    std::size_t a = 0;
    std::size_t b = 0;
    std::string label;
    ScaleInterval representative;

    auto order() const { return std::tie(kind, a, b); }
};

using Key = std::vector<Component>;

bool key_less(const Key& x, const Key& y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(),
                                        [](const Component& p, const Component& q) { return p.order() < q.order(); });
}

bool key_equal(const Key& x, const Key& y) { return !key_less(x, y) && !key_less(y, x); }

void check_rules(const Cld& cld, const MergeRules& rules) {
    for (const auto& [dim_name, bands] : rules.bands) {
        const Dimension* dim = cld.dimension(dim_name);
        if (!dim) throw Error("merge rules reference unknown dimension '" + dim_name + "'");
        std::set<std::string> names;
        for (const auto& band : bands) {
            if (!names.insert(band.name).second)
                throw Error("merge rules declare band '" + band.name + "' twice in dimension '" + dim_name + "'");
            if (auto defect = check_interval(ScaleInterval::make(band.from, band.to), *dim); !defect.empty())
                throw Error("merge rule band '" + band.name + "': " + defect);
        }
    }
    for (int id : rules.constant_transfers) {
        if (!cld.link(id)) throw Error("merge rules reference unknown link " + std::to_string(id));
    }
}

} // namespace

Decomposition decompose(const Cld& cld, const std::vector<std::string>& dims, const std::optional<MergeRules>& rules_in) {
    if (auto report = validate_cld(cld); !report.empty()) {
        std::ostringstream os;
        os << "cannot decompose an invalid CLD; " << report;
        throw Error(os.str());
    }
    if (dims.empty()) throw Error("decomposition needs at least one dimension");
    std::vector<const Dimension*> dimensions;
    for (const auto& name : dims) {
        const Dimension* d = cld.dimension(name);
        if (!d) throw Error("unknown dimension '" + name + "'");
        if (std::find(dimensions.begin(), dimensions.end(), d) != dimensions.end())
            throw Error("dimension '" + name + "' listed twice");
        dimensions.push_back(d);
    }
    const MergeRules rules = rules_in.value_or(cld.decomposition_hints);
    check_rules(cld, rules);

    Decomposition out;
    out.dimensions = dims;

    // Classify factors in id order so the output is independent of declaration order.
    std::vector<const Factor*> factors;
    for (const auto& f : cld.factors) factors.push_back(&f);
    std::sort(factors.begin(), factors.end(), [](const Factor* a, const Factor* b) { return a->id < b->id; });

    std::vector<std::pair<Key, const Factor*>> keyed;
    std::set<std::string> parameter_factors;
    for (const Factor* f : factors) {
        bool any_constant = false, any_interval = false;
        for (const auto& name : dims) {
            if (const auto* iv = f->interval(name)) {
                any_interval = true;
                any_constant = any_constant || iv->constant;
            }
        }
        if (any_constant || !any_interval) {
            parameter_factors.insert(f->id);
            continue;
        }

        Key key;
        for (const Dimension* dim : dimensions) {
            Component c;
            const ScaleInterval* iv = f->interval(dim->name);
            if (!iv) {
                c.kind = Component::absent;
                c.label = "-";
                key.push_back(std::move(c));
                continue;
            }
            const auto g = *dim->index_of(iv->grain);
            const auto e = *dim->index_of(iv->extent);
            auto bands_it = rules.bands.find(dim->name);
            if (bands_it == rules.bands.end() || bands_it->second.empty()) {
                c.kind = Component::exact;
                c.a = g;
                c.b = e;
                c.label = iv->grain + "-" + iv->extent;
                c.representative = *iv;
                key.push_back(std::move(c));
                continue;
            }
            const auto& bands = bands_it->second;
            auto contains = [&](const Band& band, std::size_t lo, std::size_t hi) {
                return *dim->index_of(band.from) <= lo && hi <= *dim->index_of(band.to);
            };
            std::optional<std::size_t> chosen;
            for (std::size_t i = 0; i < bands.size() && !chosen; ++i) {
                if (contains(bands[i], g, e)) chosen = i;
            }
            if (!chosen) {
                for (std::size_t i = 0; i < bands.size() && !chosen; ++i) {
                    if (contains(bands[i], g, g)) chosen = i;
                }
                if (!chosen)
                    throw Error("factor '" + f->id + "' " + dim->name + " interval " + to_string(*iv) +
                                " is not covered by any band");
                out.warnings.push_back("factor '" + f->id + "' " + dim->name + " interval " + to_string(*iv) +
                                       " straddles bands; assigned to band '" + bands[*chosen].name +
                                       "' containing its grain");
            }
            c.kind = Component::band;
            c.a = *chosen;
            c.label = bands[*chosen].name;
            c.representative = ScaleInterval::make(bands[*chosen].from, bands[*chosen].to);
            key.push_back(std::move(c));
        }
        keyed.emplace_back(std::move(key), f);
    }

    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return key_less(x.first, y.first); });

    std::vector<Key> keys;
    for (const auto& [key, f] : keyed) {
        if (keys.empty() || !key_equal(keys.back(), key)) {
            keys.push_back(key);
            out.groups.emplace_back();
        }
        out.groups.back().factors.push_back(f->id);
    }

    // Name groups by the coordinates that tell them apart.
    std::vector<bool> distinguishing(dims.size(), false);
    for (std::size_t d = 0; d < dims.size(); ++d) {
        for (const auto& k : keys) distinguishing[d] = distinguishing[d] || k[d].label != keys.front()[d].label;
    }
    for (std::size_t gi = 0; gi < keys.size(); ++gi) {
        std::string id;
        for (std::size_t d = 0; d < dims.size(); ++d) {
            if (!distinguishing[d]) continue;
            if (!id.empty()) id += "/";
            id += keys[gi][d].label;
        }
        if (id.empty()) id = keys[gi][0].label;
        out.groups[gi].id = id;
        for (std::size_t d = 0; d < dims.size(); ++d) {
            if (keys[gi][d].kind != Component::absent) out.groups[gi].intervals[dims[d]] = keys[gi][d].representative;
        }
    }

    std::map<std::string, std::size_t> owner;
    for (std::size_t gi = 0; gi < out.groups.size(); ++gi) {
        for (const auto& id : out.groups[gi].factors) owner[id] = gi;
    }

    std::vector<const CausalLink*> links;
    for (const auto& l : cld.links) links.push_back(&l);
    std::sort(links.begin(), links.end(), [](const CausalLink* a, const CausalLink* b) { return a->id < b->id; });

    std::vector<std::set<std::string>> attached(out.groups.size());
    for (const CausalLink* l : links) {
        const auto s = owner.find(l->source);
        const auto t = owner.find(l->target);
        if (s == owner.end() || t == owner.end()) {
            out.parameter_links.push_back(l->id);
            if (s == owner.end() && t != owner.end()) attached[t->second].insert(l->source);
            if (t == owner.end() && s != owner.end()) attached[s->second].insert(l->target);
        } else if (s->second == t->second) {
            out.internal_links.push_back(l->id);
        } else {
            out.cross_links.push_back(l->id);
        }
    }

    std::set<std::string> taken;
    for (const auto& f : cld.factors) taken.insert(f.id);
    for (int id : rules.constant_transfers) {
        if (std::find(out.cross_links.begin(), out.cross_links.end(), id) == out.cross_links.end())
            throw Error("constant transfer link " + std::to_string(id) + " is not a cross link");
        if (out.replica_for_link(id)) continue;
        const CausalLink* l = cld.link(id);
        std::string copy = l->source + "_const";
        while (taken.count(copy)) copy += "_";
        taken.insert(copy);
        const std::size_t receiver = owner.at(l->target);
        attached[receiver].insert(copy);
        out.replicated_factors.push_back({l->source, copy, out.groups[receiver].id, id});
    }
    std::sort(out.replicated_factors.begin(), out.replicated_factors.end(),
              [](const auto& a, const auto& b) { return a.link_id < b.link_id; });

    for (std::size_t gi = 0; gi < out.groups.size(); ++gi)
        out.groups[gi].parameters.assign(attached[gi].begin(), attached[gi].end());
    return out;
}

json to_json(const Decomposition& d) {
    json groups = json::array();
    for (const auto& g : d.groups) {
        json intervals = json::object();
        for (const auto& [dim, iv] : g.intervals) intervals[dim] = interval_to_json(iv);
        groups.push_back({{"id", g.id}, {"factors", g.factors}, {"parameters", g.parameters}, {"intervals", intervals}});
    }
    json replicas = json::array();
    for (const auto& r : d.replicated_factors)
        replicas.push_back({{"original", r.original}, {"copy", r.copy}, {"group", r.group}, {"link", r.link_id}});
    return {{"dimensions", d.dimensions},       {"groups", groups},
            {"cross_links", d.cross_links},     {"internal_links", d.internal_links},
            {"parameter_links", d.parameter_links}, {"replicated_factors", replicas},
            {"warnings", d.warnings}};
}

Decomposition parse_decomposition(const json& doc) {
    using namespace detail;
    Decomposition d;
    as_object(doc, "");
    auto int_list = [&](const char* key) {
        std::vector<int> out;
        const auto& arr = as_array(require(doc, key, ""), key);
        for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_int(arr[i], element(key, i)));
        return out;
    };
    d.dimensions = as_string_list(require(doc, "dimensions", ""), "dimensions");
    const auto& groups = as_array(require(doc, "groups", ""), "groups");
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const std::string p = element("groups", i);
        SubmodelGroup g;
        g.id = as_string(require(groups[i], "id", p), p + ".id");
        g.factors = as_string_list(require(groups[i], "factors", p), p + ".factors");
        if (groups[i].contains("parameters")) g.parameters = as_string_list(groups[i]["parameters"], p + ".parameters");
        if (groups[i].contains("intervals")) {
            for (const auto& [dim, v] : as_object(groups[i]["intervals"], p + ".intervals").items())
                g.intervals[dim] = interval_from_json(v, p + ".intervals." + dim);
        }
        d.groups.push_back(std::move(g));
    }
    d.cross_links = int_list("cross_links");
    if (doc.contains("internal_links")) d.internal_links = int_list("internal_links");
    if (doc.contains("parameter_links")) d.parameter_links = int_list("parameter_links");
    if (doc.contains("replicated_factors")) {
        const auto& arr = as_array(doc["replicated_factors"], "replicated_factors");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = element("replicated_factors", i);
            d.replicated_factors.push_back({as_string(require(arr[i], "original", p), p + ".original"),
                                            as_string(require(arr[i], "copy", p), p + ".copy"),
                                            as_string(require(arr[i], "group", p), p + ".group"),
                                            as_int(require(arr[i], "link", p), p + ".link")});
        }
    }
    if (doc.contains("warnings")) d.warnings = as_string_list(doc["warnings"], "warnings");
    return d;
}

std::vector<GovernanceFinding> governance_check(const Cld& cld, const std::vector<std::string>& decision_levels,
                                                const std::string& dimension) {
    const Dimension* dim = cld.dimension(dimension);
    if (!dim) throw Error("governance dimension '" + dimension + "' is not declared");
    std::vector<std::size_t> decision;
    for (const auto& level : decision_levels) {
        auto idx = dim->index_of(level);
        if (!idx) throw Error("decision level '" + level + "' is not a level of '" + dimension + "'");
        decision.push_back(*idx);
    }
    std::sort(decision.begin(), decision.end());
    decision.erase(std::unique(decision.begin(), decision.end()), decision.end());

    std::vector<const Factor*> factors;
    for (const auto& f : cld.factors) factors.push_back(&f);
    std::sort(factors.begin(), factors.end(), [](const Factor* a, const Factor* b) { return a->id < b->id; });

    std::vector<GovernanceFinding> findings;
    for (const Factor* f : factors) {
        const ScaleInterval* iv = f->interval(dimension);
        if (!iv || iv->constant || !check_interval(*iv, *dim).empty()) continue;
        const auto g = *dim->index_of(iv->grain);
        const auto e = *dim->index_of(iv->extent);
        std::vector<std::string> inside, above;
        for (auto lvl : decision) {
            if (lvl >= g && lvl <= e) inside.push_back(dim->levels[lvl]);
            else if (lvl > e) above.push_back(dim->levels[lvl]);
        }
        if (inside.size() <= 1 && above.empty()) continue;
        GovernanceFinding finding;
        finding.factor = f->id;
        finding.levels = inside;
        finding.levels.insert(finding.levels.end(), above.begin(), above.end());
        if (!above.empty())
            finding.reason = "interval " + to_string(*iv) + " ends below decision level(s) relevant to it";
        else
            finding.reason = "interval " + to_string(*iv) + " serves several decision levels";
        findings.push_back(std::move(finding));
    }
    return findings;
}

} // namespace mmskit
