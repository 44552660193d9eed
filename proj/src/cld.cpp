#include "mmskit/cld.hpp"

#include "json_util.hpp"
#include "mmskit/error.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <tuple>

namespace mmskit {

using nlohmann::json;

const Dimension* Cld::dimension(const std::string& name) const {
    auto it = std::find_if(dimensions.begin(), dimensions.end(), [&](const auto& d) { return d.name == name; });
    return it == dimensions.end() ? nullptr : &*it;
}

const Factor* Cld::factor(const std::string& id) const {
    auto it = std::find_if(factors.begin(), factors.end(), [&](const auto& f) { return f.id == id; });
    return it == factors.end() ? nullptr : &*it;
}

const CausalLink* Cld::link(int id) const {
    auto it = std::find_if(links.begin(), links.end(), [&](const auto& l) { return l.id == id; });
    return it == links.end() ? nullptr : &*it;
}

ValidationReport validate_cld(const Cld& cld) {
    ValidationReport report;

    std::set<std::string> dim_names;
    for (const auto& dim : cld.dimensions) {
        const std::string subject = "dimension " + dim.name;
        if (dim.name.empty()) report.add("dimension_unnamed", subject, "dimension has an empty name");
        if (!dim_names.insert(dim.name).second) report.add("dimension_duplicate", subject, "declared more than once");
        if (dim.levels.empty()) report.add("dimension_empty", subject, "declares no levels");
        std::set<std::string> seen;
        for (const auto& level : dim.levels) {
            if (!seen.insert(level).second)
                report.add("level_duplicate", subject, "level '" + level + "' declared more than once");
        }
    }

    std::set<std::string> factor_ids;
    for (const auto& f : cld.factors) {
        const std::string subject = "factor " + f.id;
        if (f.id.empty()) report.add("factor_unnamed", subject, "factor has an empty id");
        if (!factor_ids.insert(f.id).second) report.add("factor_duplicate", subject, "id declared more than once");
        for (const auto& [dim_name, interval] : f.intervals) {
            const Dimension* dim = cld.dimension(dim_name);
            if (!dim) {
                report.add("undeclared_dimension", subject, "interval on undeclared dimension '" + dim_name + "'");
                continue;
            }
            if (auto defect = check_interval(interval, *dim); !defect.empty())
                report.add("malformed_interval", subject, dim_name + " interval: " + defect);
        }
    }

    std::set<int> link_ids;
    for (const auto& l : cld.links) {
        const std::string subject = "link " + std::to_string(l.id);
        if (!link_ids.insert(l.id).second) report.add("link_duplicate", subject, "id declared more than once");
        if (!factor_ids.count(l.source)) report.add("dangling_link", subject, "source '" + l.source + "' is not a factor");
        if (!factor_ids.count(l.target)) report.add("dangling_link", subject, "target '" + l.target + "' is not a factor");
        if (l.source == l.target && !l.allow_self_loop)
            report.add("self_loop", subject, "self-loop on '" + l.source + "' is not flagged as allowed");
    }

    const auto& hints = cld.decomposition_hints;
    for (const auto& [dim_name, bands] : hints.bands) {
        const Dimension* dim = cld.dimension(dim_name);
        if (!dim) {
            report.add("hint_dimension", "decomposition_hints", "bands on undeclared dimension '" + dim_name + "'");
            continue;
        }
        std::set<std::string> names;
        for (const auto& band : bands) {
            const std::string subject = "band " + dim_name + "." + band.name;
            if (!names.insert(band.name).second) report.add("hint_band_duplicate", subject, "band declared twice");
            if (auto defect = check_interval(ScaleInterval::make(band.from, band.to), *dim); !defect.empty())
                report.add("hint_band", subject, defect);
        }
    }
    for (int id : hints.constant_transfers) {
        if (!link_ids.count(id))
            report.add("hint_link", "decomposition_hints", "constant transfer names unknown link " + std::to_string(id));
    }

    report.normalize();
    return report;
}

std::string_view to_string(LoopKind kind) {
    return kind == LoopKind::reinforcing ? "reinforcing" : "balancing";
}

LoopSearch find_loops(const Cld& cld, std::size_t max_length) {
    LoopSearch result;
    result.max_length = max_length;
    if (max_length == 0) return result;

    std::vector<std::string> ids;
    for (const auto& f : cld.factors) ids.push_back(f.id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto index = [&](const std::string& id) {
        return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };

    // Outgoing links per factor, ordered by (target, link id).
    std::vector<std::vector<const CausalLink*>> out(ids.size());
    for (const auto& l : cld.links) {
        if (!std::binary_search(ids.begin(), ids.end(), l.source) || !std::binary_search(ids.begin(), ids.end(), l.target))
            continue;
        out[index(l.source)].push_back(&l);
    }
    for (auto& edges : out) {
        std::sort(edges.begin(), edges.end(), [&](const CausalLink* a, const CausalLink* b) {
            return std::pair(index(a->target), a->id) < std::pair(index(b->target), b->id);
        });
    }

    std::vector<bool> on_path(ids.size(), false);
    std::vector<const CausalLink*> path;

    auto emit = [&](std::size_t start) {
        Loop loop;
        std::size_t negatives = 0;
        std::size_t node = start;
        for (const auto* l : path) {
            loop.factors.push_back(ids[node]);
            loop.link_ids.push_back(l->id);
            if (l->polarity == Polarity::negative) ++negatives;
            node = index(l->target);
        }
        loop.kind = negatives % 2 == 0 ? LoopKind::reinforcing : LoopKind::balancing;
        result.loops.push_back(std::move(loop));
    };

    std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t start, std::size_t node) {
        for (const auto* l : out[node]) {
            const std::size_t t = index(l->target);
            if (t == start) {
                path.push_back(l);
                emit(start);
                path.pop_back();
            } else if (t > start && !on_path[t]) {
                if (path.size() + 1 >= max_length) {
                    result.truncated = true;
                    continue;
                }
                path.push_back(l);
                on_path[t] = true;
                dfs(start, t);
                on_path[t] = false;
                path.pop_back();
            }
        }
    };

    for (std::size_t s = 0; s < ids.size(); ++s) {
        on_path[s] = true;
        dfs(s, s);
        on_path[s] = false;
    }

    std::sort(result.loops.begin(), result.loops.end(), [](const Loop& a, const Loop& b) {
        return std::tie(a.factors, a.link_ids) < std::tie(b.factors, b.link_ids);
    });
    std::stable_sort(result.loops.begin(), result.loops.end(),
                     [](const Loop& a, const Loop& b) { return a.link_ids.size() < b.link_ids.size(); });
    return result;
}

// --- JSON -------------------------------------------------------------------

json interval_to_json(const ScaleInterval& interval) {
    if (interval.constant) return json::array({"constant"});
    return json::array({interval.grain, interval.extent});
}

ScaleInterval interval_from_json(const json& value, const std::string& field) {
    const auto& arr = detail::as_array(value, field);
    if (arr.size() == 1 && arr[0].is_string() && arr[0].get<std::string>() == "constant")
        return ScaleInterval::make_constant();
    if (arr.size() != 2) throw ParseError(field, "expected [grain, extent] or [\"constant\"]");
    return ScaleInterval::make(detail::as_string(arr[0], detail::element(field, 0)),
                               detail::as_string(arr[1], detail::element(field, 1)));
}

namespace {

MergeRules parse_hints(const json& j, const std::string& path) {
    MergeRules rules;
    detail::as_object(j, path);
    if (auto it = j.find("bands"); it != j.end()) {
        const std::string bpath = detail::child(path, "bands");
        for (const auto& [dim, list] : detail::as_object(*it, bpath).items()) {
            const std::string dpath = bpath + "." + dim;
            auto& bands = rules.bands[dim];
            const auto& arr = detail::as_array(list, dpath);
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string p = detail::element(dpath, i);
                bands.push_back({detail::as_string(detail::require(arr[i], "name", p), p + ".name"),
                                 detail::as_string(detail::require(arr[i], "from", p), p + ".from"),
                                 detail::as_string(detail::require(arr[i], "to", p), p + ".to")});
            }
        }
    }
    if (auto it = j.find("constant_transfers"); it != j.end()) {
        const std::string cpath = detail::child(path, "constant_transfers");
        const auto& arr = detail::as_array(*it, cpath);
        for (std::size_t i = 0; i < arr.size(); ++i)
            rules.constant_transfers.push_back(detail::as_int(arr[i], detail::element(cpath, i)));
    }
    return rules;
}

json hints_to_json(const MergeRules& rules) {
    json j = json::object();
    json bands = json::object();
    for (const auto& [dim, list] : rules.bands) {
        json arr = json::array();
        for (const auto& b : list) arr.push_back({{"name", b.name}, {"from", b.from}, {"to", b.to}});
        bands[dim] = std::move(arr);
    }
    j["bands"] = std::move(bands);
    j["constant_transfers"] = rules.constant_transfers;
    return j;
}

} // namespace

Cld parse_cld(const json& doc) {
    Cld cld;
    detail::as_object(doc, "");

    const auto& dims = detail::as_array(detail::require(doc, "dimensions", ""), "dimensions");
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const std::string p = detail::element("dimensions", i);
        Dimension d;
        d.name = detail::as_string(detail::require(dims[i], "name", p), p + ".name");
        d.levels = detail::as_string_list(detail::require(dims[i], "levels", p), p + ".levels");
        cld.dimensions.push_back(std::move(d));
    }

    const auto& factors = detail::as_array(detail::require(doc, "factors", ""), "factors");
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const std::string p = detail::element("factors", i);
        const auto& fj = factors[i];
        Factor f;
        f.id = detail::as_string(detail::require(fj, "id", p), p + ".id");
        f.label = detail::optional_string(fj, "label", p);
        f.domain = detail::optional_string(fj, "domain", p);
        f.note = detail::optional_string(fj, "note", p);
        if (auto it = fj.find("intervals"); it != fj.end()) {
            const std::string ipath = p + ".intervals";
            for (const auto& [dim, value] : detail::as_object(*it, ipath).items())
                f.intervals.emplace(dim, interval_from_json(value, ipath + "." + dim));
        }
        cld.factors.push_back(std::move(f));
    }

    const auto& links = detail::as_array(detail::require(doc, "links", ""), "links");
    for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string p = detail::element("links", i);
        const auto& lj = links[i];
        CausalLink l;
        l.id = detail::as_int(detail::require(lj, "id", p), p + ".id");
        l.source = detail::as_string(detail::require(lj, "source", p), p + ".source");
        l.target = detail::as_string(detail::require(lj, "target", p), p + ".target");
        const auto pol = detail::as_string(detail::require(lj, "polarity", p), p + ".polarity");
        if (pol == "+") l.polarity = Polarity::positive;
        else if (pol == "-") l.polarity = Polarity::negative;
        else throw ParseError(p + ".polarity", "unknown polarity '" + pol + "' (expected \"+\" or \"-\")");
        if (auto it = lj.find("self_loop"); it != lj.end()) l.allow_self_loop = detail::as_bool(*it, p + ".self_loop");
        l.note = detail::optional_string(lj, "note", p);
        cld.links.push_back(std::move(l));
    }

    if (auto it = doc.find("decomposition_hints"); it != doc.end())
        cld.decomposition_hints = parse_hints(*it, "decomposition_hints");
    return cld;
}

json to_json(const Cld& cld) {
    json doc = json::object();
    json dims = json::array();
    for (const auto& d : cld.dimensions) dims.push_back({{"name", d.name}, {"levels", d.levels}});
    doc["dimensions"] = std::move(dims);

    json factors = json::array();
    for (const auto& f : cld.factors) {
        json fj = {{"id", f.id}, {"label", f.label}, {"domain", f.domain}};
        json intervals = json::object();
        for (const auto& [dim, iv] : f.intervals) intervals[dim] = interval_to_json(iv);
        fj["intervals"] = std::move(intervals);
        if (!f.note.empty()) fj["note"] = f.note;
        factors.push_back(std::move(fj));
    }
    doc["factors"] = std::move(factors);

    json links = json::array();
    for (const auto& l : cld.links) {
        json lj = {{"id", l.id},
                   {"source", l.source},
                   {"target", l.target},
                   {"polarity", l.polarity == Polarity::positive ? "+" : "-"}};
        if (l.allow_self_loop) lj["self_loop"] = true;
        if (!l.note.empty()) lj["note"] = l.note;
        links.push_back(std::move(lj));
    }
    doc["links"] = std::move(links);
    if (!cld.decomposition_hints.empty()) doc["decomposition_hints"] = hints_to_json(cld.decomposition_hints);
    return doc;
}

} // namespace mmskit
