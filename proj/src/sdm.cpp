#include "mmskit/sdm.hpp"

#include "json_util.hpp"
#include "mmskit/error.hpp"

#include <algorithm>
#include <cmath>

namespace mmskit::sdm {

using nlohmann::json;

void StockFlowSystem::check() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("dt must be > 0");
    if (!(horizon >= dt) || !std::isfinite(horizon)) throw Error("horizon must be >= dt");
    for (const auto& [name, v] : stocks) {
        if (parameters.count(name)) throw Error("'" + name + "' is both a stock and a parameter");
        if (!std::isfinite(v)) throw Error("stock '" + name + "' is not finite");
    }
    for (const auto& name : percentage_stocks) {
        if (!stocks.count(name)) throw Error("percentage stock '" + name + "' is not a stock");
    }
    for (const auto& f : flows) {
        if (!stocks.count(f.stock)) throw Error("flow on unknown stock '" + f.stock + "'");
        for (const auto& v : f.rate.free_variables()) {
            if (!stocks.count(v) && !parameters.count(v))
                throw Error("flow on '" + f.stock + "' uses unknown name '" + v + "'");
        }
    }
}

StepResult sdm_step(const StockFlowSystem& sys) {
    Bindings env = sys.parameters;
    for (const auto& [k, v] : sys.stocks) env[k] = v;

    StepResult r;
    r.stocks = sys.stocks;
    for (const auto& f : sys.flows) {
        double rate;
        try {
            rate = f.rate.evaluate(env);
        } catch (const Error& err) {
            throw Error("flow on '" + f.stock + "': " + err.what());
        }
        if (!std::isfinite(rate)) throw Error("flow on '" + f.stock + "' is not finite");
        r.stocks.at(f.stock) += sys.dt * rate;
    }
    for (const auto& name : sys.percentage_stocks) {
        double& v = r.stocks.at(name);
        if (v < 0.0 || v > 1.0) {
            const double c = std::clamp(v, 0.0, 1.0);
            r.clamps.push_back({sys.time + sys.dt, name, v, c});
            v = c;
        }
    }
    return r;
}

std::vector<ClampEvent> advance(StockFlowSystem& sys) {
    StepResult r = sdm_step(sys);
    sys.stocks = std::move(r.stocks);
    sys.time += sys.dt;
    return r.clamps;
}

json default_config() {
    return {{"stocks", {{"hsp", 0.4}, {"hif", 0.3}}},
            {"parameters", {{"alpha", 0.2}, {"beta", 0.6}, {"hjo", 0.5}, {"tau_hif", 10.0}, {"tau_hsp", 15.0}}},
            {"flows",
             {{"hsp", "(min(max(alpha + beta * hif, 0), 1) - hsp) / tau_hsp"}, {"hif", "(hjo * hsp - hif) / tau_hif"}}},
            {"dt", 0.25},
            {"horizon", 30.0},
            {"percentage_stocks", {"hsp", "hif"}},
            {"inputs", {{"pct_highly_skilled", "hsp"}}},
            {"outputs", {{"pct_high_income", "hif"}, {"pct_highly_skilled", "hsp"}}}};
}

namespace {

// Config with missing keys filled from the defaults; maps merge per entry.
json effective_config(const json& config) {
    json eff = default_config();
    if (config.is_null()) return eff;
    detail::as_object(config, "config");
    for (const auto& [key, value] : config.items()) {
        if (!eff.contains(key)) throw ParseError(key, "unknown key");
        if (key == "stocks" || key == "parameters" || key == "flows" || key == "inputs" || key == "outputs") {
            detail::as_object(value, key);
            for (const auto& [k, v] : value.items()) eff[key][k] = v;
        } else {
            eff[key] = value;
        }
    }
    return eff;
}

} // namespace

StockFlowSystem system_from_config(const json& config) {
    const json eff = effective_config(config);
    StockFlowSystem sys;
    for (const auto& [k, v] : eff["stocks"].items()) sys.stocks[k] = detail::as_number(v, "stocks." + k);
    for (const auto& [k, v] : eff["parameters"].items()) sys.parameters[k] = detail::as_number(v, "parameters." + k);
    for (const auto& [k, v] : eff["flows"].items()) {
        const std::string body = detail::as_string(v, "flows." + k);
        try {
            sys.flows.push_back({k, Expression::parse(body)});
        } catch (const ParseError& err) {
            throw ParseError("flows." + k, err.what());
        }
    }
    sys.dt = detail::as_number(eff["dt"], "dt");
    sys.horizon = detail::as_number(eff["horizon"], "horizon");
    for (const auto& name : detail::as_string_list(eff["percentage_stocks"], "percentage_stocks"))
        sys.percentage_stocks.insert(name);
    sys.check();
    return sys;
}

void SdmKernel::initialize(const json& config, const PortValues& f_init, std::uint64_t) {
    const json eff = effective_config(config);
    sys_ = system_from_config(config);
    inputs_.clear();
    outputs_.clear();
    for (const auto& [k, v] : eff["inputs"].items()) inputs_[k] = detail::as_string(v, "inputs." + k);
    for (const auto& [k, v] : eff["outputs"].items()) {
        outputs_[k] = detail::as_string(v, "outputs." + k);
        if (!sys_.stocks.count(outputs_[k])) throw Error("output port '" + k + "' maps to unknown stock");
    }
    accept(f_init);
    total_steps_ = std::lround(sys_.horizon / sys_.dt);
    steps_ = 0;
    clamps_.clear();
    trace_ = Trace{};
    trace_.columns.push_back("time");
    for (const auto& [name, v] : sys_.stocks) trace_.columns.push_back(name);
    record();
}

void SdmKernel::record() {
    std::vector<double> row{sys_.time};
    for (const auto& [name, v] : sys_.stocks) row.push_back(v);
    trace_.append(steps_, std::move(row));
}

void SdmKernel::advance() {
    if (finished()) return;
    auto clamps = sdm::advance(sys_);
    ++steps_;
    sys_.time = static_cast<double>(steps_) * sys_.dt;
    clamps_.insert(clamps_.end(), clamps.begin(), clamps.end());
    record();
}

bool SdmKernel::finished() const { return steps_ >= total_steps_; }

PortValues SdmKernel::read_ports() const {
    PortValues out;
    for (const auto& [port, stock] : outputs_) out[port] = sys_.stocks.at(stock);
    return out;
}

PortValues SdmKernel::intermediate_outputs() const { return read_ports(); }
PortValues SdmKernel::final_outputs() const { return read_ports(); }

void SdmKernel::accept(const PortValues& inputs) {
    for (const auto& [port, value] : inputs) {
        auto it = inputs_.find(port);
        const std::string& name = it == inputs_.end() ? port : it->second;
        if (auto s = sys_.stocks.find(name); s != sys_.stocks.end()) s->second = value;
        else if (auto p = sys_.parameters.find(name); p != sys_.parameters.end()) p->second = value;
        else throw Error("stock-flow kernel has no input '" + port + "'");
    }
}

} // namespace mmskit::sdm
