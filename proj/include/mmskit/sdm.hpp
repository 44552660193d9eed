#pragma once

#include "mmskit/engine.hpp"
#include "mmskit/expr.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace mmskit::sdm {

/// Net rate of change of one stock.
struct Flow {
    std::string stock;
    Expression rate;
};

struct StockFlowSystem {
    Bindings stocks;
    Bindings parameters;
    std::vector<Flow> flows;
    double dt = 0.25;
    double horizon = 30.0;
    /// Stocks clamped to [0, 1] after every step.
    std::set<std::string> percentage_stocks;
    double time = 0.0;

    /// Throws Error for dt <= 0, horizon < dt, flows on unknown stocks,
    /// names shared between stocks and parameters, or free variables that
    /// are neither.
    void check() const;
};

struct ClampEvent {
    double time = 0.0;
    std::string stock;
    double raw = 0.0;
    double clamped = 0.0;
};

struct StepResult {
    Bindings stocks;
    std::vector<ClampEvent> clamps;
};

/// One explicit Euler step: every flow is evaluated against the stock
/// values at the start of the step. Throws Error naming a flow whose rate
/// fails to evaluate or is non-finite.
StepResult sdm_step(const StockFlowSystem& sys);

/// Applies sdm_step to `sys` in place, advancing `sys.time` by dt.
std::vector<ClampEvent> advance(StockFlowSystem& sys);

/// Long-term skills/income model: goal-adjusting percentages of highly
/// skilled pupils (`hsp`) and high-income families (`hif`).
nlohmann::json default_config();

/// Builds a system from a kernel config (keys `stocks`, `parameters`,
/// `flows`, `dt`, `horizon`, `percentage_stocks`, `inputs`, `outputs`).
StockFlowSystem system_from_config(const nlohmann::json& config);

/// Stock-flow kernel. `config.inputs` maps in-port names to stocks (F_init
/// and S set the stock, B sets a parameter of the same name when no stock
/// matches); `config.outputs` maps out-port names to stocks.
class SdmKernel : public SubmodelInstance {
public:
    void initialize(const nlohmann::json& config, const PortValues& f_init, std::uint64_t stream_seed) override;
    void advance() override;
    bool finished() const override;
    PortValues intermediate_outputs() const override;
    void accept(const PortValues& inputs) override;
    PortValues final_outputs() const override;
    long tick() const override { return steps_; }
    double clock_days() const override { return sys_.time * 365.0; }
    const Trace& trace() const override { return trace_; }

    const StockFlowSystem& system() const { return sys_; }
    const std::vector<ClampEvent>& clamps() const { return clamps_; }

private:
    void record();
    PortValues read_ports() const;

    StockFlowSystem sys_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
    long steps_ = 0;
    long total_steps_ = 0;
    Trace trace_;
    std::vector<ClampEvent> clamps_;
};

} // namespace mmskit::sdm
