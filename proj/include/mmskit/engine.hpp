#pragma once

#include "mmskit/mms.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace mmskit {

using PortValues = std::map<std::string, double>;

/// Recorded outputs of one sub-model run: one row per native step.
struct Trace {
    std::vector<std::string> columns;
    std::vector<long> ticks;
    std::vector<std::vector<double>> rows;

    void append(long tick, std::vector<double> row) {
        ticks.push_back(tick);
        rows.push_back(std::move(row));
    }
    /// Index of `column`; throws Error when absent.
    std::size_t column(const std::string& name) const;

    bool operator==(const Trace&) const = default;
};

/// Behavior contract of an executable sub-model. After `finished()` holds,
/// `advance()` is a no-op and `final_outputs()` is stable. Given identical
/// config, F_init values, injected S/B values and stream seed, outputs are
/// bit-identical across runs.
class SubmodelInstance {
public:
    virtual ~SubmodelInstance() = default;

    virtual void initialize(const nlohmann::json& config, const PortValues& f_init, std::uint64_t stream_seed) = 0;
    virtual void advance() = 0;
    virtual bool finished() const = 0;
    /// O_i port values at the current step.
    virtual PortValues intermediate_outputs() const = 0;
    /// S/B port values injected at a synchronization point.
    virtual void accept(const PortValues& inputs) = 0;
    virtual PortValues final_outputs() const = 0;

    /// Native steps taken so far.
    virtual long tick() const = 0;
    /// Elapsed simulated time in days, the engine's common clock unit.
    virtual double clock_days() const = 0;
    virtual const Trace& trace() const = 0;
};

using SubmodelFactory = std::function<std::unique_ptr<SubmodelInstance>()>;
using Registry = std::map<std::string, SubmodelFactory>;

enum class PhaseKind { serial_run, parallel_group };

struct Phase {
    PhaseKind kind = PhaseKind::serial_run;
    std::vector<std::string> submodels;
    /// Parallel groups: member whose steps define the synchronization ticks
    /// (the coarsest time grain) and that grain's label.
    std::string pacer;
    std::string sync_level;
    /// Parallel conduits fired at every synchronization tick.
    std::vector<std::string> exchanges;
    /// Serial conduits fired once this phase's members have finished.
    std::vector<std::string> fire_after;

    bool operator==(const Phase&) const = default;
};

/// Consecutive phases; a cyclic block repeats `iterations` times.
struct PlanBlock {
    std::vector<Phase> phases;
    int iterations = 1;
    bool cyclic = false;

    bool operator==(const PlanBlock&) const = default;
};

struct ExecutionPlan {
    std::vector<PlanBlock> blocks;

    /// Serial conduit firings implied by the plan.
    std::size_t serial_firings() const;
    std::vector<Phase> flattened() const;
    std::string describe() const;
};

/// Orders sub-models into phases: parallel-coupled components become one
/// parallel phase, serial components are ordered topologically, and serial
/// cycles become blocks bounded by `meta.max_iterations`. Throws Error for
/// invalid structures or unbounded cycles.
ExecutionPlan plan_execution(const Mms& mms);

/// Dotted-path overrides: `<submodel>.<config path>`, `mappers.<id>.<slot>`
/// or `meta.max_iterations`.
using Scenario = nlohmann::json;

/// Throws Error for paths naming unknown sub-models or mappers.
Mms apply_scenario(const Mms& mms, const Scenario& scenario);

struct SubmodelRun {
    std::string submodel;
    int iteration = 1;
    Trace trace;
    PortValues final_outputs;

    bool operator==(const SubmodelRun&) const = default;
};

struct TransferRecord {
    long tick = 0;
    std::string conduit;
    int iteration = 1;
    double value_in = 0.0;
    double value_out = 0.0;

    bool operator==(const TransferRecord&) const = default;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<SubmodelRun> runs;
    std::vector<TransferRecord> transfers;
    std::vector<std::string> log;
    double wall_time_ms = 0.0;

    /// Latest run of `submodel`, or null.
    const SubmodelRun* last_run(const std::string& submodel) const;
    /// Equality of everything except wall time.
    bool same_outcome(const RunResult& other) const;
};

/// Executes the plan of `apply_scenario(mms, scenario)`. Every sub-model
/// draws from its own stream derived from (seed, sub-model id). Throws Error
/// for unregistered sub-models (before executing anything) and for mapper
/// failures, naming the conduit and tick.
RunResult run(const Mms& mms, const Registry& registry, const Scenario& scenario, std::uint64_t seed);

/// One `<submodel>.csv` per sub-model run (suffix `_iterN` past the first
/// iteration) plus `transfers.csv`.
void write_run_result(const RunResult& result, const std::filesystem::path& dir);

} // namespace mmskit
