#pragma once

#include "mmskit/decomposition.hpp"
#include "mmskit/expr.hpp"
#include "mmskit/report.hpp"
#include "mmskit/scales.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mmskit {

enum class Paradigm { agent_based, stock_flow };

enum class PortDirection { in, out };

/// Coupling-port kinds: O_i intermediate output, O_f final output, F_init
/// initial condition, S state input, B boundary input.
enum class PortKind { O_i, O_f, F_init, S, B };

enum class CouplingTemplate { serial, parallel };

std::string_view to_string(Paradigm p);
std::string_view to_string(PortDirection d);
std::string_view to_string(PortKind k);
std::string_view to_string(CouplingTemplate t);
std::optional<Paradigm> paradigm_from_string(std::string_view s);
std::optional<PortKind> port_kind_from_string(std::string_view s);
std::optional<CouplingTemplate> template_from_string(std::string_view s);

/// Direction implied by a port kind.
PortDirection direction_of(PortKind kind);

struct Port {
    std::string name;
    PortDirection direction = PortDirection::out;
    PortKind kind = PortKind::O_f;

    bool operator==(const Port&) const = default;
};

struct SubmodelSpec {
    std::string id;
    std::vector<std::string> factors;
    std::map<std::string, ScaleInterval> intervals;
    Paradigm paradigm = Paradigm::agent_based;
    std::vector<Port> ports;
    nlohmann::json config = nlohmann::json::object();

    const Port* port(std::string_view name) const;
    const ScaleInterval* interval(const std::string& dim) const;

    bool operator==(const SubmodelSpec&) const = default;
};

enum class MapperKind { value_transfer, aggregate, disaggregate, expression, conditional, composite };

std::string_view to_string(MapperKind k);
std::optional<MapperKind> mapper_kind_from_string(std::string_view s);

/// sum/mean/weighted apply to aggregate mappers, uniform/weighted to
/// disaggregate ones.
enum class AggregationMethod { sum, mean, weighted, uniform };

std::string_view to_string(AggregationMethod m);
std::optional<AggregationMethod> aggregation_from_string(std::string_view s);

struct AggregationSpec {
    AggregationMethod method = AggregationMethod::sum;
    std::vector<double> weights;

    bool operator==(const AggregationSpec&) const = default;
};

/// An operation applied to information in transit between sub-models.
/// `parameters` pre-bind input slots to fixed values; the remaining
/// ("free") slots are fed by conduits or by the caller.
struct Mapper {
    std::string id;
    MapperKind kind = MapperKind::value_transfer;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, double> parameters;
    std::string body;
    std::optional<AggregationSpec> aggregation;
    /// composite only: applied in order over a shared slot environment.
    std::vector<Mapper> stages;

    std::vector<std::string> free_inputs() const;

    bool operator==(const Mapper&) const = default;
};

struct Endpoint {
    std::string submodel;
    std::string port;

    bool operator==(const Endpoint&) const = default;
};

struct Conduit {
    std::string id;
    Endpoint from;
    std::optional<std::string> mapper;
    Endpoint to;
    CouplingTemplate coupling = CouplingTemplate::serial;

    bool operator==(const Conduit&) const = default;
};

struct MmsMeta {
    std::string name;
    std::string version;
    /// Scale dimensions the sub-model intervals refer to.
    std::vector<Dimension> dimensions;
    /// Required when serial conduits form a cycle.
    std::optional<int> max_iterations;
    /// Free-text project constraints (budget, time, ...).
    std::vector<std::string> constraints;

    const Dimension* dimension(std::string_view name) const;

    bool operator==(const MmsMeta&) const = default;
};

/// Multi-model structure: sub-models as black boxes plus the conduits and
/// mappers that couple them.
struct Mms {
    std::vector<SubmodelSpec> submodels;
    std::vector<Mapper> mappers;
    std::vector<Conduit> conduits;
    MmsMeta meta;

    const SubmodelSpec* submodel(std::string_view id) const;
    SubmodelSpec* submodel(std::string_view id);
    const Mapper* mapper(std::string_view id) const;
    Mapper* mapper(std::string_view id);
    const Conduit* conduit(std::string_view id) const;

    bool operator==(const Mms&) const = default;
};

/// Overlapping time intervals couple in parallel; separated or contiguous
/// ones couple in series. Throws for constant intervals.
CouplingTemplate infer_coupling_template(const ScaleInterval& sender, const ScaleInterval& receiver,
                                         const Dimension& time);

/// Maps a cross link to a declared mapper, or to a pure value transfer.
struct ValueTransfer {
    bool operator==(const ValueTransfer&) const = default;
};
using Binding = std::variant<std::string, ValueTransfer>;

struct BuildOptions {
    std::string name = "mms";
    std::string version = "1.0";
    std::string time_dimension = "time";
    std::optional<int> max_iterations;
    std::map<std::string, nlohmann::json> configs;
};

/// One sub-model per group and one conduit per cross link. Throws Error when
/// a group lacks a paradigm or a cross link lacks a binding.
Mms build_mms(const Cld& cld, const Decomposition& decomposition, const std::map<std::string, Paradigm>& paradigms,
              const std::vector<Mapper>& mappers, const std::map<int, Binding>& bindings,
              const BuildOptions& options = {});

/// Port/template rules, reference resolution, mapper arity and grammar,
/// bounded serial cycles, and (when `meta` declares a time dimension) that
/// each conduit's template matches its endpoints' time intervals.
ValidationReport validate_mms(const Mms& mms);

/// Mapper-local checks (also used by validate_mms).
void validate_mapper(const Mapper& mapper, ValidationReport& report, const std::string& subject);

using SlotValues = std::map<std::string, double>;

/// Applies a mapper. Parameters supply defaults for their slots; explicit
/// inputs override them. Throws Error for unbound slots, non-finite values,
/// division by zero, or weights that do not sum to 1 within 1e-9.
SlotValues eval_mapper(const Mapper& mapper, const SlotValues& inputs);

/// Serial conduits form at least one cycle.
bool has_serial_cycle(const Mms& mms);

} // namespace mmskit
