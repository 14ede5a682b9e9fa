#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clavir/common.hpp"
#include "clavir/kb.hpp"
#include "clavir/package.hpp"
#include "clavir/workflow.hpp"

namespace clavir::vso {

enum class Direction { In, Out };

std::string_view to_string(Direction dir);

struct Port {
    std::string name;
    Direction direction = Direction::In;
    std::string format;
    SourcePos pos;

    bool operator==(const Port& o) const {
        return name == o.name && direction == o.direction && format == o.format;
    }
};

/// One way of simulating an object: a model/method pair from the knowledge
/// base realized by a concrete package, with ports mapped onto package
/// parameters.
struct ModelSelection {
    std::string model;
    std::string method;
    std::string package;
    std::map<std::string, std::string> port_map;
    SourcePos pos;

    bool operator==(const ModelSelection& o) const {
        return model == o.model && method == o.method && package == o.package && port_map == o.port_map;
    }
};

struct SimulationObject {
    std::string name;
    std::string concept_id;
    std::vector<Port> ports;
    std::vector<ModelSelection> models;
    SourcePos pos;

    const Port* port(std::string_view n) const;

    bool operator==(const SimulationObject& o) const {
        return name == o.name && concept_id == o.concept_id && ports == o.ports && models == o.models;
    }
};

struct Instance {
    std::string alias;
    std::string object;
    int model = 0;
    std::map<std::string, Scalar> overrides;
    SourcePos pos;

    bool operator==(const Instance& o) const {
        return alias == o.alias && object == o.object && model == o.model && overrides == o.overrides;
    }
};

struct Connection {
    std::string from_alias;
    std::string from_port;
    std::string to_alias;
    std::string to_port;
    SourcePos pos;

    bool operator==(const Connection& o) const {
        return from_alias == o.from_alias && from_port == o.from_port && to_alias == o.to_alias &&
               to_port == o.to_port;
    }
};

struct SweepTask {
    std::string alias;
    std::string parameter;
    double from = 0.0;
    double to = 0.0;
    double step = 1.0;
    SourcePos pos;

    bool operator==(const SweepTask& o) const {
        return alias == o.alias && parameter == o.parameter && from == o.from && to == o.to && step == o.step;
    }
};

/// Absolute slack on the upper sweep bound.
inline constexpr double kSweepTolerance = 1e-9;

/// from + k*step for k = 0, 1, ... while the value stays within to + tolerance.
std::vector<double> sweep_values(const SweepTask& task);

struct SystemDescription {
    std::string name;
    std::vector<Instance> instances;
    std::vector<Connection> connections;
    std::vector<SweepTask> tasks;
    SourcePos pos;

    const Instance* instance(std::string_view alias) const;

    bool operator==(const SystemDescription& o) const {
        return name == o.name && instances == o.instances && connections == o.connections && tasks == o.tasks;
    }
};

using ObjectLibrary = std::map<std::string, SimulationObject, std::less<>>;

/// Contents of one `.vso` file: any mix of objects and systems.
struct VsoDocument {
    std::vector<SimulationObject> objects;
    std::vector<SystemDescription> systems;

    bool operator==(const VsoDocument&) const = default;
};

/// Throws ParseError, or SemanticError for port clashes, direction clashes,
/// format mismatches and malformed sweeps. Connections are checked against
/// objects declared in the same document.
VsoDocument parse_vso(std::string_view text);
std::string print_vso(const VsoDocument& doc);

/// Merges objects into a library; throws SemanticError on duplicate names.
void add_objects(ObjectLibrary& library, const std::vector<SimulationObject>& objects);

Diagnostics validate_system(const SystemDescription& sys, const ObjectLibrary& library, const kb::KnowledgeBase& kb,
                            const pkg::PackageMap& packages);

/// One step per instance, one edge per connection. Throws TranslationError
/// when validate_system reports errors.
flow::AbstractWorkflow translate(const SystemDescription& sys, const ObjectLibrary& library,
                                 const kb::KnowledgeBase& kb, const pkg::PackageMap& packages);

/// Cartesian product of the sweep tasks, first task varying slowest; the i-th
/// workflow (from 0) is named `<name>#<i>`. With no tasks, returns `awf`
/// unchanged. Throws NotNumericTarget.
std::vector<flow::AbstractWorkflow> expand_sweep(const SystemDescription& sys, const flow::AbstractWorkflow& awf,
                                                 const pkg::PackageMap& packages);

}  // namespace clavir::vso
