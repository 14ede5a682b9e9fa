#pragma once

#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "clavir/common.hpp"
#include "clavir/package.hpp"

namespace clavir::flow {

struct Literal {
    Scalar value;
    bool operator==(const Literal&) const = default;
};

/// `<step>.<output>`; `out` is an alias for a producer with exactly one output.
struct Ref {
    std::string step;
    std::string output;
    bool operator==(const Ref&) const = default;
};

using Binding = std::variant<Literal, Ref>;

struct Step {
    std::string id;
    std::string package;
    std::map<std::string, Binding> args;
    SourcePos pos;

    bool operator==(const Step& o) const { return id == o.id && package == o.package && args == o.args; }
};

/// Data-flow edge derived from a Ref binding.
struct Edge {
    std::string producer;
    std::string output;
    std::string consumer;
    std::string input;

    auto operator<=>(const Edge&) const = default;
};

/// Alias accepted for the sole output of a single-output package.
inline constexpr std::string_view kOutAlias = "out";

struct AbstractWorkflow {
    std::string name;
    std::vector<Step> steps;
    SourcePos pos;

    const Step* find(std::string_view id) const;
    Step* find(std::string_view id);

    /// One edge per Ref binding, in step order then argument-name order.
    std::vector<Edge> edges() const;

    bool operator==(const AbstractWorkflow& o) const { return name == o.name && steps == o.steps; }
};

/// Throws ParseError or DuplicateStepId.
AbstractWorkflow parse_workflow(std::string_view text);
/// Canonical form: steps in declaration order, arguments sorted by name.
std::string print_workflow(const AbstractWorkflow& awf);

Diagnostics validate_workflow(const AbstractWorkflow& awf, const pkg::PackageMap& packages);

/// Kahn's algorithm; ready steps leave in lexicographic id order. Edges whose
/// producer is unknown are ignored. Throws CycleDetected.
std::vector<std::string> topo_order(const AbstractWorkflow& awf);

/// Steps on one directed cycle, starting at the lexicographically smallest
/// id reachable on a cycle; empty when acyclic.
std::vector<std::string> find_cycle(const AbstractWorkflow& awf);

/// Byte-stable DOT rendering.
std::string to_dot(const AbstractWorkflow& awf);

/// Predecessor step ids (distinct, sorted) per step id.
std::map<std::string, std::vector<std::string>> predecessors(const AbstractWorkflow& awf);

}  // namespace clavir::flow
