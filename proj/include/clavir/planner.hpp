#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clavir/common.hpp"
#include "clavir/kb.hpp"
#include "clavir/package.hpp"
#include "clavir/workflow.hpp"

namespace clavir::plan {

struct Resource {
    std::string id;
    double speed = 1.0;  // 1.0 = reference machine
    double cost_per_hour = 0.0;
    int capacity = 1;  // concurrent slots

    bool operator==(const Resource&) const = default;
};

struct ServiceEntry {
    std::string id;
    std::string package;
    std::string resource;
    std::string endpoint;

    bool operator==(const ServiceEntry&) const = default;
};

using ResourceMap = std::map<std::string, Resource, std::less<>>;
using ServiceMap = std::map<std::string, ServiceEntry, std::less<>>;

struct ResourceBase {
    ServiceMap services;
    ResourceMap resources;
    Diagnostics diagnostics;  // excluded entries
};

/// Parses a resource-base JSON document. Services naming unknown packages are
/// dropped with a diagnostic. Throws ParseError (with line/column) or
/// InvariantViolation.
ResourceBase parse_resources(std::string_view json_text, const pkg::PackageMap& packages);
ResourceBase load_resources(const std::filesystem::path& path, const pkg::PackageMap& packages);
nlohmann::ordered_json resources_to_json(const ServiceMap& services, const ResourceMap& resources);

/// Sorted ids of services deploying the step's package.
std::vector<std::string> candidate_services(const flow::Step& step, const ServiceMap& services,
                                            const pkg::PackageMap& packages);

/// Seconds assumed for packages without a performance model.
inline constexpr double kFallbackEstimate = 1.0;

/// Perf-model estimate of `step` on `service`. Parameters come from literal
/// bindings, then defaults; a parameter fed by a Ref throws UnboundParameter.
double estimate_step(const flow::Step& step, const ServiceEntry& service, const ResourceMap& resources,
                     const pkg::PackageMap& packages);

struct Assignment {
    std::string service;
    double est_start = 0.0;
    double est_finish = 0.0;
    double duration = 0.0;  // est_finish == est_start + duration, bit for bit

    bool operator==(const Assignment&) const = default;
};

struct ExecutionPlan {
    std::string workflow;
    std::map<std::string, Assignment> assignments;
    double makespan = 0.0;

    bool operator==(const ExecutionPlan&) const = default;
};

/// Precomputed candidate services and durations for one workflow. All
/// planners here work from this table.
struct PlanningProblem {
    struct Option {
        std::string service;
        std::string resource;
        double duration = 0.0;
    };
    std::vector<std::string> steps;                    // topological order
    std::map<std::string, std::vector<std::string>> preds;
    std::map<std::string, std::vector<Option>> options;  // sorted by service id
    std::map<std::string, int> capacity;               // per resource id
};

/// Throws CycleDetected, NoCandidateService, or propagated estimation errors.
PlanningProblem make_problem(const flow::AbstractWorkflow& awf, const ServiceMap& services,
                             const ResourceMap& resources, const pkg::PackageMap& packages);

/// Tracks per-resource busy intervals and finds the earliest start at which a
/// new interval fits under the capacity.
class ResourceTimeline {
public:
    explicit ResourceTimeline(int capacity) : capacity_(capacity) {}

    double earliest_start(double ready, double duration) const;
    void reserve(double start, double finish);

private:
    bool fits(double start, double duration) const;
    int load_at(double t) const;

    int capacity_;
    std::vector<std::pair<double, double>> busy_;
};

/// Greedy earliest-finish-time list scheduling in topological order; ties on
/// finish time go to the smaller service id.
ExecutionPlan plan(const flow::AbstractWorkflow& awf, const ServiceMap& services, const ResourceMap& resources,
                   const pkg::PackageMap& packages);
ExecutionPlan plan(const std::string& workflow_name, const PlanningProblem& problem);

inline constexpr std::size_t kBruteforceMaxSteps = 8;
inline constexpr std::size_t kBruteforceMaxCandidates = 4;

/// Exhaustive search over service assignments and topological list orders.
/// Throws TooLarge beyond the step/candidate bounds.
ExecutionPlan optimal_plan_bruteforce(const flow::AbstractWorkflow& awf, const ServiceMap& services,
                                      const ResourceMap& resources, const pkg::PackageMap& packages);
ExecutionPlan optimal_plan_bruteforce(const std::string& workflow_name, const PlanningProblem& problem);

/// Places steps one by one in `order` with the given service choice per step
/// (index into problem.options), each at its earliest feasible start.
ExecutionPlan schedule_in_order(const std::string& workflow_name, const PlanningProblem& problem,
                                const std::vector<std::string>& order, const std::map<std::string, std::size_t>& choice);

/// Empty iff the plan covers exactly the workflow's steps with known
/// services, respects every edge and every resource capacity, and its
/// makespan is the latest finish.
Diagnostics check_plan(const ExecutionPlan& plan, const flow::AbstractWorkflow& awf, const ServiceMap& services,
                       const ResourceMap& resources);

/// Steps sorted by est_start, then id.
nlohmann::ordered_json plan_to_json(const ExecutionPlan& plan);
ExecutionPlan plan_from_json(const nlohmann::json& doc);

struct Weights {
    double time = 1.0;
    double cost = 0.0;
    double accuracy = 0.0;
};

struct RankedSolution {
    std::string package;
    std::string service;  // fastest service of the package
    double time = 0.0;
    double cost = 0.0;
    double accuracy = 0.0;
    double score = 0.0;

    bool operator==(const RankedSolution&) const = default;
};

/// Ranks the packages realizing `method_id` by a weighted sum of min-max
/// normalized time, cost, and inverted accuracy_rank. Ascending score, ties by
/// package name. Throws UnknownMethod, NoSolutions, InvalidArgument (weights).
std::vector<RankedSolution> compare_solutions(const std::string& method_id, const kb::KnowledgeBase& kb,
                                              const pkg::PackageMap& packages, const ServiceMap& services,
                                              const ResourceMap& resources, const std::map<std::string, Scalar>& params,
                                              const Weights& weights);

}  // namespace clavir::plan
