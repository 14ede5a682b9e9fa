#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clavir/common.hpp"
#include "clavir/package.hpp"
#include "clavir/planner.hpp"
#include "clavir/workflow.hpp"

namespace clavir::exec {

enum class EventKind { Start, Finish, Fail };
enum class Status { Completed, Failed };

std::string_view to_string(EventKind kind);
std::string_view to_string(Status status);

struct Event {
    double time = 0.0;
    std::string step;
    std::string service;
    EventKind kind = EventKind::Start;

    bool operator==(const Event&) const = default;
};

struct ExecutionTrace {
    std::string workflow;
    std::vector<Event> events;
    double makespan = 0.0;
    Status status = Status::Completed;

    bool operator==(const ExecutionTrace&) const = default;
};

inline constexpr double kMaxNoise = 0.99;

/// Duration multiplier for one step, uniform on [1 - noise, 1 + noise).
///
/// Derivation: h = FNV-1a 64 of the step id; z = splitmix64(seed ^ h);
/// x = (z >> 11) * 2^-53; factor = (1 - noise) + 2 * noise * x. With
/// noise == 0 the factor is exactly 1.
double noise_factor(std::uint64_t seed, std::string_view step_id, double noise);

/// Virtual-clock replay of a plan.
///
/// Each resource dispatches its assigned steps in plan order (est_start, then
/// topological position). A step starts once every predecessor finished, all
/// steps ahead of it on its resource have started, and a slot is free. At one
/// instant finishes are processed before starts; events within a group are
/// ordered by step id. With noise == 0 every start and finish equals the
/// planned time exactly. Throws InfeasiblePlan or InvalidArgument (noise).
ExecutionTrace execute_simulated(const plan::ExecutionPlan& plan, const flow::AbstractWorkflow& awf,
                                 const pkg::PackageMap& packages, const plan::ServiceMap& services,
                                 const plan::ResourceMap& resources, double noise, std::uint64_t seed);

/// Same dispatch as execute_simulated with every planned duration multiplied
/// by `factor`. Bounds for noisy runs are the replays at 1 - noise and 1 + noise.
ExecutionTrace execute_scaled(const plan::ExecutionPlan& plan, const flow::AbstractWorkflow& awf,
                              const plan::ServiceMap& services, const plan::ResourceMap& resources, double factor);

/// Endpoint prefix marking a local command template, e.g.
/// `local:cp {input} {result}`. Placeholders name step inputs (literal text,
/// or the producer's output file for refs), step outputs
/// (`<workdir>/<step>.<output>`), or `{workdir}`.
inline constexpr std::string_view kLocalPrefix = "local:";

/// Argument vector for one step with placeholders substituted. Throws
/// CommandSpawnError for non-local endpoints or unknown placeholders.
std::vector<std::string> render_command(const flow::Step& step, const plan::ServiceEntry& service,
                                        const flow::AbstractWorkflow& awf, const pkg::PackageMap& packages,
                                        const std::filesystem::path& workdir);

/// Runs each step as a child process (no shell) with its working directory
/// set to `workdir` and stdout/stderr captured in `<workdir>/<step>.log`.
/// A nonzero exit records Fail and skips every transitive dependent. Throws
/// WorkdirError or CommandSpawnError.
ExecutionTrace execute_local(const plan::ExecutionPlan& plan, const flow::AbstractWorkflow& awf,
                             const pkg::PackageMap& packages, const plan::ServiceMap& services,
                             const std::filesystem::path& workdir, int max_parallel,
                             const std::function<void(const Event&)>& on_event = {});

/// Empty iff the trace satisfies every ordering, pairing and dependency
/// invariant and each Start names the planned service.
Diagnostics verify_trace(const ExecutionTrace& trace, const flow::AbstractWorkflow& awf,
                         const plan::ExecutionPlan& plan);

/// Replays the events and reports any instant where a resource runs more
/// steps than its capacity.
Diagnostics check_capacity(const ExecutionTrace& trace, const plan::ServiceMap& services,
                           const plan::ResourceMap& resources);

/// `<time>\t<kind>\t<step>\t<service>` per event.
std::string trace_log(const ExecutionTrace& trace);
nlohmann::ordered_json trace_summary(const ExecutionTrace& trace);

}  // namespace clavir::exec
