#include "clavir/executor.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <optional>
#include <thread>
#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace clavir::exec {

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::Start: return "Start";
    case EventKind::Finish: return "Finish";
    case EventKind::Fail: return "Fail";
    }
    return "?";
}

std::string_view to_string(Status status) { return status == Status::Completed ? "Completed" : "Failed"; }

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

double noise_factor(std::uint64_t seed, std::string_view step_id, double noise) {
    std::uint64_t z = splitmix64(seed ^ fnv1a(step_id));
    double x = static_cast<double>(z >> 11) * 0x1.0p-53;
    return (1.0 - noise) + 2.0 * noise * x;
}

namespace {

ExecutionTrace simulate(const plan::ExecutionPlan& plan, const flow::AbstractWorkflow& awf,
                        const plan::ServiceMap& services, const plan::ResourceMap& resources,
                        const std::function<double(const std::string&, double)>& duration_of) {
    Diagnostics issues = plan::check_plan(plan, awf, services, resources);
    if (has_errors(issues)) {
        throw Error(ErrorKind::InfeasiblePlan, "plan for '" + awf.name + "' is infeasible: " + issues.front().code +
                                                   ": " + issues.front().message);
    }

    std::vector<std::string> topo = flow::topo_order(awf);
    std::map<std::string, std::size_t> topo_index;
    for (std::size_t i = 0; i < topo.size(); ++i) topo_index[topo[i]] = i;
    auto preds = flow::predecessors(awf);
    std::map<std::string, std::vector<std::string>> succs;
    for (const auto& [id, ps] : preds) {
        for (const auto& p : ps) succs[p].push_back(id);
    }

    struct Queue {
        int capacity = 1;
        int running = 0;
        std::size_t head = 0;
        std::vector<std::string> steps;
    };
    std::map<std::string, Queue> queues;
    for (const auto& [id, a] : plan.assignments) {
        const std::string& rid = services.find(a.service)->second.resource;
        Queue& q = queues[rid];
        q.capacity = resources.find(rid)->second.capacity;
        q.steps.push_back(id);
    }
    for (auto& [rid, q] : queues) {
        std::sort(q.steps.begin(), q.steps.end(), [&](const std::string& a, const std::string& b) {
            double sa = plan.assignments.at(a).est_start;
            double sb = plan.assignments.at(b).est_start;
            if (sa != sb) return sa < sb;
            return topo_index.at(a) < topo_index.at(b);
        });
    }

    std::map<std::string, std::size_t> waiting;  // unfinished predecessors
    for (const auto& [id, ps] : preds) waiting[id] = ps.size();

    ExecutionTrace trace;
    trace.workflow = plan.workflow;
    std::set<std::pair<double, std::string>> pending;  // (finish time, step)
    std::size_t finished = 0;
    double now = 0.0;

    for (;;) {
        std::vector<std::string> started;
        for (auto& [rid, q] : queues) {
            while (q.head < q.steps.size() && q.running < q.capacity && waiting.at(q.steps[q.head]) == 0) {
                started.push_back(q.steps[q.head]);
                ++q.head;
                ++q.running;
            }
        }
        std::sort(started.begin(), started.end());
        for (const auto& id : started) {
            const plan::Assignment& a = plan.assignments.at(id);
            trace.events.push_back(Event{now, id, a.service, EventKind::Start});
            pending.emplace(now + duration_of(id, a.duration), id);
        }

        if (pending.empty()) break;
        double t = pending.begin()->first;
        now = t;
        while (!pending.empty() && pending.begin()->first == t) {
            std::string id = pending.begin()->second;
            pending.erase(pending.begin());
            const plan::Assignment& a = plan.assignments.at(id);
            trace.events.push_back(Event{t, id, a.service, EventKind::Finish});
            --queues[services.find(a.service)->second.resource].running;
            for (const auto& s : succs[id]) --waiting[s];
            ++finished;
        }
    }
    if (finished != plan.assignments.size()) {
        throw Error(ErrorKind::InfeasiblePlan, "plan for '" + awf.name + "' deadlocks after " +
                                                   std::to_string(finished) + " step(s)");
    }
    for (const auto& e : trace.events) trace.makespan = std::max(trace.makespan, e.time);
    return trace;
}

}  // namespace

ExecutionTrace execute_simulated(const plan::ExecutionPlan& plan, const flow::AbstractWorkflow& awf,
                                 const pkg::PackageMap&, const plan::ServiceMap& services,
                                 const plan::ResourceMap& resources, double noise, std::uint64_t seed) {
    if (!(noise >= 0.0) || noise > kMaxNoise) {
        throw Error(ErrorKind::InvalidArgument, "noise must lie in [0, 0.99], got " + format_number(noise));
    }
    return simulate(plan, awf, services, resources, [&](const std::string& id, double planned) {
        return planned * noise_factor(seed, id, noise);
    });
}

ExecutionTrace execute_scaled(const plan::ExecutionPlan& plan, const flow::AbstractWorkflow& awf,
                              const plan::ServiceMap& services, const plan::ResourceMap& resources, double factor) {
    if (!(factor >= 0.0)) throw Error(ErrorKind::InvalidArgument, "duration factor must be >= 0");
    return simulate(plan, awf, services, resources,
                    [factor](const std::string&, double planned) { return planned * factor; });
}

namespace {

std::string scalar_text(const Scalar& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    return format_number(std::get<double>(v));
}

// whitespace-separated words; double quotes group, backslash escapes inside quotes
std::vector<std::string> split_template(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    bool in_word = false;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                quoted = false;
            } else if (c == '\\' && i + 1 < text.size()) {
                cur += text[++i];
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
            in_word = true;
        } else if (c == ' ' || c == '\t' || c == '\n') {
            if (in_word) words.push_back(std::move(cur));
            cur.clear();
            in_word = false;
        } else {
            cur += c;
            in_word = true;
        }
    }
    if (quoted) throw Error(ErrorKind::CommandSpawnError, "unterminated quote in command template");
    if (in_word) words.push_back(std::move(cur));
    return words;
}

std::string output_file(const std::filesystem::path& workdir, const std::string& step, const std::string& output) {
    return (workdir / (step + "." + output)).string();
}

std::string resolve_output(const flow::Ref& ref, const flow::AbstractWorkflow& awf, const pkg::PackageMap& packages) {
    const flow::Step* producer = awf.find(ref.step);
    if (producer && ref.output == flow::kOutAlias) {
        auto it = packages.find(producer->package);
        if (it != packages.end() && !it->second.output(ref.output) && it->second.outputs.size() == 1) {
            return it->second.outputs.front().name;
        }
    }
    return ref.output;
}

}  // namespace

std::vector<std::string> render_command(const flow::Step& step, const plan::ServiceEntry& service,
                                        const flow::AbstractWorkflow& awf, const pkg::PackageMap& packages,
                                        const std::filesystem::path& workdir) {
    std::string_view endpoint = service.endpoint;
    if (!endpoint.starts_with(kLocalPrefix)) {
        throw Error(ErrorKind::CommandSpawnError, "service '" + service.id + "' has no local command (endpoint '" +
                                                      service.endpoint + "')");
    }
    auto pit = packages.find(step.package);
    const pkg::PackageDescriptor* desc = pit == packages.end() ? nullptr : &pit->second;

    auto lookup = [&](const std::string& name) -> std::string {
        if (name == "workdir") return workdir.string();
        if (auto a = step.args.find(name); a != step.args.end()) {
            if (const auto* lit = std::get_if<flow::Literal>(&a->second)) return scalar_text(lit->value);
            const auto& ref = std::get<flow::Ref>(a->second);
            return output_file(workdir, ref.step, resolve_output(ref, awf, packages));
        }
        if (desc) {
            if (const auto* in = desc->input(name); in && in->default_value) return scalar_text(*in->default_value);
            if (desc->output(name)) return output_file(workdir, step.id, name);
        }
        throw Error(ErrorKind::CommandSpawnError, "step '" + step.id + "': unknown placeholder {" + name + "}");
    };

    std::vector<std::string> argv;
    for (const auto& word : split_template(endpoint.substr(kLocalPrefix.size()))) {
        std::string out;
        for (std::size_t i = 0; i < word.size(); ++i) {
            if (word[i] != '{') {
                out += word[i];
                continue;
            }
            auto close = word.find('}', i);
            if (close == std::string::npos) {
                throw Error(ErrorKind::CommandSpawnError, "step '" + step.id + "': unclosed placeholder in '" + word + "'");
            }
            out += lookup(word.substr(i + 1, close - i - 1));
            i = close;
        }
        argv.push_back(std::move(out));
    }
    if (argv.empty()) throw Error(ErrorKind::CommandSpawnError, "service '" + service.id + "' has an empty command");
    return argv;
}

namespace {

pid_t spawn(const std::vector<std::string>& argv, const std::filesystem::path& workdir, const std::filesystem::path& log) {
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addchdir_np(&actions, workdir.c_str());

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_t pid = 0;
    int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        throw Error(ErrorKind::CommandSpawnError, "cannot start '" + argv[0] + "': " + std::strerror(rc));
    }
    return pid;
}

}  // namespace

ExecutionTrace execute_local(const plan::ExecutionPlan& plan, const flow::AbstractWorkflow& awf,
                             const pkg::PackageMap& packages, const plan::ServiceMap& services,
                             const std::filesystem::path& workdir, int max_parallel,
                             const std::function<void(const Event&)>& on_event) {
    if (max_parallel < 1) throw Error(ErrorKind::InvalidArgument, "max_parallel must be >= 1");
    for (const auto& step : awf.steps) {
        if (!plan.assignments.contains(step.id)) {
            throw Error(ErrorKind::InfeasiblePlan, "step '" + step.id + "' has no assignment");
        }
    }

    std::error_code ec;
    std::filesystem::create_directories(workdir, ec);
    if (ec || !std::filesystem::is_directory(workdir)) {
        throw Error(ErrorKind::WorkdirError, "cannot create work directory '" + workdir.string() + "'");
    }
    std::filesystem::path abs = std::filesystem::absolute(workdir);
    if (access(abs.c_str(), W_OK) != 0) {
        throw Error(ErrorKind::WorkdirError, "work directory '" + abs.string() + "' is not writable");
    }

    // render everything up front so template errors surface before any process runs
    std::map<std::string, std::vector<std::string>> commands;
    for (const auto& step : awf.steps) {
        const std::string& sid = plan.assignments.at(step.id).service;
        auto sit = services.find(sid);
        if (sit == services.end()) throw Error(ErrorKind::InfeasiblePlan, "unknown service '" + sid + "'");
        commands[step.id] = render_command(step, sit->second, awf, packages, abs);
    }

    std::vector<std::string> topo = flow::topo_order(awf);
    auto preds = flow::predecessors(awf);
    std::map<std::string, std::vector<std::string>> succs;
    for (const auto& [id, ps] : preds) {
        for (const auto& p : ps) succs[p].push_back(id);
    }
    std::vector<std::string> order = topo;
    std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        return plan.assignments.at(a).est_start < plan.assignments.at(b).est_start;
    });

    enum class State { Waiting, Running, Done, Failed, Skipped };
    std::map<std::string, State> state;
    for (const auto& id : topo) state[id] = State::Waiting;

    ExecutionTrace trace;
    trace.workflow = plan.workflow;
    auto t0 = std::chrono::steady_clock::now();
    auto clock = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    auto record = [&](const std::string& id, EventKind kind) {
        trace.events.push_back(Event{clock(), id, plan.assignments.at(id).service, kind});
        if (on_event) on_event(trace.events.back());
    };

    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::pair<std::string, int>> exited;  // guarded by mu
    std::vector<std::thread> waiters;
    int running = 0;
    std::optional<Error> spawn_error;

    auto skip_downstream = [&](const std::string& root) {
        std::vector<std::string> stack{root};
        while (!stack.empty()) {
            std::string id = stack.back();
            stack.pop_back();
            for (const auto& s : succs[id]) {
                if (state[s] == State::Waiting) {
                    state[s] = State::Skipped;
                    stack.push_back(s);
                }
            }
        }
    };

    for (;;) {
        if (!spawn_error) {
            for (const auto& id : order) {
                if (running >= max_parallel) break;
                if (state[id] != State::Waiting) continue;
                bool ready = std::all_of(preds[id].begin(), preds[id].end(),
                                         [&](const std::string& p) { return state[p] == State::Done; });
                if (!ready) continue;
                pid_t pid = 0;
                try {
                    pid = spawn(commands[id], abs, abs / (id + ".log"));
                } catch (const Error& e) {
                    spawn_error = e;
                    break;
                }
                state[id] = State::Running;
                ++running;
                record(id, EventKind::Start);
                waiters.emplace_back([pid, id, &mu, &cv, &exited] {
                    int status = 0;
                    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
                    }
                    int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
                    std::lock_guard lock(mu);
                    exited.emplace_back(id, code);
                    cv.notify_one();
                });
            }
        }
        if (running == 0) break;

        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return !exited.empty(); });
        auto done = std::move(exited);
        exited.clear();
        lock.unlock();
        for (const auto& [id, code] : done) {
            --running;
            if (code == 0) {
                state[id] = State::Done;
                record(id, EventKind::Finish);
            } else {
                state[id] = State::Failed;
                record(id, EventKind::Fail);
                skip_downstream(id);
            }
        }
    }
    for (auto& t : waiters) t.join();
    if (spawn_error) throw *spawn_error;

    for (const auto& [id, st] : state) {
        if (st == State::Failed) trace.status = Status::Failed;
    }
    for (const auto& e : trace.events) trace.makespan = std::max(trace.makespan, e.time);
    return trace;
}

Diagnostics verify_trace(const ExecutionTrace& trace, const flow::AbstractWorkflow& awf,
                         const plan::ExecutionPlan& plan) {
    Diagnostics diags;
    struct Seen {
        int starts = 0;
        int ends = 0;
        std::size_t start_index = 0;
        std::size_t end_index = 0;
        double start_time = 0.0;
        double end_time = 0.0;
        EventKind end_kind = EventKind::Finish;
    };
    std::map<std::string, Seen> seen;

    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const Event& e = trace.events[i];
        if (i > 0 && e.time < trace.events[i - 1].time) {
            diags.push_back(make_error("OrderingViolation", "event " + std::to_string(i) + " (" +
                                                                std::string(to_string(e.kind)) + " " + e.step +
                                                                ") at t=" + format_number(e.time) +
                                                                " precedes the previous event's time"));
        }
        if (!awf.find(e.step)) {
            diags.push_back(make_error("UnknownStep", "event for unknown step '" + e.step + "'"));
            continue;
        }
        Seen& s = seen[e.step];
        if (e.kind == EventKind::Start) {
            if (++s.starts > 1) diags.push_back(make_error("DuplicateEvent", "step '" + e.step + "' started twice"));
            s.start_index = i;
            s.start_time = e.time;
            auto a = plan.assignments.find(e.step);
            if (a == plan.assignments.end() || a->second.service != e.service) {
                diags.push_back(make_error("AssignmentMismatch",
                                           "step '" + e.step + "' started on service '" + e.service + "', plan says '" +
                                               (a == plan.assignments.end() ? std::string("<none>") : a->second.service) +
                                               "'"));
            }
        } else {
            if (++s.ends > 1) diags.push_back(make_error("DuplicateEvent", "step '" + e.step + "' ended twice"));
            s.end_index = i;
            s.end_time = e.time;
            s.end_kind = e.kind;
            if (s.starts == 0 || e.time < s.start_time) {
                diags.push_back(make_error("OrderingViolation", "step '" + e.step + "' ends before it starts"));
            }
        }
    }

    bool any_fail = false;
    double latest = 0.0;
    for (const auto& [id, s] : seen) {
        if (s.starts == 1 && s.ends == 0) {
            diags.push_back(make_error("MissingEvent", "step '" + id + "' started but never ended"));
        }
        if (s.ends > 0 && s.end_kind == EventKind::Fail) any_fail = true;
    }
    for (const auto& e : trace.events) latest = std::max(latest, e.time);

    auto preds = flow::predecessors(awf);
    for (const auto& step : awf.steps) {
        auto it = seen.find(step.id);
        bool started = it != seen.end() && it->second.starts > 0;
        if (!started) {
            if (trace.status == Status::Completed) {
                diags.push_back(make_error("MissingEvent", "step '" + step.id + "' never started"));
                continue;
            }
            // skipped steps must sit downstream of a failure
            bool blocked = std::any_of(preds[step.id].begin(), preds[step.id].end(), [&](const std::string& p) {
                auto pit = seen.find(p);
                return pit == seen.end() || pit->second.starts == 0 ||
                       (pit->second.ends > 0 && pit->second.end_kind == EventKind::Fail);
            });
            if (!blocked) {
                diags.push_back(make_error("MissingEvent", "step '" + step.id + "' never started though no upstream step failed"));
            }
            continue;
        }
        for (const auto& p : preds[step.id]) {
            auto pit = seen.find(p);
            bool finished = pit != seen.end() && pit->second.ends > 0 && pit->second.end_kind == EventKind::Finish;
            if (!finished || pit->second.end_time > it->second.start_time ||
                pit->second.end_index > it->second.start_index) {
                diags.push_back(make_error("DependencyViolation", "step '" + step.id + "' started before '" + p +
                                                                      "' finished"));
            }
        }
    }

    if ((trace.status == Status::Failed) != any_fail) {
        diags.push_back(make_error("StatusMismatch", "status " + std::string(to_string(trace.status)) +
                                                         (any_fail ? " but a step failed" : " but no step failed")));
    }
    if (trace.makespan != latest) {
        diags.push_back(make_error("MakespanMismatch", "makespan " + format_number(trace.makespan) +
                                                           " differs from the last event time " + format_number(latest)));
    }
    return diags;
}

Diagnostics check_capacity(const ExecutionTrace& trace, const plan::ServiceMap& services,
                           const plan::ResourceMap& resources) {
    Diagnostics diags;
    std::map<std::string, int> load;
    std::set<std::string> reported;
    for (const auto& e : trace.events) {
        auto sit = services.find(e.service);
        if (sit == services.end()) continue;
        const std::string& rid = sit->second.resource;
        auto rit = resources.find(rid);
        if (rit == resources.end()) continue;
        if (e.kind == EventKind::Start) {
            if (++load[rid] > rit->second.capacity && reported.insert(rid).second) {
                diags.push_back(make_error("CapacityExceeded", "resource '" + rid + "' runs " + std::to_string(load[rid]) +
                                                                   " steps at t=" + format_number(e.time)));
            }
        } else {
            --load[rid];
        }
    }
    return diags;
}

std::string trace_log(const ExecutionTrace& trace) {
    std::ostringstream os;
    for (const auto& e : trace.events) {
        os << format_number(e.time) << '\t' << to_string(e.kind) << '\t' << e.step << '\t' << e.service << '\n';
    }
    return os.str();
}

nlohmann::ordered_json trace_summary(const ExecutionTrace& trace) {
    using json = nlohmann::ordered_json;
    std::map<std::string, json> steps;
    for (const auto& e : trace.events) {
        json& s = steps[e.step];
        s["step"] = e.step;
        s["service"] = e.service;
        if (e.kind == EventKind::Start) {
            s["start"] = e.time;
        } else {
            s["end"] = e.time;
            s["outcome"] = to_string(e.kind);
        }
    }
    json doc;
    doc["workflow"] = trace.workflow;
    doc["status"] = to_string(trace.status);
    doc["makespan"] = trace.makespan;
    doc["events"] = trace.events.size();
    doc["steps"] = json::array();
    for (auto& [id, s] : steps) {
        json row;
        row["step"] = s["step"];
        row["service"] = s["service"];
        row["start"] = s.contains("start") ? s["start"] : json(nullptr);
        row["end"] = s.contains("end") ? s["end"] : json(nullptr);
        row["outcome"] = s.contains("outcome") ? s["outcome"] : json("Running");
        doc["steps"].push_back(std::move(row));
    }
    return doc;
}

}  // namespace clavir::exec
