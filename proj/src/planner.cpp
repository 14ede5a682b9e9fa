#include "clavir/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace clavir::plan {

using json = nlohmann::json;

namespace {

SourcePos offset_to_pos(std::string_view text, std::size_t offset) {
    SourcePos pos{1, 1};
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++pos.line;
            pos.col = 1;
        } else {
            ++pos.col;
        }
    }
    return pos;
}

[[noreturn]] void malformed(const std::string& msg) { throw Error(ErrorKind::ParseError, msg); }
[[noreturn]] void violation(const std::string& msg) { throw Error(ErrorKind::InvariantViolation, msg); }

const json& field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) malformed(where + ": missing field \"" + key + "\"");
    return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_string()) malformed(where + ": field \"" + std::string(key) + "\" must be a string");
    return v.get<std::string>();
}

double number_field(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_number()) malformed(where + ": field \"" + std::string(key) + "\" must be a number");
    return v.get<double>();
}

}  // namespace

ResourceBase parse_resources(std::string_view text, const pkg::PackageMap& packages) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        throw Error(ErrorKind::ParseError, "malformed resource base JSON", offset_to_pos(text, byte));
    }
    if (!doc.is_object()) malformed("resource base must be a JSON object");

    ResourceBase rb;
    const json& resources = field(doc, "resources", "resource base");
    if (!resources.is_array()) malformed("\"resources\" must be an array");
    for (std::size_t i = 0; i < resources.size(); ++i) {
        const json& r = resources[i];
        std::string where = "resources[" + std::to_string(i) + "]";
        if (!r.is_object()) malformed(where + " must be an object");
        Resource res;
        res.id = string_field(r, "id", where);
        res.speed = number_field(r, "speed", where);
        res.cost_per_hour = number_field(r, "cost_per_hour", where);
        const json& cap = field(r, "capacity", where);
        if (!cap.is_number_integer()) malformed(where + ": field \"capacity\" must be an integer");
        std::int64_t capacity = cap.get<std::int64_t>();
        if (res.id.empty()) violation(where + ": empty resource id");
        if (!(res.speed > 0.0) || !std::isfinite(res.speed)) {
            violation("resource '" + res.id + "': speed must be > 0, got " + format_number(res.speed));
        }
        if (!(res.cost_per_hour >= 0.0) || !std::isfinite(res.cost_per_hour)) {
            violation("resource '" + res.id + "': cost_per_hour must be >= 0");
        }
        if (capacity < 1 || capacity > std::numeric_limits<int>::max()) {
            violation("resource '" + res.id + "': capacity must be >= 1");
        }
        res.capacity = static_cast<int>(capacity);
        std::string id = res.id;
        if (!rb.resources.emplace(id, std::move(res)).second) violation("duplicate resource id '" + id + "'");
    }

    const json& services = field(doc, "services", "resource base");
    if (!services.is_array()) malformed("\"services\" must be an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < services.size(); ++i) {
        const json& s = services[i];
        std::string where = "services[" + std::to_string(i) + "]";
        if (!s.is_object()) malformed(where + " must be an object");
        ServiceEntry svc;
        svc.id = string_field(s, "id", where);
        svc.package = string_field(s, "package", where);
        svc.resource = string_field(s, "resource", where);
        svc.endpoint = string_field(s, "endpoint", where);
        if (svc.id.empty()) violation(where + ": empty service id");
        if (!ids.insert(svc.id).second) violation("duplicate service id '" + svc.id + "'");
        if (!rb.resources.contains(svc.resource)) {
            violation("service '" + svc.id + "' runs on unknown resource '" + svc.resource + "'");
        }
        if (!packages.contains(svc.package)) {
            rb.diagnostics.push_back(make_warning("UnknownPackage", "service '" + svc.id + "' deploys unknown package '" +
                                                                        svc.package + "'; entry excluded"));
            continue;
        }
        std::string id = svc.id;
        rb.services.emplace(id, std::move(svc));
    }
    return rb;
}

ResourceBase load_resources(const std::filesystem::path& path, const pkg::PackageMap& packages) {
    return parse_resources(read_file(path), packages);
}

nlohmann::ordered_json resources_to_json(const ServiceMap& services, const ResourceMap& resources) {
    nlohmann::ordered_json doc;
    doc["resources"] = nlohmann::ordered_json::array();
    for (const auto& [id, r] : resources) {
        doc["resources"].push_back(
            {{"id", r.id}, {"speed", r.speed}, {"cost_per_hour", r.cost_per_hour}, {"capacity", r.capacity}});
    }
    doc["services"] = nlohmann::ordered_json::array();
    for (const auto& [id, s] : services) {
        doc["services"].push_back(
            {{"id", s.id}, {"package", s.package}, {"resource", s.resource}, {"endpoint", s.endpoint}});
    }
    return doc;
}

std::vector<std::string> candidate_services(const flow::Step& step, const ServiceMap& services,
                                            const pkg::PackageMap&) {
    std::vector<std::string> out;
    for (const auto& [id, svc] : services) {
        if (svc.package == step.package) out.push_back(id);
    }
    return out;
}

double estimate_step(const flow::Step& step, const ServiceEntry& service, const ResourceMap& resources,
                     const pkg::PackageMap& packages) {
    auto pit = packages.find(step.package);
    if (pit == packages.end()) throw Error(ErrorKind::UnknownPackage, "unknown package '" + step.package + "'");
    const pkg::PackageDescriptor& desc = pit->second;
    if (!desc.perf) return kFallbackEstimate;

    auto rit = resources.find(service.resource);
    if (rit == resources.end()) {
        throw Error(ErrorKind::InvariantViolation,
                    "service '" + service.id + "' runs on unknown resource '" + service.resource + "'");
    }
    const Resource& res = rit->second;

    perf::Bindings params;
    for (const auto& name : perf::param_names(*desc.perf)) {
        auto ait = step.args.find(name);
        if (ait != step.args.end()) {
            if (std::holds_alternative<flow::Ref>(ait->second)) {
                throw Error(ErrorKind::UnboundParameter, "step '" + step.id + "': perf parameter '" + name +
                                                             "' is fed by an upstream step and cannot be estimated");
            }
            const Scalar& v = std::get<flow::Literal>(ait->second).value;
            if (!is_numeric(v)) {
                throw Error(ErrorKind::UnboundParameter,
                            "step '" + step.id + "': perf parameter '" + name + "' is bound to a non-numeric literal");
            }
            params[name] = as_double(v);
            continue;
        }
        const pkg::ParameterSpec* spec = desc.input(name);
        if (spec && spec->default_value && is_numeric(*spec->default_value)) {
            params[name] = as_double(*spec->default_value);
            continue;
        }
        throw Error(ErrorKind::UnboundParameter,
                    "step '" + step.id + "': perf parameter '" + name + "' has no literal binding or default");
    }
    perf::Bindings attrs{{"speed", res.speed},
                         {"cost_per_hour", res.cost_per_hour},
                         {"capacity", static_cast<double>(res.capacity)}};
    try {
        return perf::eval_perf(*desc.perf, params, attrs);
    } catch (const Error& e) {
        throw Error(e.kind(), "step '" + step.id + "' on service '" + service.id + "': " + e.detail());
    }
}

PlanningProblem make_problem(const flow::AbstractWorkflow& awf, const ServiceMap& services,
                             const ResourceMap& resources, const pkg::PackageMap& packages) {
    PlanningProblem p;
    p.steps = flow::topo_order(awf);
    p.preds = flow::predecessors(awf);
    for (const auto& [id, r] : resources) p.capacity[id] = r.capacity;
    for (const auto& id : p.steps) {
        const flow::Step& step = *awf.find(id);
        auto candidates = candidate_services(step, services, packages);
        if (candidates.empty()) {
            throw Error(ErrorKind::NoCandidateService,
                        "no service deploys package '" + step.package + "' for step '" + id + "'", step.pos);
        }
        auto& opts = p.options[id];
        for (const auto& sid : candidates) {
            const ServiceEntry& svc = services.find(sid)->second;
            opts.push_back({sid, svc.resource, estimate_step(step, svc, resources, packages)});
        }
    }
    return p;
}

// -- timeline ---------------------------------------------------------------

int ResourceTimeline::load_at(double t) const {
    int n = 0;
    for (const auto& [s, f] : busy_) {
        if (s <= t && t < f) ++n;
    }
    return n;
}

bool ResourceTimeline::fits(double start, double duration) const {
    if (load_at(start) >= capacity_) return false;
    double end = start + duration;
    for (const auto& [s, f] : busy_) {
        if (s > start && s < end && load_at(s) >= capacity_) return false;
    }
    return true;
}

double ResourceTimeline::earliest_start(double ready, double duration) const {
    std::vector<double> candidates{ready};
    for (const auto& [s, f] : busy_) {
        if (f > ready) candidates.push_back(f);
    }
    std::sort(candidates.begin(), candidates.end());
    for (double t : candidates) {
        if (fits(t, duration)) return t;
    }
    return candidates.back();  // unreachable: the last finish always fits
}

void ResourceTimeline::reserve(double start, double finish) {
    if (finish > start) busy_.emplace_back(start, finish);
}

// -- greedy -----------------------------------------------------------------

namespace {

double ready_time(const std::vector<std::string>& preds, const std::map<std::string, Assignment>& placed) {
    double ready = 0.0;
    for (const auto& p : preds) ready = std::max(ready, placed.at(p).est_finish);
    return ready;
}

ResourceTimeline& timeline_for(std::map<std::string, ResourceTimeline>& timelines, const PlanningProblem& problem,
                               const std::string& resource) {
    auto it = timelines.find(resource);
    if (it == timelines.end()) {
        auto cap = problem.capacity.find(resource);
        it = timelines.emplace(resource, ResourceTimeline(cap == problem.capacity.end() ? 1 : cap->second)).first;
    }
    return it->second;
}

void finalize(ExecutionPlan& plan) {
    plan.makespan = 0.0;
    for (const auto& [id, a] : plan.assignments) plan.makespan = std::max(plan.makespan, a.est_finish);
}

}  // namespace

ExecutionPlan plan(const std::string& workflow_name, const PlanningProblem& problem) {
    ExecutionPlan out;
    out.workflow = workflow_name;
    std::map<std::string, ResourceTimeline> timelines;
    for (const auto& id : problem.steps) {
        double ready = ready_time(problem.preds.at(id), out.assignments);
        const PlanningProblem::Option* best = nullptr;
        double best_start = 0.0;
        double best_finish = std::numeric_limits<double>::infinity();
        for (const auto& opt : problem.options.at(id)) {
            double start = timeline_for(timelines, problem, opt.resource).earliest_start(ready, opt.duration);
            double finish = start + opt.duration;
            if (finish < best_finish) {
                best = &opt;
                best_start = start;
                best_finish = finish;
            }
        }
        timeline_for(timelines, problem, best->resource).reserve(best_start, best_finish);
        out.assignments[id] = Assignment{best->service, best_start, best_finish, best->duration};
    }
    finalize(out);
    return out;
}

ExecutionPlan plan(const flow::AbstractWorkflow& awf, const ServiceMap& services, const ResourceMap& resources,
                   const pkg::PackageMap& packages) {
    return plan(awf.name, make_problem(awf, services, resources, packages));
}

ExecutionPlan schedule_in_order(const std::string& workflow_name, const PlanningProblem& problem,
                                const std::vector<std::string>& order,
                                const std::map<std::string, std::size_t>& choice) {
    ExecutionPlan out;
    out.workflow = workflow_name;
    std::map<std::string, ResourceTimeline> timelines;
    for (const auto& id : order) {
        for (const auto& p : problem.preds.at(id)) {
            if (!out.assignments.contains(p)) {
                throw Error(ErrorKind::InvalidArgument, "order places '" + id + "' before its predecessor '" + p + "'");
            }
        }
        const auto& opt = problem.options.at(id).at(choice.at(id));
        double ready = ready_time(problem.preds.at(id), out.assignments);
        auto& tl = timeline_for(timelines, problem, opt.resource);
        double start = tl.earliest_start(ready, opt.duration);
        double finish = start + opt.duration;
        tl.reserve(start, finish);
        out.assignments[id] = Assignment{opt.service, start, finish, opt.duration};
    }
    finalize(out);
    return out;
}

// -- exhaustive -------------------------------------------------------------

namespace {

/// Index-based search state; steps are numbered in sorted-id order.
class Bruteforce {
public:
    explicit Bruteforce(const PlanningProblem& problem) {
        ids_.assign(problem.steps.begin(), problem.steps.end());
        std::sort(ids_.begin(), ids_.end());
        n_ = ids_.size();
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < n_; ++i) index[ids_[i]] = i;
        std::map<std::string, std::size_t> res_index;
        for (const auto& [rid, cap] : problem.capacity) {
            res_index[rid] = capacity_.size();
            capacity_.push_back(cap);
        }
        preds_.resize(n_);
        options_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (const auto& p : problem.preds.at(ids_[i])) preds_[i].push_back(index.at(p));
            for (const auto& opt : problem.options.at(ids_[i])) {
                auto rit = res_index.find(opt.resource);
                if (rit == res_index.end()) {
                    rit = res_index.emplace(opt.resource, capacity_.size()).first;
                    capacity_.push_back(1);
                }
                options_[i].push_back({rit->second, opt.duration});
            }
        }
    }

    /// Returns the best assignment vector and order.
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> solve() {
        std::vector<std::size_t> assignment(n_, 0);
        best_ = std::numeric_limits<double>::infinity();
        for (;;) {
            double found = best_;
            current_ = assignment;
            std::vector<std::size_t> order;
            std::vector<double> finish(n_, -1.0);
            std::vector<Timeline> timelines(capacity_.size());
            for (std::size_t r = 0; r < capacity_.size(); ++r) timelines[r].capacity = capacity_[r];
            search(order, finish, timelines, 0.0);
            if (best_ < found) best_assignment_ = assignment;
            // next assignment vector in lexicographic order
            std::size_t k = n_;
            while (k > 0) {
                --k;
                if (++assignment[k] < options_[k].size()) break;
                assignment[k] = 0;
                if (k == 0) return {best_assignment_, best_order_};
            }
            if (n_ == 0) return {best_assignment_, best_order_};
        }
    }

    const std::vector<std::string>& ids() const { return ids_; }

private:
    struct Option {
        std::size_t resource;
        double duration;
    };

    struct Timeline {
        int capacity = 1;
        std::vector<std::pair<double, double>> busy;

        int load_at(double t) const {
            int k = 0;
            for (const auto& [s, f] : busy) k += (s <= t && t < f) ? 1 : 0;
            return k;
        }
        bool fits(double start, double duration) const {
            if (load_at(start) >= capacity) return false;
            double end = start + duration;
            for (const auto& [s, f] : busy) {
                if (s > start && s < end && load_at(s) >= capacity) return false;
            }
            return true;
        }
        double earliest(double ready, double duration) const {
            double best = std::numeric_limits<double>::infinity();
            if (fits(ready, duration)) return ready;
            for (const auto& [s, f] : busy) {
                if (f > ready && f < best && fits(f, duration)) best = f;
            }
            return best;
        }
    };

    void search(std::vector<std::size_t>& order, std::vector<double>& finish, std::vector<Timeline>& timelines,
                double makespan) {
        if (makespan >= best_) return;
        if (order.size() == n_) {
            best_ = makespan;
            best_order_ = order;
            return;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            if (finish[i] >= 0.0) continue;
            double ready = 0.0;
            bool is_ready = true;
            for (std::size_t p : preds_[i]) {
                if (finish[p] < 0.0) {
                    is_ready = false;
                    break;
                }
                ready = std::max(ready, finish[p]);
            }
            if (!is_ready) continue;
            const Option& opt = options_[i][current_[i]];
            Timeline& tl = timelines[opt.resource];
            double start = tl.earliest(ready, opt.duration);
            double end = start + opt.duration;
            finish[i] = end;
            order.push_back(i);
            bool reserved = end > start;
            if (reserved) tl.busy.emplace_back(start, end);
            search(order, finish, timelines, std::max(makespan, end));
            if (reserved) tl.busy.pop_back();
            order.pop_back();
            finish[i] = -1.0;
        }
    }

    std::vector<std::string> ids_;
    std::size_t n_ = 0;
    std::vector<int> capacity_;
    std::vector<std::vector<std::size_t>> preds_;
    std::vector<std::vector<Option>> options_;
    std::vector<std::size_t> current_;
    double best_ = 0.0;
    std::vector<std::size_t> best_assignment_;
    std::vector<std::size_t> best_order_;
};

}  // namespace

ExecutionPlan optimal_plan_bruteforce(const std::string& workflow_name, const PlanningProblem& problem) {
    if (problem.steps.size() > kBruteforceMaxSteps) {
        throw Error(ErrorKind::TooLarge, "exhaustive planning supports at most " +
                                             std::to_string(kBruteforceMaxSteps) + " steps, got " +
                                             std::to_string(problem.steps.size()));
    }
    for (const auto& [id, opts] : problem.options) {
        if (opts.size() > kBruteforceMaxCandidates) {
            throw Error(ErrorKind::TooLarge, "exhaustive planning supports at most " +
                                                 std::to_string(kBruteforceMaxCandidates) +
                                                 " candidates per step, step '" + id + "' has " +
                                                 std::to_string(opts.size()));
        }
    }
    if (problem.steps.empty()) {
        ExecutionPlan empty;
        empty.workflow = workflow_name;
        return empty;
    }
    Bruteforce bf(problem);
    auto [assignment, order] = bf.solve();
    std::vector<std::string> order_ids;
    std::map<std::string, std::size_t> choice;
    for (std::size_t i : order) order_ids.push_back(bf.ids()[i]);
    for (std::size_t i = 0; i < assignment.size(); ++i) choice[bf.ids()[i]] = assignment[i];
    return schedule_in_order(workflow_name, problem, order_ids, choice);
}

ExecutionPlan optimal_plan_bruteforce(const flow::AbstractWorkflow& awf, const ServiceMap& services,
                                      const ResourceMap& resources, const pkg::PackageMap& packages) {
    if (awf.steps.size() > kBruteforceMaxSteps) {
        throw Error(ErrorKind::TooLarge, "exhaustive planning supports at most " +
                                             std::to_string(kBruteforceMaxSteps) + " steps");
    }
    return optimal_plan_bruteforce(awf.name, make_problem(awf, services, resources, packages));
}

// -- feasibility --------------------------------------------------------------

Diagnostics check_plan(const ExecutionPlan& plan, const flow::AbstractWorkflow& awf, const ServiceMap& services,
                       const ResourceMap& resources) {
    Diagnostics diags;
    for (const auto& s : awf.steps) {
        if (!plan.assignments.contains(s.id)) {
            diags.push_back(make_error("MissingAssignment", "step '" + s.id + "' has no assignment", s.pos));
        }
    }
    std::map<std::string, std::vector<std::pair<double, double>>> per_resource;
    double latest = 0.0;
    for (const auto& [id, a] : plan.assignments) {
        const flow::Step* step = awf.find(id);
        if (!step) {
            diags.push_back(make_error("UnknownStep", "plan assigns unknown step '" + id + "'"));
            continue;
        }
        if (!(a.est_start >= 0.0) || !(a.duration >= 0.0) || a.est_finish != a.est_start + a.duration) {
            diags.push_back(make_error("InconsistentTimes", "step '" + id + "': start " + format_number(a.est_start) +
                                                                " + duration " + format_number(a.duration) +
                                                                " != finish " + format_number(a.est_finish)));
        }
        latest = std::max(latest, a.est_finish);
        auto sit = services.find(a.service);
        if (sit == services.end()) {
            diags.push_back(make_error("UnknownService", "step '" + id + "' assigned to unknown service '" + a.service + "'"));
            continue;
        }
        if (sit->second.package != step->package) {
            diags.push_back(make_error("AssignmentMismatch", "step '" + id + "' (package '" + step->package +
                                                                 "') assigned to service '" + a.service +
                                                                 "' deploying '" + sit->second.package + "'"));
        }
        if (!resources.contains(sit->second.resource)) {
            diags.push_back(make_error("UnknownResource", "service '" + a.service + "' runs on unknown resource"));
            continue;
        }
        per_resource[sit->second.resource].emplace_back(a.est_start, a.est_finish);
    }
    for (const auto& e : awf.edges()) {
        auto p = plan.assignments.find(e.producer);
        auto c = plan.assignments.find(e.consumer);
        if (p == plan.assignments.end() || c == plan.assignments.end()) continue;
        if (p->second.est_finish > c->second.est_start) {
            diags.push_back(make_error("EdgeViolation", "step '" + e.consumer + "' starts at " +
                                                            format_number(c->second.est_start) + " before '" +
                                                            e.producer + "' finishes at " +
                                                            format_number(p->second.est_finish)));
        }
    }
    for (const auto& [rid, intervals] : per_resource) {
        // finishes sort before starts at equal times: intervals are half-open
        std::vector<std::pair<double, int>> events;
        for (const auto& [s, f] : intervals) {
            if (f <= s) continue;
            events.emplace_back(s, +1);
            events.emplace_back(f, -1);
        }
        std::sort(events.begin(), events.end());
        int load = 0;
        int cap = resources.find(rid)->second.capacity;
        for (const auto& [t, delta] : events) {
            load += delta;
            if (load > cap) {
                diags.push_back(make_error("CapacityExceeded", "resource '" + rid + "' runs " + std::to_string(load) +
                                                                   " steps at t=" + format_number(t) +
                                                                   " with capacity " + std::to_string(cap)));
                break;
            }
        }
    }
    if (plan.makespan != latest) {
        diags.push_back(make_error("MakespanMismatch", "makespan " + format_number(plan.makespan) +
                                                           " differs from latest finish " + format_number(latest)));
    }
    return diags;
}

nlohmann::ordered_json plan_to_json(const ExecutionPlan& plan) {
    std::vector<std::pair<std::string, const Assignment*>> rows;
    for (const auto& [id, a] : plan.assignments) rows.emplace_back(id, &a);
    std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
        if (x.second->est_start != y.second->est_start) return x.second->est_start < y.second->est_start;
        return x.first < y.first;
    });
    nlohmann::ordered_json doc;
    doc["workflow"] = plan.workflow;
    doc["makespan"] = plan.makespan;
    doc["assignments"] = nlohmann::ordered_json::array();
    for (const auto& [id, a] : rows) {
        doc["assignments"].push_back({{"step", id},
                                      {"service", a->service},
                                      {"est_start", a->est_start},
                                      {"est_finish", a->est_finish},
                                      {"duration", a->duration}});
    }
    return doc;
}

ExecutionPlan plan_from_json(const nlohmann::json& doc) {
    try {
        ExecutionPlan p;
        p.workflow = doc.at("workflow").get<std::string>();
        p.makespan = doc.at("makespan").get<double>();
        for (const auto& row : doc.at("assignments")) {
            Assignment a{row.at("service").get<std::string>(), row.at("est_start").get<double>(),
                         row.at("est_finish").get<double>(), row.at("duration").get<double>()};
            p.assignments[row.at("step").get<std::string>()] = std::move(a);
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("malformed plan document: ") + e.what());
    }
}

// -- comparison ---------------------------------------------------------------

std::vector<RankedSolution> compare_solutions(const std::string& method_id, const kb::KnowledgeBase& kb,
                                              const pkg::PackageMap& packages, const ServiceMap& services,
                                              const ResourceMap& resources, const std::map<std::string, Scalar>& params,
                                              const Weights& weights) {
    for (double w : {weights.time, weights.cost, weights.accuracy}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::InvalidArgument, "weights must be finite and >= 0");
    }
    if (!(weights.time + weights.cost + weights.accuracy > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "weights must not all be zero");
    }
    const kb::ConceptNode* method = kb.find(method_id);
    if (!method || method->level != kb::kMethodLevel) {
        throw Error(ErrorKind::UnknownMethod, "'" + method_id + "' is not a method (level-3) concept");
    }
    auto concepts = kb.packages_for_method(method_id);
    std::set<std::string> concept_set(concepts.begin(), concepts.end());

    std::vector<RankedSolution> out;
    for (const auto& [name, desc] : packages) {
        if (!desc.concept_id || !concept_set.contains(*desc.concept_id)) continue;
        flow::Step probe;
        probe.id = name;
        probe.package = name;
        for (const auto& [key, value] : params) {
            if (desc.input(key)) probe.args.emplace(key, flow::Literal{value});
        }
        RankedSolution sol;
        sol.package = name;
        bool any = false;
        for (const auto& sid : candidate_services(probe, services, packages)) {
            const ServiceEntry& svc = services.find(sid)->second;
            double t = estimate_step(probe, svc, resources, packages);
            if (!any || t < sol.time) {
                any = true;
                sol.time = t;
                sol.service = sid;
            }
        }
        if (!any) continue;
        const Resource& res = resources.find(services.find(sol.service)->second.resource)->second;
        sol.cost = sol.time / 3600.0 * res.cost_per_hour;
        const kb::ConceptNode* cnode = kb.find(*desc.concept_id);
        auto ait = cnode->attributes.find("accuracy_rank");
        sol.accuracy = (ait != cnode->attributes.end() && is_numeric(ait->second)) ? as_double(ait->second) : 0.0;
        out.push_back(std::move(sol));
    }
    if (out.empty()) throw Error(ErrorKind::NoSolutions, "no deployed package realizes method '" + method_id + "'");

    auto normalizer = [&out](double RankedSolution::*field, bool invert) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& s : out) {
            lo = std::min(lo, s.*field);
            hi = std::max(hi, s.*field);
        }
        return [lo, hi, field, invert](const RankedSolution& s) {
            if (hi == lo) return 0.0;
            return invert ? (hi - s.*field) / (hi - lo) : (s.*field - lo) / (hi - lo);
        };
    };
    auto norm_time = normalizer(&RankedSolution::time, false);
    auto norm_cost = normalizer(&RankedSolution::cost, false);
    auto norm_acc = normalizer(&RankedSolution::accuracy, true);
    for (auto& s : out) {
        s.score = weights.time * norm_time(s) + weights.cost * norm_cost(s) + weights.accuracy * norm_acc(s);
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedSolution& a, const RankedSolution& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.package < b.package;
    });
    return out;
}

}  // namespace clavir::plan
