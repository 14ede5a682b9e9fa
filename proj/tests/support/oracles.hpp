#pragma once
// Reference implementations used only by tests. Each one is written the
// obvious slow way and shares no code path with the library routine it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "clavir/executor.hpp"
#include "clavir/kb.hpp"
#include "clavir/perf.hpp"
#include "clavir/planner.hpp"
#include "clavir/vso.hpp"
#include "clavir/workflow.hpp"
#include "generators.hpp"

namespace clavir::testkit {

/// Every typed 3-edge path from `object`, by scanning all node triples.
inline std::vector<std::tuple<std::string, std::string, std::string>> brute_chains(const kb::KnowledgeBase& k,
                                                                                   const std::string& object) {
    auto linked = [&](const std::string& a, kb::Relation r, const std::string& b) {
        for (const auto& l : k.links()) {
            if (l.from == a && l.relation == r && l.to == b) return true;
        }
        return false;
    };
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& [m, mn] : k.nodes()) {
        if (!linked(object, kb::Relation::HasModel, m)) continue;
        for (const auto& [me, men] : k.nodes()) {
            if (!linked(m, kb::Relation::ImplementedBy, me)) continue;
            for (const auto& [p, pn] : k.nodes()) {
                if (linked(me, kb::Relation::RealizedIn, p)) out.emplace_back(m, me, p);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Outcome of evaluating an expression: a value or the kind of failure.
struct EvalOutcome {
    std::optional<double> value;
    std::optional<ErrorKind> error;
};

/// Direct recursion over the tree with the same failure rules as the
/// library: exact-zero divisors, log of non-positive, sqrt of negative,
/// any non-finite intermediate, and a negative final result.
inline EvalOutcome reference_eval(const perf::Expr& root, const perf::Bindings& params, const perf::Bindings& resource) {
    struct Failure {
        ErrorKind kind;
    };
    auto finite = [](double v) {
        if (!std::isfinite(v)) throw Failure{ErrorKind::NonFinite};
        return v;
    };
    std::function<double(const perf::Expr&)> go = [&](const perf::Expr& e) -> double {
        using K = perf::Expr::Kind;
        switch (e.kind) {
        case K::Number: return e.value;
        case K::Param: {
            auto it = params.find(e.name);
            if (it == params.end()) throw Failure{ErrorKind::UnboundIdentifier};
            return finite(it->second);
        }
        case K::Resource: {
            auto it = resource.find(e.name);
            if (it == resource.end()) throw Failure{ErrorKind::UnboundIdentifier};
            return finite(it->second);
        }
        case K::Neg: return -go(e.args[0]);
        case K::Add: {
            double a = go(e.args[0]);
            return finite(a + go(e.args[1]));
        }
        case K::Sub: {
            double a = go(e.args[0]);
            return finite(a - go(e.args[1]));
        }
        case K::Mul: {
            double a = go(e.args[0]);
            return finite(a * go(e.args[1]));
        }
        case K::Div: {
            double a = go(e.args[0]);
            double b = go(e.args[1]);
            if (b == 0.0) throw Failure{ErrorKind::DivisionByZero};
            return finite(a / b);
        }
        case K::Pow: {
            double a = go(e.args[0]);
            return finite(std::pow(a, go(e.args[1])));
        }
        case K::Call: {
            if (e.name == "log") {
                double a = go(e.args[0]);
                if (a <= 0.0) throw Failure{ErrorKind::NonFinite};
                return finite(std::log(a));
            }
            if (e.name == "sqrt") {
                double a = go(e.args[0]);
                if (a < 0.0) throw Failure{ErrorKind::NonFinite};
                return std::sqrt(a);
            }
            double a = go(e.args[0]);
            double b = go(e.args[1]);
            return e.name == "min" ? (b < a ? b : a) : (a < b ? b : a);
        }
        }
        throw Failure{ErrorKind::InvalidArgument};
    };
    try {
        double v = go(root);
        if (v < 0.0) return {std::nullopt, ErrorKind::NegativeEstimate};
        return {v, std::nullopt};
    } catch (const Failure& f) {
        return {std::nullopt, f.kind};
    }
}

/// Three-colour DFS over Ref edges.
inline bool dfs_has_cycle(const flow::AbstractWorkflow& awf) {
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto& s : awf.steps) {
        succ[s.id];
        for (const auto& [name, b] : s.args) {
            if (const auto* r = std::get_if<flow::Ref>(&b)) succ[r->step].push_back(s.id);
        }
    }
    std::map<std::string, int> colour;
    std::function<bool(const std::string&)> visit = [&](const std::string& u) {
        colour[u] = 1;
        for (const auto& v : succ[u]) {
            if (colour[v] == 1) return true;
            if (colour[v] == 0 && visit(v)) return true;
        }
        colour[u] = 2;
        return false;
    };
    for (const auto& [u, _] : succ) {
        if (colour[u] == 0 && visit(u)) return true;
    }
    return false;
}

/// (step, package) pairs and (producer, output, consumer, input) edges that
/// translating `sys` must produce, read straight from the object library.
struct ExpectedGraph {
    std::set<std::pair<std::string, std::string>> steps;
    std::multiset<std::tuple<std::string, std::string, std::string, std::string>> edges;
};

inline ExpectedGraph expected_graph(const vso::SystemDescription& sys, const vso::ObjectLibrary& library) {
    ExpectedGraph g;
    std::map<std::string, const vso::ModelSelection*> chosen;
    for (const auto& inst : sys.instances) {
        const auto& sel = library.at(inst.object).models.at(static_cast<std::size_t>(inst.model));
        chosen[inst.alias] = &sel;
        g.steps.emplace(inst.alias, sel.package);
    }
    for (const auto& c : sys.connections) {
        g.edges.emplace(c.from_alias, chosen[c.from_alias]->port_map.at(c.from_port), c.to_alias,
                        chosen[c.to_alias]->port_map.at(c.to_port));
    }
    return g;
}

/// Sum over steps of the quickest candidate's `work / speed`: running every
/// step one after another, each on its fastest service.
inline double serial_fastest_bound(const SchedInstance& inst) {
    double total = 0.0;
    for (const auto& step : inst.awf.steps) {
        double work = std::get<double>(std::get<flow::Literal>(step.args.at("work")).value);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [id, svc] : inst.services) {
            if (svc.package == step.package) best = std::min(best, work / inst.resources.at(svc.resource).speed);
        }
        total += best;
    }
    return total;
}

/// Reads back the `<time>\t<kind>\t<step>\t<service>` log.
inline exec::ExecutionTrace parse_trace_log(const std::string& workflow, const std::string& text) {
    exec::ExecutionTrace t;
    t.workflow = workflow;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string time, kind, step, service;
        std::getline(row, time, '\t');
        std::getline(row, kind, '\t');
        std::getline(row, step, '\t');
        std::getline(row, service, '\t');
        exec::Event e;
        e.time = std::stod(time);
        e.kind = kind == "Start" ? exec::EventKind::Start : kind == "Finish" ? exec::EventKind::Finish : exec::EventKind::Fail;
        e.step = step;
        e.service = service;
        if (e.kind == exec::EventKind::Fail) t.status = exec::Status::Failed;
        t.makespan = std::max(t.makespan, e.time);
        t.events.push_back(std::move(e));
    }
    return t;
}

}  // namespace clavir::testkit
