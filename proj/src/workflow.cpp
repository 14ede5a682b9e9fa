#include "clavir/workflow.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "clavir/lexer.hpp"

namespace clavir::flow {

using text::Tok;

const Step* AbstractWorkflow::find(std::string_view id) const {
    auto it = std::find_if(steps.begin(), steps.end(), [&](const Step& s) { return s.id == id; });
    return it == steps.end() ? nullptr : &*it;
}

Step* AbstractWorkflow::find(std::string_view id) {
    auto it = std::find_if(steps.begin(), steps.end(), [&](const Step& s) { return s.id == id; });
    return it == steps.end() ? nullptr : &*it;
}

std::vector<Edge> AbstractWorkflow::edges() const {
    std::vector<Edge> out;
    for (const auto& s : steps) {
        for (const auto& [input, binding] : s.args) {
            if (const auto* ref = std::get_if<Ref>(&binding)) out.push_back(Edge{ref->step, ref->output, s.id, input});
        }
    }
    return out;
}

namespace {

Binding parse_binding(text::TokenStream& ts) {
    if (ts.at(Tok::Ident) && ts.peek(1).kind == Tok::Dot) {
        Ref ref;
        ref.step = ts.next().text;
        ts.next();
        ref.output = ts.expect_ident("output name");
        return ref;
    }
    if (ts.at(Tok::Ident) && !ts.at_keyword("true") && !ts.at_keyword("false")) ts.fail("literal or '<step>.<output>'");
    return Literal{text::parse_literal(ts)};
}

Step parse_step(text::TokenStream& ts) {
    Step s;
    text::Token id = ts.expect(Tok::Ident, "step id");
    s.id = id.text;
    s.pos = id.pos;
    ts.expect(Tok::Equals);
    s.package = ts.expect_ident("package name");
    ts.expect(Tok::LParen);
    if (!ts.accept(Tok::RParen)) {
        for (;;) {
            text::Token name = ts.expect(Tok::Ident, "argument name");
            ts.expect(Tok::Colon);
            Binding b = parse_binding(ts);
            if (!s.args.emplace(name.text, std::move(b)).second) {
                ts.fail_at(name.pos, ErrorKind::ParseError,
                           "duplicate argument '" + name.text + "' in step '" + s.id + "'");
            }
            if (ts.accept(Tok::RParen)) break;
            ts.expect(Tok::Comma, "',' or ')'");
        }
    }
    return s;
}

std::string format_binding(const Binding& b) {
    if (const auto* ref = std::get_if<Ref>(&b)) return ref->step + "." + ref->output;
    return format_scalar(std::get<Literal>(b).value);
}

/// Resolves a Ref's output name against the producer package, honoring the
/// single-output alias. Returns nullptr when it does not resolve.
const pkg::ParameterSpec* resolve_output(const pkg::PackageDescriptor& producer, const std::string& output) {
    if (const auto* p = producer.output(output)) return p;
    if (output == kOutAlias && producer.outputs.size() == 1) return &producer.outputs.front();
    return nullptr;
}

bool kinds_compatible(pkg::ParamKind from, pkg::ParamKind to) {
    if (from == to) return true;
    return from == pkg::ParamKind::Int && to == pkg::ParamKind::Float;
}

// Adjacency over known steps only; sets keep neighbor order stable.
std::map<std::string, std::set<std::string>> successors(const AbstractWorkflow& awf) {
    std::map<std::string, std::set<std::string>> succ;
    for (const auto& s : awf.steps) succ[s.id];
    for (const auto& e : awf.edges()) {
        if (succ.contains(e.producer) && succ.contains(e.consumer)) succ[e.producer].insert(e.consumer);
    }
    return succ;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

struct KahnResult {
    std::vector<std::string> order;
    std::set<std::string> leftover;
};

KahnResult kahn(const AbstractWorkflow& awf) {
    auto succ = successors(awf);
    std::map<std::string, int> indegree;
    for (const auto& [id, next] : succ) {
        indegree.try_emplace(id, 0);
        for (const auto& n : next) ++indegree[n];
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [id, deg] : indegree) {
        if (deg == 0) ready.push(id);
    }
    KahnResult r;
    while (!ready.empty()) {
        std::string id = ready.top();
        ready.pop();
        for (const auto& n : succ[id]) {
            if (--indegree[n] == 0) ready.push(n);
        }
        r.order.push_back(std::move(id));
    }
    for (const auto& [id, deg] : indegree) {
        if (deg > 0) r.leftover.insert(id);
    }
    return r;
}

}  // namespace

AbstractWorkflow parse_workflow(std::string_view source) {
    text::TokenStream ts(source);
    AbstractWorkflow awf;
    awf.pos = ts.peek().pos;
    ts.expect_keyword("workflow");
    awf.name = ts.expect_string("workflow name string");
    ts.expect(Tok::LBrace);
    std::set<std::string> ids;
    while (!ts.accept(Tok::RBrace)) {
        if (ts.accept(Tok::Semicolon)) continue;
        if (!ts.at_keyword("step")) ts.fail("'step' or '}'");
        ts.next();
        Step s = parse_step(ts);
        if (!ids.insert(s.id).second) {
            throw Error(ErrorKind::DuplicateStepId, "duplicate step id '" + s.id + "'", s.pos);
        }
        awf.steps.push_back(std::move(s));
    }
    if (!ts.at(Tok::End)) ts.fail("end of input");
    return awf;
}

std::string print_workflow(const AbstractWorkflow& awf) {
    std::ostringstream os;
    os << "workflow " << quote(awf.name) << " {\n";
    for (const auto& s : awf.steps) {
        os << "  step " << s.id << " = " << s.package << '(';
        bool first = true;
        for (const auto& [name, b] : s.args) {
            if (!first) os << ", ";
            first = false;
            os << name << ": " << format_binding(b);
        }
        os << ")\n";
    }
    os << "}\n";
    return os.str();
}

std::vector<std::string> find_cycle(const AbstractWorkflow& awf) {
    KahnResult r = kahn(awf);
    if (r.leftover.empty()) return {};
    // Every leftover step has a leftover predecessor, so walking backwards
    // must revisit a step.
    std::map<std::string, std::string> some_pred;
    for (const auto& e : awf.edges()) {
        if (r.leftover.contains(e.producer) && r.leftover.contains(e.consumer)) {
            auto [it, inserted] = some_pred.try_emplace(e.consumer, e.producer);
            if (!inserted && e.producer < it->second) it->second = e.producer;
        }
    }
    std::vector<std::string> walk;
    std::map<std::string, std::size_t> seen;
    std::string cur = *r.leftover.begin();
    while (!seen.contains(cur)) {
        seen[cur] = walk.size();
        walk.push_back(cur);
        cur = some_pred.at(cur);
    }
    std::vector<std::string> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen[cur]), walk.end());
    std::reverse(cycle.begin(), cycle.end());
    auto smallest = std::min_element(cycle.begin(), cycle.end());
    std::rotate(cycle.begin(), smallest, cycle.end());
    return cycle;
}

std::vector<std::string> topo_order(const AbstractWorkflow& awf) {
    KahnResult r = kahn(awf);
    if (!r.leftover.empty()) {
        auto cycle = find_cycle(awf);
        cycle.push_back(cycle.front());
        throw Error(ErrorKind::CycleDetected, "cycle: " + join(cycle, " -> "));
    }
    return r.order;
}

std::map<std::string, std::vector<std::string>> predecessors(const AbstractWorkflow& awf) {
    std::map<std::string, std::set<std::string>> preds;
    for (const auto& s : awf.steps) preds[s.id];
    for (const auto& e : awf.edges()) {
        if (preds.contains(e.producer) && preds.contains(e.consumer)) preds[e.consumer].insert(e.producer);
    }
    std::map<std::string, std::vector<std::string>> out;
    for (auto& [id, set] : preds) out[id] = std::vector<std::string>(set.begin(), set.end());
    return out;
}

Diagnostics validate_workflow(const AbstractWorkflow& awf, const pkg::PackageMap& packages) {
    Diagnostics diags;
    auto package_of = [&](const Step& s) -> const pkg::PackageDescriptor* {
        auto it = packages.find(s.package);
        return it == packages.end() ? nullptr : &it->second;
    };

    // outputs actually consumed, for the dangling-output warning
    std::set<std::pair<std::string, std::string>> consumed;

    for (const auto& s : awf.steps) {
        const std::string who = "step '" + s.id + "'";
        const pkg::PackageDescriptor* pkg = package_of(s);
        if (!pkg) {
            diags.push_back(make_error("UnknownPackage", who + " uses unknown package '" + s.package + "'", s.pos));
        }
        for (const auto& [input, binding] : s.args) {
            const pkg::ParameterSpec* param = pkg ? pkg->input(input) : nullptr;
            if (pkg && !param) {
                diags.push_back(make_error("UnknownInput", who + ": package '" + pkg->name +
                                                               "' has no input '" + input + "'", s.pos));
            }
            if (const auto* lit = std::get_if<Literal>(&binding)) {
                if (param && !pkg::literal_fits(param->kind, lit->value)) {
                    diags.push_back(make_error("KindMismatch", who + ": input '" + input + "' of kind " +
                                                                   std::string(pkg::to_string(param->kind)) +
                                                                   " bound to " + format_scalar(lit->value),
                                               s.pos));
                }
                continue;
            }
            const Ref& ref = std::get<Ref>(binding);
            const Step* producer = awf.find(ref.step);
            if (!producer) {
                diags.push_back(make_error("UnknownStep", who + ": input '" + input + "' refers to unknown step '" +
                                                              ref.step + "'", s.pos));
                continue;
            }
            const pkg::PackageDescriptor* ppkg = package_of(*producer);
            if (!ppkg) continue;  // already reported on the producer
            const pkg::ParameterSpec* out = resolve_output(*ppkg, ref.output);
            if (!out) {
                diags.push_back(make_error("UnknownOutput", who + ": step '" + ref.step + "' (package '" +
                                                                ppkg->name + "') has no output '" + ref.output +
                                                                "'", s.pos));
                continue;
            }
            consumed.emplace(producer->id, out->name);
            if (!param) continue;
            if (!kinds_compatible(out->kind, param->kind)) {
                diags.push_back(make_error("KindMismatch", who + ": input '" + input + "' of kind " +
                                                               std::string(pkg::to_string(param->kind)) +
                                                               " fed by output '" + ref.step + "." + out->name +
                                                               "' of kind " + std::string(pkg::to_string(out->kind)),
                                           s.pos));
            } else if (out->format && param->format && *out->format != *param->format) {
                diags.push_back(make_error("FormatMismatch", who + ": input '" + input + "' expects format " +
                                                                 quote(*param->format) + " but '" + ref.step + "." +
                                                                 out->name + "' produces " + quote(*out->format),
                                           s.pos));
            }
        }
        if (pkg) {
            for (const auto& p : pkg->inputs) {
                if (p.required() && !s.args.contains(p.name)) {
                    diags.push_back(make_error("MissingInput", who + ": required input '" + p.name + "' of package '" +
                                                                   pkg->name + "' is not bound", s.pos));
                }
            }
        }
    }

    auto cycle = find_cycle(awf);
    if (!cycle.empty()) {
        cycle.push_back(cycle.front());
        const Step* first = awf.find(cycle.front());
        diags.push_back(make_error("CycleDetected", "cycle: " + join(cycle, " -> "), first ? first->pos : awf.pos));
    }

    for (const auto& s : awf.steps) {
        const pkg::PackageDescriptor* pkg = package_of(s);
        if (!pkg) continue;
        for (const auto& o : pkg->outputs) {
            if (!consumed.contains({s.id, o.name})) {
                diags.push_back(make_warning("UnusedOutput", "step '" + s.id + "': output '" + o.name +
                                                                 "' is never consumed", s.pos));
            }
        }
    }
    return diags;
}

std::string to_dot(const AbstractWorkflow& awf) {
    std::vector<const Step*> nodes;
    for (const auto& s : awf.steps) nodes.push_back(&s);
    std::sort(nodes.begin(), nodes.end(), [](const Step* a, const Step* b) { return a->id < b->id; });
    auto edges = awf.edges();
    std::sort(edges.begin(), edges.end());

    std::ostringstream os;
    os << "digraph " << quote(awf.name) << " {\n";
    for (const Step* s : nodes) os << "  " << quote(s->id) << " [label=" << quote(s->id + " : " + s->package) << "];\n";
    for (const auto& e : edges) {
        os << "  " << quote(e.producer) << " -> " << quote(e.consumer)
           << " [label=" << quote(e.output + "→" + e.input) << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace clavir::flow
