#include "clavir/vso.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "clavir/lexer.hpp"

namespace clavir::vso {

using text::Tok;

std::string_view to_string(Direction dir) { return dir == Direction::In ? "in" : "out"; }

const Port* SimulationObject::port(std::string_view n) const {
    auto it = std::find_if(ports.begin(), ports.end(), [&](const Port& p) { return p.name == n; });
    return it == ports.end() ? nullptr : &*it;
}

const Instance* SystemDescription::instance(std::string_view alias) const {
    auto it = std::find_if(instances.begin(), instances.end(), [&](const Instance& i) { return i.alias == alias; });
    return it == instances.end() ? nullptr : &*it;
}

std::vector<double> sweep_values(const SweepTask& task) {
    std::vector<double> out;
    if (!(task.step > 0.0) || !(task.from <= task.to)) return out;
    for (std::int64_t k = 0;; ++k) {
        double v = task.from + static_cast<double>(k) * task.step;
        if (v > task.to + kSweepTolerance) break;
        out.push_back(v);
    }
    return out;
}

namespace {

[[noreturn]] void semantic(SourcePos pos, const std::string& msg) { throw Error(ErrorKind::SemanticError, msg, pos); }

SimulationObject parse_object(text::TokenStream& ts, SourcePos pos) {
    SimulationObject obj;
    obj.pos = pos;
    obj.name = ts.expect_string("object name string");
    ts.expect_keyword("concept");
    obj.concept_id = ts.expect_string("concept id string");
    ts.expect(Tok::LBrace);
    while (!ts.accept(Tok::RBrace)) {
        SourcePos at = ts.peek().pos;
        if (ts.at_keyword("in") || ts.at_keyword("out")) {
            Port p;
            p.pos = at;
            p.direction = ts.next().text == "in" ? Direction::In : Direction::Out;
            p.name = ts.expect_ident("port name");
            ts.expect_keyword("format");
            p.format = ts.expect_string("format string");
            if (obj.port(p.name)) semantic(at, "object '" + obj.name + "': duplicate port '" + p.name + "'");
            obj.ports.push_back(std::move(p));
        } else if (ts.accept_keyword("model")) {
            ModelSelection m;
            m.pos = at;
            m.model = ts.expect_string("model id string");
            ts.expect_keyword("method");
            m.method = ts.expect_string("method id string");
            ts.expect_keyword("package");
            m.package = ts.expect_string("package name string");
            ts.expect(Tok::LBrace);
            while (!ts.accept(Tok::RBrace)) {
                SourcePos map_at = ts.peek().pos;
                if (!ts.accept_keyword("map")) ts.fail("'map' or '}'");
                std::string port = ts.expect_ident("port name");
                ts.expect(Tok::Arrow, "'->'");
                std::string param = ts.expect_ident("package parameter name");
                if (!m.port_map.emplace(port, param).second) {
                    semantic(map_at, "object '" + obj.name + "': port '" + port + "' mapped twice");
                }
            }
            obj.models.push_back(std::move(m));
        } else {
            ts.fail("'in', 'out', 'model' or '}'");
        }
    }
    for (const auto& m : obj.models) {
        for (const auto& [port, param] : m.port_map) {
            if (!obj.port(port)) semantic(m.pos, "object '" + obj.name + "': map of unknown port '" + port + "'");
        }
    }
    return obj;
}

SystemDescription parse_system(text::TokenStream& ts, SourcePos pos) {
    SystemDescription sys;
    sys.pos = pos;
    sys.name = ts.expect_string("system name string");
    ts.expect(Tok::LBrace);
    while (!ts.accept(Tok::RBrace)) {
        SourcePos at = ts.peek().pos;
        if (ts.accept_keyword("use")) {
            Instance inst;
            inst.pos = at;
            inst.object = ts.expect_string("object name string");
            ts.expect_keyword("as");
            inst.alias = ts.expect_ident("instance alias");
            if (ts.accept_keyword("model")) {
                text::Token idx = ts.expect(Tok::Number, "model index");
                if (!idx.integral) semantic(idx.pos, "model index must be a non-negative integer");
                std::int64_t v = text::to_int(idx);
                if (v > 1'000'000) semantic(idx.pos, "model index out of range");
                inst.model = static_cast<int>(v);
            }
            if (ts.accept(Tok::LBrace)) {
                while (!ts.accept(Tok::RBrace)) {
                    text::Token key = ts.expect(Tok::Ident, "parameter name or '}'");
                    ts.expect(Tok::Equals);
                    Scalar value = text::parse_literal(ts);
                    if (!inst.overrides.emplace(key.text, std::move(value)).second) {
                        semantic(key.pos, "instance '" + inst.alias + "': duplicate override '" + key.text + "'");
                    }
                }
            }
            if (sys.instance(inst.alias)) semantic(at, "duplicate instance alias '" + inst.alias + "'");
            sys.instances.push_back(std::move(inst));
        } else if (ts.accept_keyword("connect")) {
            Connection c;
            c.pos = at;
            c.from_alias = ts.expect_ident("instance alias");
            ts.expect(Tok::Dot);
            c.from_port = ts.expect_ident("port name");
            ts.expect(Tok::Arrow, "'->'");
            c.to_alias = ts.expect_ident("instance alias");
            ts.expect(Tok::Dot);
            c.to_port = ts.expect_ident("port name");
            sys.connections.push_back(std::move(c));
        } else if (ts.accept_keyword("sweep")) {
            SweepTask t;
            t.pos = at;
            t.alias = ts.expect_ident("instance alias");
            ts.expect(Tok::Dot);
            t.parameter = ts.expect_ident("parameter name");
            ts.expect_keyword("from");
            t.from = ts.expect_signed_number("sweep start").number;
            ts.expect_keyword("to");
            t.to = ts.expect_signed_number("sweep end").number;
            ts.expect_keyword("step");
            t.step = ts.expect_signed_number("sweep step").number;
            if (!(t.step > 0.0)) semantic(at, "sweep step must be positive");
            if (t.from > t.to) semantic(at, "sweep 'from' exceeds 'to'");
            sys.tasks.push_back(std::move(t));
        } else {
            ts.fail("'use', 'connect', 'sweep' or '}'");
        }
    }
    for (const auto& c : sys.connections) {
        for (const auto* alias : {&c.from_alias, &c.to_alias}) {
            if (!sys.instance(*alias)) semantic(c.pos, "connection uses unknown instance '" + *alias + "'");
        }
    }
    for (const auto& t : sys.tasks) {
        if (!sys.instance(t.alias)) semantic(t.pos, "sweep targets unknown instance '" + t.alias + "'");
    }
    return sys;
}

struct ConnectionIssue {
    std::string code;
    std::string message;
};

/// Port-level checks for one connection given both objects.
std::optional<ConnectionIssue> check_connection(const Connection& c, const SimulationObject& producer,
                                                const SimulationObject& consumer) {
    const Port* out = producer.port(c.from_port);
    const Port* in = consumer.port(c.to_port);
    std::string where = c.from_alias + "." + c.from_port + " -> " + c.to_alias + "." + c.to_port;
    if (!out) return ConnectionIssue{"UnknownPort", where + ": object '" + producer.name + "' has no port '" + c.from_port + "'"};
    if (!in) return ConnectionIssue{"UnknownPort", where + ": object '" + consumer.name + "' has no port '" + c.to_port + "'"};
    if (out->direction != Direction::Out || in->direction != Direction::In) {
        return ConnectionIssue{"DirectionClash", where + ": connects " + std::string(to_string(out->direction)) +
                                                     " port to " + std::string(to_string(in->direction)) +
                                                     " port, expected out -> in"};
    }
    if (out->format != in->format) {
        return ConnectionIssue{"FormatMismatch", where + ": format " + quote(out->format) + " does not match " +
                                                     quote(in->format)};
    }
    return std::nullopt;
}

const SimulationObject* lookup(const ObjectLibrary& lib, const std::string& name) {
    auto it = lib.find(name);
    return it == lib.end() ? nullptr : &it->second;
}

}  // namespace

VsoDocument parse_vso(std::string_view source) {
    text::TokenStream ts(source);
    VsoDocument doc;
    ObjectLibrary local;
    while (!ts.at(Tok::End)) {
        SourcePos at = ts.peek().pos;
        if (ts.accept_keyword("object")) {
            SimulationObject obj = parse_object(ts, at);
            if (!local.emplace(obj.name, obj).second) semantic(at, "duplicate object '" + obj.name + "'");
            doc.objects.push_back(std::move(obj));
        } else if (ts.accept_keyword("system")) {
            doc.systems.push_back(parse_system(ts, at));
        } else {
            ts.fail("'object' or 'system'");
        }
    }
    for (const auto& sys : doc.systems) {
        for (const auto& c : sys.connections) {
            const SimulationObject* producer = lookup(local, sys.instance(c.from_alias)->object);
            const SimulationObject* consumer = lookup(local, sys.instance(c.to_alias)->object);
            if (!producer || !consumer) continue;  // resolved later against the full library
            if (auto issue = check_connection(c, *producer, *consumer)) semantic(c.pos, issue->message);
        }
    }
    return doc;
}

std::string print_vso(const VsoDocument& doc) {
    std::ostringstream os;
    bool first = true;
    auto separate = [&] {
        if (!first) os << '\n';
        first = false;
    };
    for (const auto& obj : doc.objects) {
        separate();
        os << "object " << quote(obj.name) << " concept " << quote(obj.concept_id) << " {\n";
        for (const auto& p : obj.ports) {
            os << "  " << to_string(p.direction) << ' ' << p.name << " format " << quote(p.format) << '\n';
        }
        for (const auto& m : obj.models) {
            os << "  model " << quote(m.model) << " method " << quote(m.method) << " package " << quote(m.package)
               << " {";
            for (const auto& [port, param] : m.port_map) os << " map " << port << " -> " << param;
            os << (m.port_map.empty() ? "}" : " }") << '\n';
        }
        os << "}\n";
    }
    for (const auto& sys : doc.systems) {
        separate();
        os << "system " << quote(sys.name) << " {\n";
        for (const auto& i : sys.instances) {
            os << "  use " << quote(i.object) << " as " << i.alias << " model " << i.model;
            if (!i.overrides.empty()) {
                os << " {";
                for (const auto& [k, v] : i.overrides) os << ' ' << k << " = " << format_scalar(v);
                os << " }";
            }
            os << '\n';
        }
        for (const auto& c : sys.connections) {
            os << "  connect " << c.from_alias << '.' << c.from_port << " -> " << c.to_alias << '.' << c.to_port
               << '\n';
        }
        for (const auto& t : sys.tasks) {
            os << "  sweep " << t.alias << '.' << t.parameter << " from " << format_number(t.from) << " to "
               << format_number(t.to) << " step " << format_number(t.step) << '\n';
        }
        os << "}\n";
    }
    return os.str();
}

void add_objects(ObjectLibrary& library, const std::vector<SimulationObject>& objects) {
    for (const auto& obj : objects) {
        if (!library.emplace(obj.name, obj).second) {
            throw Error(ErrorKind::SemanticError, "duplicate object '" + obj.name + "' in library", obj.pos);
        }
    }
}

Diagnostics validate_system(const SystemDescription& sys, const ObjectLibrary& library, const kb::KnowledgeBase& kb,
                            const pkg::PackageMap& packages) {
    Diagnostics diags;

    // Chosen (object, model, package) per alias, when resolvable.
    struct Resolved {
        const SimulationObject* object = nullptr;
        const ModelSelection* model = nullptr;
        const pkg::PackageDescriptor* package = nullptr;
    };
    std::map<std::string, Resolved> resolved;

    for (const auto& inst : sys.instances) {
        const std::string who = "instance '" + inst.alias + "'";
        Resolved r;
        r.object = lookup(library, inst.object);
        if (!r.object) {
            diags.push_back(make_error("UnknownObject", who + " uses unknown object '" + inst.object + "'", inst.pos));
            resolved[inst.alias] = r;
            continue;
        }
        const SimulationObject& obj = *r.object;
        if (inst.model < 0 || inst.model >= static_cast<int>(obj.models.size())) {
            diags.push_back(make_error("InvalidModelIndex", who + ": object '" + obj.name + "' has " +
                                                                std::to_string(obj.models.size()) +
                                                                " model(s), index " + std::to_string(inst.model) +
                                                                " is out of range", inst.pos));
            resolved[inst.alias] = r;
            continue;
        }
        r.model = &obj.models[static_cast<std::size_t>(inst.model)];
        const ModelSelection& m = *r.model;

        const kb::ConceptNode* cnode = kb.find(obj.concept_id);
        if (!cnode) {
            diags.push_back(make_error("UnknownConcept", who + ": object concept '" + obj.concept_id + "' is not in the knowledge base", inst.pos));
        } else if (cnode->level != kb::kObjectLevel) {
            diags.push_back(make_error("WrongLevel", who + ": object concept '" + obj.concept_id + "' is at level " +
                                                         std::to_string(cnode->level) + ", expected 1", inst.pos));
        } else if (!kb.has_link(obj.concept_id, kb::Relation::HasModel, m.model) ||
                   !kb.has_link(m.model, kb::Relation::ImplementedBy, m.method)) {
            diags.push_back(make_error("ChainBroken", who + ": no knowledge-base chain " + obj.concept_id +
                                                          " -has_model-> " + m.model + " -implemented_by-> " +
                                                          m.method, m.pos));
        }

        auto pit = packages.find(m.package);
        if (pit == packages.end()) {
            diags.push_back(make_error("UnknownPackage", who + ": model maps to unknown package '" + m.package + "'", m.pos));
        } else {
            r.package = &pit->second;
            const pkg::PackageDescriptor& p = *r.package;
            if (!p.concept_id || !kb.has_link(m.method, kb::Relation::RealizedIn, *p.concept_id)) {
                diags.push_back(make_error("ChainBroken", who + ": method '" + m.method + "' is not realized_in the concept of package '" +
                                                              p.name + "'" + (p.concept_id ? " ('" + *p.concept_id + "')" : " (none declared)"),
                                           m.pos));
            }
            for (const auto& [port_name, param] : m.port_map) {
                const Port* port = obj.port(port_name);
                if (!port) continue;  // rejected by the parser
                const pkg::ParameterSpec* spec = port->direction == Direction::In ? p.input(param) : p.output(param);
                if (!spec) {
                    diags.push_back(make_error("PortMapInvalid", who + ": port '" + port_name + "' maps to '" + param +
                                                                     "', which is not an " +
                                                                     (port->direction == Direction::In ? "input" : "output") +
                                                                     " of package '" + p.name + "'", m.pos));
                }
            }
            for (const auto& [key, value] : inst.overrides) {
                const pkg::ParameterSpec* spec = p.input(key);
                if (!spec) {
                    diags.push_back(make_error("UnknownParameter", who + ": package '" + p.name + "' has no input '" + key + "'", inst.pos));
                } else if (!pkg::literal_fits(spec->kind, value)) {
                    diags.push_back(make_error("KindMismatch", who + ": input '" + key + "' of kind " +
                                                                   std::string(pkg::to_string(spec->kind)) +
                                                                   " overridden with " + format_scalar(value), inst.pos));
                }
            }
        }
        resolved[inst.alias] = r;
    }

    // consumer (alias, parameter) -> number of binders
    std::map<std::pair<std::string, std::string>, int> bound;
    std::set<std::pair<std::string, std::string>> connected;
    for (const auto& inst : sys.instances) {
        for (const auto& [key, value] : inst.overrides) bound[{inst.alias, key}]++;
    }

    for (const auto& c : sys.connections) {
        std::string where = c.from_alias + "." + c.from_port + " -> " + c.to_alias + "." + c.to_port;
        auto fit = resolved.find(c.from_alias);
        auto tit = resolved.find(c.to_alias);
        if (fit == resolved.end() || tit == resolved.end()) {
            diags.push_back(make_error("UnknownAlias", where + ": unknown instance", c.pos));
            continue;
        }
        const Resolved& from = fit->second;
        const Resolved& to = tit->second;
        if (!from.object || !to.object) continue;
        if (auto issue = check_connection(c, *from.object, *to.object)) {
            diags.push_back(make_error(issue->code, issue->message, c.pos));
            continue;
        }
        if (from.model && !from.model->port_map.contains(c.from_port)) {
            diags.push_back(make_error("UnmappedPort", where + ": port '" + c.from_port + "' is not mapped by the chosen model of '" + c.from_alias + "'", c.pos));
        }
        if (to.model) {
            auto mit = to.model->port_map.find(c.to_port);
            if (mit == to.model->port_map.end()) {
                diags.push_back(make_error("UnmappedPort", where + ": port '" + c.to_port + "' is not mapped by the chosen model of '" + c.to_alias + "'", c.pos));
            } else {
                bound[{c.to_alias, mit->second}]++;
                connected.emplace(c.to_alias, mit->second);
            }
        }
    }

    for (const auto& [key, count] : bound) {
        if (count > 1) {
            const Instance* inst = sys.instance(key.first);
            diags.push_back(make_error("DuplicateBinding", "instance '" + key.first + "': input '" + key.second +
                                                               "' is bound " + std::to_string(count) + " times",
                                       inst ? inst->pos : sys.pos));
        }
    }

    std::set<std::pair<std::string, std::string>> swept;
    for (const auto& t : sys.tasks) swept.emplace(t.alias, t.parameter);

    for (const auto& inst : sys.instances) {
        const Resolved& r = resolved[inst.alias];
        if (!r.package) continue;
        for (const auto& p : r.package->inputs) {
            if (p.required() && !bound.contains({inst.alias, p.name}) && !swept.contains({inst.alias, p.name})) {
                diags.push_back(make_error("MissingInput", "instance '" + inst.alias + "': required input '" + p.name +
                                                               "' of package '" + r.package->name +
                                                               "' is neither overridden nor connected", inst.pos));
            }
        }
    }

    for (const auto& t : sys.tasks) {
        std::string target = t.alias + "." + t.parameter;
        auto it = resolved.find(t.alias);
        if (it == resolved.end()) {
            diags.push_back(make_error("UnknownAlias", "sweep " + target + ": unknown instance", t.pos));
            continue;
        }
        if (!it->second.package) continue;
        const pkg::ParameterSpec* spec = it->second.package->input(t.parameter);
        if (!spec) {
            diags.push_back(make_error("UnknownParameter", "sweep " + target + ": package '" + it->second.package->name +
                                                               "' has no input '" + t.parameter + "'", t.pos));
        } else if (!pkg::is_numeric(spec->kind)) {
            diags.push_back(make_error("NotNumericTarget", "sweep " + target + ": input is of kind " +
                                                               std::string(pkg::to_string(spec->kind)), t.pos));
        } else if (spec->kind == pkg::ParamKind::Int &&
                   (t.from != std::floor(t.from) || t.step != std::floor(t.step))) {
            diags.push_back(make_error("NotNumericTarget", "sweep " + target + ": int input needs integral from/step", t.pos));
        }
        if (connected.contains({t.alias, t.parameter})) {
            diags.push_back(make_error("DuplicateBinding", "sweep " + target + ": input is fed by a connection", t.pos));
        }
    }
    return diags;
}

flow::AbstractWorkflow translate(const SystemDescription& sys, const ObjectLibrary& library,
                                 const kb::KnowledgeBase& kb, const pkg::PackageMap& packages) {
    Diagnostics diags = validate_system(sys, library, kb, packages);
    for (const auto& d : diags) {
        if (d.severity == Severity::Error) {
            throw Error(ErrorKind::TranslationError, "system '" + sys.name + "': " + d.code + ": " + d.message, d.pos);
        }
    }

    auto model_of = [&](const Instance& inst) -> const ModelSelection& {
        const SimulationObject& obj = library.find(inst.object)->second;
        return obj.models[static_cast<std::size_t>(inst.model)];
    };

    flow::AbstractWorkflow awf;
    awf.name = sys.name;
    awf.pos = sys.pos;
    for (const auto& inst : sys.instances) {
        flow::Step step;
        step.id = inst.alias;
        step.package = model_of(inst).package;
        step.pos = inst.pos;
        for (const auto& [key, value] : inst.overrides) step.args.emplace(key, flow::Literal{value});
        awf.steps.push_back(std::move(step));
    }
    // swept inputs without an override start at the first sweep value
    for (const auto& t : sys.tasks) {
        flow::Step* step = awf.find(t.alias);
        const pkg::ParameterSpec* spec = packages.find(step->package)->second.input(t.parameter);
        Scalar first = spec->kind == pkg::ParamKind::Int ? Scalar(static_cast<std::int64_t>(t.from)) : Scalar(t.from);
        step->args.try_emplace(t.parameter, flow::Literal{first});
    }
    for (const auto& c : sys.connections) {
        const ModelSelection& producer = model_of(*sys.instance(c.from_alias));
        const ModelSelection& consumer = model_of(*sys.instance(c.to_alias));
        flow::Step* step = awf.find(c.to_alias);
        step->args[consumer.port_map.at(c.to_port)] = flow::Ref{c.from_alias, producer.port_map.at(c.from_port)};
    }
    return awf;
}

std::vector<flow::AbstractWorkflow> expand_sweep(const SystemDescription& sys, const flow::AbstractWorkflow& awf,
                                                 const pkg::PackageMap& packages) {
    if (sys.tasks.empty()) return {awf};

    struct Axis {
        std::string step;
        std::string parameter;
        bool integral = false;
        std::vector<double> values;
    };
    std::vector<Axis> axes;
    for (const auto& t : sys.tasks) {
        std::string target = t.alias + "." + t.parameter;
        const flow::Step* step = awf.find(t.alias);
        if (!step) throw Error(ErrorKind::NotNumericTarget, "sweep " + target + ": no such step", t.pos);
        auto pit = packages.find(step->package);
        const pkg::ParameterSpec* spec = pit == packages.end() ? nullptr : pit->second.input(t.parameter);
        if (!spec || !pkg::is_numeric(spec->kind)) {
            throw Error(ErrorKind::NotNumericTarget, "sweep " + target + ": target is not a numeric input", t.pos);
        }
        Axis axis;
        axis.step = t.alias;
        axis.parameter = t.parameter;
        axis.integral = spec->kind == pkg::ParamKind::Int;
        axis.values = sweep_values(t);
        if (axis.values.empty()) throw Error(ErrorKind::EmptySweep, "sweep " + target + " has no values", t.pos);
        if (axis.integral) {
            for (double v : axis.values) {
                if (v != std::floor(v)) {
                    throw Error(ErrorKind::NotNumericTarget, "sweep " + target + ": value " + format_number(v) +
                                                                 " is not integral for an int input", t.pos);
                }
            }
        }
        axes.push_back(std::move(axis));
    }

    std::size_t total = 1;
    for (const auto& a : axes) total *= a.values.size();

    std::vector<flow::AbstractWorkflow> out;
    out.reserve(total);
    std::vector<std::size_t> index(axes.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        flow::AbstractWorkflow w = awf;
        w.name = awf.name + "#" + std::to_string(n);
        for (std::size_t k = 0; k < axes.size(); ++k) {
            double v = axes[k].values[index[k]];
            Scalar lit = axes[k].integral ? Scalar(static_cast<std::int64_t>(v)) : Scalar(v);
            w.find(axes[k].step)->args[axes[k].parameter] = flow::Literal{lit};
        }
        out.push_back(std::move(w));
        // odometer: last task varies fastest
        for (std::size_t k = axes.size(); k-- > 0;) {
            if (++index[k] < axes[k].values.size()) break;
            index[k] = 0;
        }
    }
    return out;
}

}  // namespace clavir::vso
