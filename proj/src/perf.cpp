#include "clavir/perf.hpp"

#include <cmath>

namespace clavir::perf {

using text::Tok;
using Kind = Expr::Kind;

Expr Expr::number(double v) {
    Expr e;
    e.kind = Kind::Number;
    e.value = v;
    return e;
}

Expr Expr::param(std::string name) {
    Expr e;
    e.kind = Kind::Param;
    e.name = std::move(name);
    return e;
}

Expr Expr::resource(std::string attr) {
    Expr e;
    e.kind = Kind::Resource;
    e.name = std::move(attr);
    return e;
}

Expr Expr::neg(Expr operand) {
    Expr e;
    e.kind = Kind::Neg;
    e.args.push_back(std::move(operand));
    return e;
}

Expr Expr::binary(Kind kind, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = kind;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
}

Expr Expr::call(std::string fn, std::vector<Expr> args) {
    Expr e;
    e.kind = Kind::Call;
    e.name = std::move(fn);
    e.args = std::move(args);
    return e;
}

bool is_binary(Kind kind) {
    return kind == Kind::Add || kind == Kind::Sub || kind == Kind::Mul || kind == Kind::Div || kind == Kind::Pow;
}

int function_arity(std::string_view fn) {
    if (fn == "log" || fn == "sqrt") return 1;
    if (fn == "min" || fn == "max") return 2;
    return -1;
}

namespace {

Expr parse_additive(text::TokenStream& ts);

Expr parse_primary(text::TokenStream& ts) {
    const text::Token& tok = ts.peek();
    if (tok.kind == Tok::Number) return Expr::number(ts.next().number);
    if (ts.accept(Tok::LParen)) {
        Expr inner = parse_additive(ts);
        ts.expect(Tok::RParen);
        return inner;
    }
    if (tok.kind == Tok::Ident) {
        text::Token id = ts.next();
        if (id.text == "resource" && ts.accept(Tok::Dot)) {
            return Expr::resource(ts.expect_ident("resource attribute"));
        }
        if (ts.accept(Tok::LParen)) {
            int arity = function_arity(id.text);
            if (arity < 0) ts.fail_at(id.pos, ErrorKind::ParseError, "unknown function '" + id.text + "'");
            std::vector<Expr> args;
            if (!ts.at(Tok::RParen)) {
                args.push_back(parse_additive(ts));
                while (ts.accept(Tok::Comma)) args.push_back(parse_additive(ts));
            }
            ts.expect(Tok::RParen, "')' or ','");
            if (static_cast<int>(args.size()) != arity) {
                ts.fail_at(id.pos, ErrorKind::ParseError,
                           id.text + " takes " + std::to_string(arity) + " argument(s), got " +
                               std::to_string(args.size()));
            }
            return Expr::call(id.text, std::move(args));
        }
        return Expr::param(id.text);
    }
    ts.fail("number, identifier or '('");
}

Expr parse_power(text::TokenStream& ts) {
    Expr base = parse_primary(ts);
    if (ts.accept(Tok::Caret)) {
        // exponent may itself carry a unary minus: 2^-1
        Expr exponent = ts.accept(Tok::Minus) ? Expr::neg(parse_power(ts)) : parse_power(ts);
        return Expr::binary(Kind::Pow, std::move(base), std::move(exponent));
    }
    return base;
}

Expr parse_unary(text::TokenStream& ts) {
    if (ts.accept(Tok::Minus)) return Expr::neg(parse_unary(ts));
    return parse_power(ts);
}

Expr parse_multiplicative(text::TokenStream& ts) {
    Expr lhs = parse_unary(ts);
    for (;;) {
        if (ts.accept(Tok::Star)) {
            lhs = Expr::binary(Kind::Mul, std::move(lhs), parse_unary(ts));
        } else if (ts.accept(Tok::Slash)) {
            lhs = Expr::binary(Kind::Div, std::move(lhs), parse_unary(ts));
        } else {
            return lhs;
        }
    }
}

Expr parse_additive(text::TokenStream& ts) {
    Expr lhs = parse_multiplicative(ts);
    for (;;) {
        if (ts.accept(Tok::Plus)) {
            lhs = Expr::binary(Kind::Add, std::move(lhs), parse_multiplicative(ts));
        } else if (ts.accept(Tok::Minus)) {
            lhs = Expr::binary(Kind::Sub, std::move(lhs), parse_multiplicative(ts));
        } else {
            return lhs;
        }
    }
}

// Binding strength used by the printer.
int precedence(const Expr& e) {
    switch (e.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
    }
}

std::string_view op_text(Kind kind) {
    switch (kind) {
    case Kind::Add: return " + ";
    case Kind::Sub: return " - ";
    case Kind::Mul: return " * ";
    case Kind::Div: return " / ";
    case Kind::Pow: return " ^ ";
    default: return "";
    }
}

void print_into(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool wrap, std::string& out) {
    if (wrap) out += '(';
    print_into(e, out);
    if (wrap) out += ')';
}

void print_into(const Expr& e, std::string& out) {
    switch (e.kind) {
    case Kind::Number: out += format_number(e.value); return;
    case Kind::Param: out += e.name; return;
    case Kind::Resource: out += "resource." + e.name; return;
    case Kind::Neg:
        out += '-';
        // -(-x) prints as "-(-x)"; "--x" would not lex back
        print_wrapped(e.args[0], precedence(e.args[0]) < 3 || e.args[0].kind == Kind::Neg, out);
        return;
    case Kind::Call:
        out += e.name + "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) out += ", ";
            print_into(e.args[i], out);
        }
        out += ')';
        return;
    default: break;
    }
    int p = precedence(e);
    const Expr& lhs = e.args[0];
    const Expr& rhs = e.args[1];
    if (e.kind == Kind::Pow) {
        // right-associative; the base must be atomic, the exponent may be
        // another power or a negation
        print_wrapped(lhs, precedence(lhs) <= p, out);
        out += op_text(e.kind);
        print_wrapped(rhs, precedence(rhs) < p && rhs.kind != Kind::Neg, out);
        return;
    }
    print_wrapped(lhs, precedence(lhs) < p, out);
    out += op_text(e.kind);
    print_wrapped(rhs, precedence(rhs) <= p, out);
}

void collect(const Expr& e, Kind kind, std::set<std::string>& out) {
    if (e.kind == kind) out.insert(e.name);
    for (const auto& a : e.args) collect(a, kind, out);
}

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

double checked(double v, const char* what) {
    if (!std::isfinite(v)) fail(ErrorKind::NonFinite, std::string(what) + " produced a non-finite value");
    return v;
}

void emit(const Expr& e, std::vector<Expr>& order) {
    for (const auto& a : e.args) emit(a, order);
    Expr node = e;
    node.args.clear();
    node.value = e.kind == Kind::Call ? static_cast<double>(e.args.size()) : e.value;
    order.push_back(std::move(node));
}

}  // namespace

Expr parse_expr(text::TokenStream& ts) { return parse_additive(ts); }

Expr parse_expr(std::string_view source) {
    text::TokenStream ts(source);
    Expr e = parse_additive(ts);
    if (!ts.at(Tok::End)) ts.fail("operator or end of expression");
    return e;
}

std::string print_expr(const Expr& expr) {
    std::string out;
    print_into(expr, out);
    return out;
}

std::set<std::string> param_names(const Expr& expr) {
    std::set<std::string> out;
    collect(expr, Kind::Param, out);
    return out;
}

std::set<std::string> resource_names(const Expr& expr) {
    std::set<std::string> out;
    collect(expr, Kind::Resource, out);
    return out;
}

std::size_t term_count(const Expr& expr) {
    if (expr.kind == Kind::Add || expr.kind == Kind::Sub) return term_count(expr.args[0]) + 1;
    return 1;
}

Program::Program(const Expr& expr) {
    std::vector<Expr> order;
    emit(expr, order);
    code_.reserve(order.size());
    for (auto& n : order) {
        code_.push_back(Instr{n.kind, n.value, std::move(n.name),
                              n.kind == Kind::Call ? static_cast<std::size_t>(n.value) : 0});
    }
}

double Program::run(const Bindings& params, const Bindings& resource) const {
    std::vector<double> stack;
    stack.reserve(code_.size());
    auto pop = [&stack] {
        double v = stack.back();
        stack.pop_back();
        return v;
    };
    for (const Instr& in : code_) {
        switch (in.op) {
        case Kind::Number: stack.push_back(in.value); break;
        case Kind::Param: {
            auto it = params.find(in.name);
            if (it == params.end()) fail(ErrorKind::UnboundIdentifier, "unbound parameter '" + in.name + "'");
            stack.push_back(checked(it->second, "parameter"));
            break;
        }
        case Kind::Resource: {
            auto it = resource.find(in.name);
            if (it == resource.end()) {
                fail(ErrorKind::UnboundIdentifier, "unbound identifier 'resource." + in.name + "'");
            }
            stack.push_back(checked(it->second, "resource attribute"));
            break;
        }
        case Kind::Neg: stack.back() = -stack.back(); break;
        case Kind::Add: {
            double r = pop();
            stack.back() = checked(stack.back() + r, "addition");
            break;
        }
        case Kind::Sub: {
            double r = pop();
            stack.back() = checked(stack.back() - r, "subtraction");
            break;
        }
        case Kind::Mul: {
            double r = pop();
            stack.back() = checked(stack.back() * r, "multiplication");
            break;
        }
        case Kind::Div: {
            double r = pop();
            if (r == 0.0) fail(ErrorKind::DivisionByZero, "division by zero");
            stack.back() = checked(stack.back() / r, "division");
            break;
        }
        case Kind::Pow: {
            double r = pop();
            stack.back() = checked(std::pow(stack.back(), r), "power");
            break;
        }
        case Kind::Call: {
            if (in.name == "log") {
                double x = stack.back();
                if (!(x > 0.0)) fail(ErrorKind::NonFinite, "log of non-positive argument");
                stack.back() = checked(std::log(x), "log");
            } else if (in.name == "sqrt") {
                double x = stack.back();
                if (x < 0.0) fail(ErrorKind::NonFinite, "sqrt of negative argument");
                stack.back() = std::sqrt(x);
            } else if (in.name == "min") {
                double r = pop();
                stack.back() = std::min(stack.back(), r);
            } else if (in.name == "max") {
                double r = pop();
                stack.back() = std::max(stack.back(), r);
            } else {
                fail(ErrorKind::InvalidArgument, "unknown function '" + in.name + "'");
            }
            break;
        }
        }
    }
    double result = stack.back();
    if (result < 0.0) {
        fail(ErrorKind::NegativeEstimate, "performance estimate is negative (" + format_number(result) + " s)");
    }
    return result;
}

double eval_perf(const Expr& expr, const Bindings& params, const Bindings& resource) {
    return Program(expr).run(params, resource);
}

}  // namespace clavir::perf
