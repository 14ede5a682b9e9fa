#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clavir/common.hpp"
#include "clavir/lexer.hpp"

namespace clavir::perf {

/// Expression tree for parametric performance models.
///
/// Precedence, loosest first: `+ -` (left), `* /` (left), unary `-`,
/// `^` (right). So `-a^2` is `-(a^2)` and `a^b^c` is `a^(b^c)`.
/// Functions: log (natural), sqrt, min, max.
struct Expr {
    enum class Kind { Number, Param, Resource, Neg, Add, Sub, Mul, Div, Pow, Call };

    Kind kind = Kind::Number;
    double value = 0.0;  // Number; always >= 0, negation is a Neg node
    std::string name;    // Param / Resource attribute / Call function
    std::vector<Expr> args;

    bool operator==(const Expr&) const = default;

    static Expr number(double v);
    static Expr param(std::string name);
    static Expr resource(std::string attr);
    static Expr neg(Expr operand);
    static Expr binary(Kind kind, Expr lhs, Expr rhs);
    static Expr call(std::string fn, std::vector<Expr> args);
};

bool is_binary(Expr::Kind kind);
/// Arity of a known function, or -1.
int function_arity(std::string_view fn);

/// Parses an expression from the stream, stopping at the first token that
/// cannot continue it.
Expr parse_expr(text::TokenStream& ts);
Expr parse_expr(std::string_view source);

/// Canonical text with the minimum parentheses needed to reparse the same tree.
std::string print_expr(const Expr& expr);

/// Parameter names referenced (excluding `resource.` attributes).
std::set<std::string> param_names(const Expr& expr);
std::set<std::string> resource_names(const Expr& expr);

/// Number of additive terms at the top level (`2 + 0.5*n` has 2).
std::size_t term_count(const Expr& expr);

using Bindings = std::map<std::string, double, std::less<>>;

/// Flattened postfix program; evaluation runs on an explicit value stack.
class Program {
public:
    explicit Program(const Expr& expr);

    /// Throws UnboundIdentifier, DivisionByZero, NonFinite, or
    /// NegativeEstimate when the final result is below zero.
    double run(const Bindings& params, const Bindings& resource) const;

private:
    struct Instr {
        Expr::Kind op;
        double value;
        std::string name;
        std::size_t argc;
    };
    std::vector<Instr> code_;
};

/// Estimated seconds; see Program::run for the error contract.
double eval_perf(const Expr& expr, const Bindings& params, const Bindings& resource);

}  // namespace clavir::perf
