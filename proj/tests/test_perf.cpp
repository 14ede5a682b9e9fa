#include <gtest/gtest.h>

#include "clavir/perf.hpp"
#include "oracles.hpp"

using namespace clavir;
using perf::Expr;
using K = perf::Expr::Kind;

namespace {

ErrorKind failure(const std::string& src, const perf::Bindings& p, const perf::Bindings& r = {}) {
    try {
        perf::eval_perf(perf::parse_expr(src), p, r);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << src << " did not fail";
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(EvalPerf, Arithmetic) {
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("2.0 + 0.5 * n"), {{"n", 4}}, {}), 4.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("c ^ 1.5 / resource.speed"), {{"c", 100}}, {{"speed", 10}}), 100.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("2 + 8 / resource.speed"), {}, {{"speed", 2}}), 6.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("max(1, min(3, 2)) + sqrt(16) + log(1)"), {}, {}), 6.0);
}

TEST(EvalPerf, Errors) {
    EXPECT_EQ(failure("n - 10", {{"n", 1}}), ErrorKind::NegativeEstimate);
    EXPECT_EQ(failure("1 / (n - 1)", {{"n", 1}}), ErrorKind::DivisionByZero);
    EXPECT_EQ(failure("log(0)", {}), ErrorKind::NonFinite);
    EXPECT_EQ(failure("log(0 - 1) + 5", {}), ErrorKind::NonFinite);
    EXPECT_EQ(failure("sqrt(0 - 4)", {}), ErrorKind::NonFinite);
    EXPECT_EQ(failure("10 ^ 400", {}), ErrorKind::NonFinite);
    EXPECT_EQ(failure("m + 1", {{"n", 1}}), ErrorKind::UnboundIdentifier);
    EXPECT_EQ(failure("resource.cores", {}, {{"speed", 1}}), ErrorKind::UnboundIdentifier);
}

TEST(Precedence, PowerBindsTightestAndIsRightAssociative) {
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("2 ^ 3 ^ 2"), {}, {}), 512.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("0 - 2 ^ 2 + 10"), {}, {}), 6.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("-2 ^ 2 + 10"), {}, {}), 6.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("2 ^ -1"), {}, {}), 0.5);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("8 / 4 / 2"), {}, {}), 1.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("10 - 4 - 3"), {}, {}), 3.0);
    EXPECT_DOUBLE_EQ(perf::eval_perf(perf::parse_expr("2 * (3 + 4)"), {}, {}), 14.0);
}

TEST(Structure, TermsAndNames) {
    auto e = perf::parse_expr("2.0 + 0.5 * n");
    EXPECT_EQ(perf::term_count(e), 2u);
    EXPECT_EQ(e.kind, K::Add);
    auto f = perf::parse_expr("a * b - resource.speed + c / resource.cost_per_hour");
    EXPECT_EQ(perf::term_count(f), 3u);
    EXPECT_EQ(perf::param_names(f), (std::set<std::string>{"a", "b", "c"}));
    EXPECT_EQ(perf::resource_names(f), (std::set<std::string>{"cost_per_hour", "speed"}));
}

TEST(Print, MinimalParentheses) {
    EXPECT_EQ(perf::print_expr(perf::parse_expr("(a + b) * c")), "(a + b) * c");
    EXPECT_EQ(perf::print_expr(perf::parse_expr("a + (b * c)")), "a + b * c");
    EXPECT_EQ(perf::print_expr(perf::parse_expr("a - (b - c)")), "a - (b - c)");
    EXPECT_EQ(perf::print_expr(perf::parse_expr("(a ^ b) ^ c")), "(a ^ b) ^ c");
    EXPECT_EQ(perf::print_expr(perf::parse_expr("a ^ (b ^ c)")), "a ^ b ^ c");
    EXPECT_EQ(perf::print_expr(perf::parse_expr("(-a) ^ 2")), "(-a) ^ 2");
    EXPECT_EQ(perf::print_expr(perf::parse_expr("- (a + 1)")), "-(a + 1)");
    EXPECT_EQ(perf::print_expr(perf::parse_expr("max(1,2)/ resource.speed")), "max(1, 2) / resource.speed");
}

TEST(Parse, Errors) {
    EXPECT_THROW(perf::parse_expr("1 +"), Error);
    EXPECT_THROW(perf::parse_expr("foo(1)"), Error);
    EXPECT_THROW(perf::parse_expr("min(1)"), Error);
    EXPECT_THROW(perf::parse_expr("resource."), Error);
    EXPECT_THROW(perf::parse_expr("1 2"), Error);
}

TEST(EvalPerf, MonotoneInSpeedForCanonicalShape) {
    auto e = perf::parse_expr("a + b / resource.speed");
    double prev = std::numeric_limits<double>::infinity();
    for (double speed : {0.25, 0.5, 1.0, 2.0, 8.0, 64.0}) {
        double v = perf::eval_perf(e, {{"a", 3.0}, {"b", 40.0}}, {{"speed", speed}});
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(EvalPerf, AgreesWithRecursiveOracleOnRandomTrees) {
    testkit::Rng rng(11);
    int compared = 0;
    for (int i = 0; i < 300; ++i) {
        Expr e = testkit::random_expr(rng, 6, {"a", "b"}, {"speed"});
        perf::Bindings p{{"a", testkit::uniform_int(rng, 0, 8) / 2.0}, {"b", 3.0}};
        perf::Bindings r{{"speed", 2.0}};
        auto want = testkit::reference_eval(e, p, r);
        try {
            double got = perf::eval_perf(e, p, r);
            ASSERT_TRUE(want.value) << perf::print_expr(e);
            EXPECT_NEAR(got, *want.value, 1e-9 * std::max(1.0, std::abs(*want.value))) << perf::print_expr(e);
            ++compared;
        } catch (const Error& err) {
            ASSERT_TRUE(want.error) << perf::print_expr(e) << ": " << err.what();
            EXPECT_EQ(err.kind(), *want.error) << perf::print_expr(e);
        }
    }
    EXPECT_GT(compared, 50);
}
