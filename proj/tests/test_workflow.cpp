#include <gtest/gtest.h>

#include "clavir/package.hpp"
#include "clavir/workflow.hpp"
#include "oracles.hpp"

using namespace clavir;

namespace {

pkg::PackageMap registry() {
    pkg::PackageMap m;
    for (const char* src : {
             "package \"p1\" version \"1\" { output out : file format \"csv\" }",
             "package \"p2\" version \"1\" { input x : file format \"csv\" output out : file format \"csv\" }",
             "package \"nc\" version \"1\" { output field : file format \"netcdf\" output extra : file format \"csv\" }",
             "package \"num\" version \"1\" { input n : int input g : float default 1.0 output r : file format \"csv\" }",
         }) {
        auto d = pkg::parse_package(src);
        std::string name = d.name;
        m.emplace(name, std::move(d));
    }
    return m;
}

std::vector<std::string> codes(const Diagnostics& diags, bool errors_only = true) {
    std::vector<std::string> out;
    for (const auto& d : diags) {
        if (!errors_only || d.severity == Severity::Error) out.push_back(d.code);
    }
    return out;
}

}  // namespace

TEST(ParseWorkflow, TwoSteps) {
    auto awf = flow::parse_workflow("workflow \"w\" { step a = p1() ; step b = p2(x: a.out) }");
    EXPECT_EQ(awf.name, "w");
    ASSERT_EQ(awf.steps.size(), 2u);
    auto edges = awf.edges();
    ASSERT_EQ(edges.size(), 1u);
    EXPECT_EQ(edges[0], (flow::Edge{"a", "out", "b", "x"}));
}

TEST(ParseWorkflow, DuplicateAndEmpty) {
    try {
        flow::parse_workflow("workflow \"w\" { step a = p1() step a = p1() }");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DuplicateStepId);
        EXPECT_EQ(e.pos().col, 35);
    }
    auto empty = flow::parse_workflow("workflow \"e\" {}");
    EXPECT_TRUE(empty.steps.empty());
    EXPECT_TRUE(empty.edges().empty());
    EXPECT_THROW(flow::parse_workflow("workflow \"w\" { step a = p1(x: 1, x: 2) }"), Error);
    EXPECT_THROW(flow::parse_workflow("workflow \"w\" { step a = p1(x 1) }"), Error);
}

TEST(PrintWorkflow, CanonicalForm) {
    auto awf = flow::parse_workflow("workflow \"w\"{step a=p1() step b=p2(y: \"s\", x: a.out, z: -2.5)}");
    EXPECT_EQ(flow::print_workflow(awf),
              "workflow \"w\" {\n"
              "  step a = p1()\n"
              "  step b = p2(x: a.out, y: \"s\", z: -2.5)\n"
              "}\n");
    EXPECT_EQ(flow::parse_workflow(flow::print_workflow(awf)), awf);
}

TEST(ValidateWorkflow, CleanFlow) {
    auto awf = flow::parse_workflow("workflow \"w\" { step a = p1() step b = p2(x: a.out) }");
    auto diags = flow::validate_workflow(awf, registry());
    EXPECT_TRUE(codes(diags).empty());
    EXPECT_EQ(codes(diags, false), std::vector<std::string>{"UnusedOutput"});
    EXPECT_EQ(diags[0].severity, Severity::Warning);
}

TEST(ValidateWorkflow, Violations) {
    auto reg = registry();
    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = ghost() }"), reg)),
              std::vector<std::string>{"UnknownPackage"});

    auto missing = flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = num() }"), reg);
    ASSERT_EQ(codes(missing), std::vector<std::string>{"MissingInput"});
    EXPECT_NE(missing[0].message.find("'n'"), std::string::npos);

    auto cyc = flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = p2(x: b.out) step b = p2(x: a.out) }"), reg);
    ASSERT_EQ(codes(cyc), std::vector<std::string>{"CycleDetected"});
    EXPECT_NE(cyc[0].message.find("a -> b -> a"), std::string::npos);

    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = num(n: 1.5) }"), reg)),
              std::vector<std::string>{"KindMismatch"});
    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = num(n: 1, q: 2) }"), reg)),
              std::vector<std::string>{"UnknownInput"});
    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step b = p2(x: zz.out) }"), reg)),
              std::vector<std::string>{"UnknownStep"});
    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = p1() step b = p2(x: a.nope) }"), reg)),
              std::vector<std::string>{"UnknownOutput"});
    // `out` is only an alias when the producer has exactly one output
    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = nc() step b = p2(x: a.out) }"), reg)),
              std::vector<std::string>{"UnknownOutput"});
    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = nc() step b = p2(x: a.field) }"), reg)),
              std::vector<std::string>{"FormatMismatch"});
    EXPECT_EQ(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = p1() step b = num(n: a.out) }"), reg)),
              std::vector<std::string>{"KindMismatch"});
    // int literal widens to float
    EXPECT_TRUE(codes(flow::validate_workflow(flow::parse_workflow("workflow \"w\" { step a = num(n: 1, g: 3) }"), reg)).empty());
}

TEST(TopoOrder, LexicographicKahn) {
    auto chain = flow::parse_workflow("workflow \"w\" { step c = p2(x: b.out) step b = p2(x: a.out) step a = p1() }");
    EXPECT_EQ(flow::topo_order(chain), (std::vector<std::string>{"a", "b", "c"}));
    auto diamond = flow::parse_workflow(
        "workflow \"w\" { step d = q(x: c.out, y: b.out) step c = q(x: a.out) step b = q(x: a.out) step a = q() }");
    EXPECT_EQ(flow::topo_order(diamond), (std::vector<std::string>{"a", "b", "c", "d"}));
    auto cyc = flow::parse_workflow("workflow \"w\" { step a = q(x: b.out) step b = q(x: a.out) }");
    EXPECT_THROW(flow::topo_order(cyc), Error);
    EXPECT_EQ(flow::find_cycle(cyc), (std::vector<std::string>{"a", "b"}));
    EXPECT_TRUE(flow::find_cycle(diamond).empty());
}

TEST(ToDot, SortedAndStable) {
    auto single = flow::parse_workflow("workflow \"s\" { step a = p1() }");
    EXPECT_EQ(flow::to_dot(single), "digraph \"s\" {\n  \"a\" [label=\"a : p1\"];\n}\n");
    auto diamond = flow::parse_workflow(
        "workflow \"d\" { step d = q(x: c.out, y: b.out) step c = q(x: a.out) step b = q(x: a.out) step a = q() }");
    std::string dot = flow::to_dot(diamond);
    EXPECT_EQ(dot, flow::to_dot(diamond));
    EXPECT_EQ(dot,
              "digraph \"d\" {\n"
              "  \"a\" [label=\"a : q\"];\n"
              "  \"b\" [label=\"b : q\"];\n"
              "  \"c\" [label=\"c : q\"];\n"
              "  \"d\" [label=\"d : q\"];\n"
              "  \"a\" -> \"b\" [label=\"out→x\"];\n"
              "  \"a\" -> \"c\" [label=\"out→x\"];\n"
              "  \"b\" -> \"d\" [label=\"out→y\"];\n"
              "  \"c\" -> \"d\" [label=\"out→x\"];\n"
              "}\n");
}

TEST(TopoOrder, RespectsEdgesOnRandomDags) {
    testkit::Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        auto awf = testkit::random_graph_workflow(rng, testkit::uniform_int(rng, 1, 30), 0.15, false);
        auto order = flow::topo_order(awf);
        ASSERT_EQ(order.size(), awf.steps.size());
        std::map<std::string, std::size_t> at;
        for (std::size_t k = 0; k < order.size(); ++k) at[order[k]] = k;
        EXPECT_EQ(at.size(), order.size());
        for (const auto& e : awf.edges()) EXPECT_LT(at.at(e.producer), at.at(e.consumer));
    }
}

TEST(ValidateWorkflow, CycleReportAgreesWithDfs) {
    testkit::Rng rng(6);
    int cyclic = 0;
    for (int i = 0; i < 200; ++i) {
        auto awf = testkit::random_graph_workflow(rng, testkit::uniform_int(rng, 1, 12), 0.2, true);
        bool reported = count_code(flow::validate_workflow(awf, {}), "CycleDetected") > 0;
        EXPECT_EQ(reported, testkit::dfs_has_cycle(awf));
        cyclic += reported;
    }
    EXPECT_GT(cyclic, 10);
    EXPECT_LT(cyclic, 190);
}
