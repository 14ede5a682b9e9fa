#include <gtest/gtest.h>

#include "clavir/executor.hpp"
#include "clavir/planner.hpp"
#include "oracles.hpp"

using namespace clavir;
using testkit::Rng;

namespace {

constexpr int kTrials = 200;

std::vector<std::tuple<std::string, std::string, std::string>> as_tuples(const std::vector<kb::Chain>& chains) {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& c : chains) out.emplace_back(c.model, c.method, c.package);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(RoundTrip, KnowledgeBase) {
    Rng rng(1);
    for (int i = 0; i < kTrials; ++i) {
        auto k = testkit::random_kb(rng);
        std::string text = kb::print_kb(k);
        auto back = kb::parse_kb(text);
        EXPECT_EQ(kb::print_kb(back), text);
        EXPECT_EQ(back.nodes(), k.nodes());
    }
}

TEST(RoundTrip, Package) {
    Rng rng(2);
    for (int i = 0; i < kTrials; ++i) {
        auto d = testkit::random_package(rng, testkit::numbered("p", i));
        std::string text = pkg::print_package(d);
        auto back = pkg::parse_package(text);
        EXPECT_EQ(back, d) << text;
        EXPECT_EQ(pkg::print_package(back), text);
    }
}

TEST(RoundTrip, Workflow) {
    Rng rng(3);
    for (int i = 0; i < kTrials; ++i) {
        auto w = testkit::random_workflow(rng);
        std::string text = flow::print_workflow(w);
        auto back = flow::parse_workflow(text);
        EXPECT_EQ(back, w) << text;
        EXPECT_EQ(flow::print_workflow(back), text);
    }
}

TEST(RoundTrip, Vso) {
    Rng rng(4);
    for (int i = 0; i < kTrials; ++i) {
        auto doc = testkit::random_vso_document(rng);
        std::string text = vso::print_vso(doc);
        auto back = vso::parse_vso(text);
        EXPECT_EQ(back, doc) << text;
        EXPECT_EQ(vso::print_vso(back), text);
    }
}

TEST(RoundTrip, PerfExpression) {
    Rng rng(5);
    std::vector<std::string> params{"n", "grid", "hours"};
    std::vector<std::string> res{"speed", "cores"};
    for (int i = 0; i < kTrials; ++i) {
        auto e = testkit::random_expr(rng, 4, params, res);
        std::string text = perf::print_expr(e);
        auto back = perf::parse_expr(text);
        EXPECT_EQ(perf::print_expr(back), text);
        perf::Bindings p{{"n", 3.0}, {"grid", 0.5}, {"hours", 12.0}};
        perf::Bindings r{{"speed", 2.0}, {"cores", 8.0}};
        auto a = testkit::reference_eval(e, p, r);
        auto b = testkit::reference_eval(back, p, r);
        EXPECT_EQ(a.error, b.error) << text;
        if (a.value && b.value) EXPECT_EQ(*a.value, *b.value) << text;
    }
}

TEST(Chains, MatchExhaustiveScan) {
    Rng rng(6);
    for (int i = 0; i < kTrials; ++i) {
        auto k = testkit::random_kb(rng, 24, 0.35);
        for (const auto& [id, node] : k.nodes()) {
            if (node.level != kb::kObjectLevel) continue;
            EXPECT_EQ(as_tuples(k.resolve_chain(id)), testkit::brute_chains(k, id));
        }
    }
}

TEST(Translation, StepEdgeAndSweepCounts) {
    Rng rng(7);
    for (int i = 0; i < kTrials; ++i) {
        auto w = testkit::random_world(rng);
        auto awf = vso::translate(w.sys, w.library, w.kb, w.packages);
        EXPECT_EQ(awf.steps.size(), w.sys.instances.size());
        EXPECT_EQ(awf.edges().size(), w.sys.connections.size());
        std::size_t expected = 1;
        for (const auto& t : w.sys.tasks) expected *= vso::sweep_values(t).size();
        auto all = vso::expand_sweep(w.sys, awf, w.packages);
        ASSERT_EQ(all.size(), expected);
        std::set<std::string> names;
        for (const auto& v : all) {
            names.insert(v.name);
            EXPECT_EQ(v.steps.size(), awf.steps.size());
            EXPECT_EQ(v.edges(), awf.edges());
        }
        EXPECT_EQ(names.size(), expected);
    }
}

TEST(Planning, FeasibleAndSandwiched) {
    Rng rng(8);
    for (int i = 0; i < kTrials; ++i) {
        auto inst = testkit::random_sched_instance(rng, 6, 3);
        auto greedy = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        EXPECT_TRUE(plan::check_plan(greedy, inst.awf, inst.services, inst.resources).empty());
        EXPECT_LE(greedy.makespan, testkit::serial_fastest_bound(inst) + 1e-9);
        auto best = plan::optimal_plan_bruteforce(inst.awf, inst.services, inst.resources, inst.packages);
        EXPECT_TRUE(plan::check_plan(best, inst.awf, inst.services, inst.resources).empty());
        EXPECT_LE(best.makespan, greedy.makespan);
        for (const auto& [id, a] : greedy.assignments) EXPECT_EQ(a.est_finish, a.est_start + a.duration);
    }
}

TEST(Planning, CostDoesNotChangeSchedule) {
    Rng rng(9);
    for (int i = 0; i < kTrials; ++i) {
        auto inst = testkit::random_sched_instance(rng, 8, 3);
        auto a = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        for (auto& [id, r] : inst.resources) r.cost_per_hour *= 7.0;
        EXPECT_EQ(plan::plan(inst.awf, inst.services, inst.resources, inst.packages), a);
    }
}

TEST(Planning, Deterministic) {
    Rng rng(10);
    for (int i = 0; i < 50; ++i) {
        auto inst = testkit::random_sched_instance(rng, 10, 3);
        auto a = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        EXPECT_EQ(plan::plan(inst.awf, inst.services, inst.resources, inst.packages), a);
        auto shuffled = inst.awf;
        std::reverse(shuffled.steps.begin(), shuffled.steps.end());
        EXPECT_EQ(plan::plan(shuffled, inst.services, inst.resources, inst.packages), a);
    }
}

TEST(Simulation, ExactReplayWithoutNoise) {
    Rng rng(11);
    for (int i = 0; i < kTrials; ++i) {
        auto inst = testkit::random_sched_instance(rng, 8, 3);
        auto p = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        auto t = exec::execute_simulated(p, inst.awf, inst.packages, inst.services, inst.resources, 0.0, 1);
        EXPECT_EQ(t.makespan, p.makespan);
        EXPECT_TRUE(exec::verify_trace(t, inst.awf, p).empty());
        EXPECT_TRUE(exec::check_capacity(t, inst.services, inst.resources).empty());
        for (const auto& e : t.events) {
            const auto& a = p.assignments.at(e.step);
            EXPECT_EQ(e.time, e.kind == exec::EventKind::Start ? a.est_start : a.est_finish);
        }
    }
}

TEST(Simulation, NoisyRunsStaySoundAndBounded) {
    Rng rng(12);
    for (int i = 0; i < kTrials; ++i) {
        auto inst = testkit::random_sched_instance(rng, 8, 3);
        auto p = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        double noise = testkit::uniform_int(rng, 1, 9) / 10.0;
        auto seed = static_cast<std::uint64_t>(rng());
        auto t = exec::execute_simulated(p, inst.awf, inst.packages, inst.services, inst.resources, noise, seed);
        EXPECT_TRUE(exec::verify_trace(t, inst.awf, p).empty());
        EXPECT_TRUE(exec::check_capacity(t, inst.services, inst.resources).empty());
        double lo = exec::execute_scaled(p, inst.awf, inst.services, inst.resources, 1.0 - noise).makespan;
        double hi = exec::execute_scaled(p, inst.awf, inst.services, inst.resources, 1.0 + noise).makespan;
        EXPECT_LE(lo, t.makespan + 1e-9);
        EXPECT_LE(t.makespan, hi + 1e-9);
        EXPECT_EQ(exec::execute_simulated(p, inst.awf, inst.packages, inst.services, inst.resources, noise, seed), t);
    }
}

TEST(Simulation, TraceLogRoundTrip) {
    Rng rng(13);
    for (int i = 0; i < 50; ++i) {
        auto inst = testkit::random_sched_instance(rng, 8, 3);
        auto p = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        auto t = exec::execute_simulated(p, inst.awf, inst.packages, inst.services, inst.resources, 0.3, i);
        auto back = testkit::parse_trace_log(t.workflow, exec::trace_log(t));
        EXPECT_TRUE(exec::verify_trace(back, inst.awf, p).empty());
        EXPECT_NEAR(back.makespan, t.makespan, 1e-9 * std::max(1.0, t.makespan));
    }
}
