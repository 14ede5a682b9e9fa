// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "clavir/executor.hpp"
#include "clavir/planner.hpp"
#include "oracles.hpp"

using namespace clavir;
using testkit::Rng;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

Outcome round_trips() {
    Outcome o;
    auto t0 = Clock::now();
    Rng rng(101);
    const int n = 200;
    for (int i = 0; i < n && o.ok; ++i) {
        auto k = testkit::random_kb(rng);
        auto kb_back = kb::parse_kb(kb::print_kb(k));
        if (kb_back.nodes() != k.nodes() || kb_back.links() != k.links()) o.fail("kb mismatch");
        auto d = testkit::random_package(rng, testkit::numbered("p", i));
        if (pkg::parse_package(pkg::print_package(d)) != d) o.fail("package mismatch");
        auto w = testkit::random_workflow(rng);
        if (flow::parse_workflow(flow::print_workflow(w)) != w) o.fail("workflow mismatch");
        auto v = testkit::random_vso_document(rng);
        if (vso::parse_vso(vso::print_vso(v)) != v) o.fail("vso mismatch");
    }
    double s = seconds_since(t0);
    if (s >= 10.0) o.fail(fmt("took %.2fs", s));
    if (o.ok) o.detail = fmt("4 x %.0f documents in %.3fs", n, s);
    return o;
}

Outcome hierarchy_oracle() {
    Outcome o;
    Rng rng(102);
    int checked = 0;
    for (int i = 0; i < 100 && o.ok; ++i) {
        auto k = testkit::random_kb(rng, 20, 0.35);
        for (const auto& [id, node] : k.nodes()) {
            if (node.level != kb::kObjectLevel) continue;
            std::vector<std::tuple<std::string, std::string, std::string>> got;
            for (const auto& c : k.resolve_chain(id)) got.emplace_back(c.model, c.method, c.package);
            std::sort(got.begin(), got.end());
            if (got != testkit::brute_chains(k, id)) o.fail("chains differ for '" + id + "'");
            ++checked;
        }
    }
    if (o.ok) o.detail = fmt("100 KBs, %.0f objects", checked);
    return o;
}

Outcome translation_counts() {
    Outcome o;
    Rng rng(103);
    const int n = 100;
    for (int i = 0; i < n && o.ok; ++i) {
        auto w = testkit::random_world(rng, 8);
        auto awf = vso::translate(w.sys, w.library, w.kb, w.packages);
        if (awf.steps.size() != w.sys.instances.size()) o.fail("step count");
        if (awf.edges().size() != w.sys.connections.size()) o.fail("edge count");
        for (const auto& d : flow::validate_workflow(awf, w.packages)) {
            if (d.severity == Severity::Error) o.fail("diagnostic " + d.code);
        }
    }
    if (o.ok) o.detail = fmt("%.0f systems", n);
    return o;
}

Outcome perf_oracle() {
    Outcome o;
    Rng rng(104);
    std::vector<std::string> params{"n", "grid", "hours"};
    std::vector<std::string> res{"speed", "cores"};
    int values = 0;
    const int n = 500;
    for (int i = 0; i < n && o.ok; ++i) {
        auto e = testkit::random_expr(rng, 6, params, res);
        perf::Bindings p{{"n", testkit::uniform_real(rng, 0.5, 50)},
                         {"grid", testkit::uniform_real(rng, 0.1, 10)},
                         {"hours", testkit::uniform_real(rng, 1, 240)}};
        perf::Bindings r{{"speed", testkit::uniform_real(rng, 0.5, 8)}, {"cores", 4.0}};
        auto ref = testkit::reference_eval(e, p, r);
        try {
            double v = perf::eval_perf(e, p, r);
            if (!ref.value) {
                o.fail("library accepted " + perf::print_expr(e));
            } else if (std::abs(v - *ref.value) > 1e-9 * std::max(1.0, std::abs(*ref.value))) {
                o.fail("value differs for " + perf::print_expr(e));
            }
            ++values;
        } catch (const Error& err) {
            if (!ref.error || *ref.error != err.kind()) o.fail("error differs for " + perf::print_expr(e));
        }
    }
    if (o.ok) o.detail = fmt("%.0f trees, %.0f finite values", n, values);
    return o;
}

// Greedy puts the short step on the fast machine and queues the long one
// behind it; the optimum splits them.
Outcome greedy_fixture_gap() {
    Outcome o;
    testkit::SchedInstance inst;
    inst.packages.emplace("k", testkit::work_package("k"));
    inst.resources.emplace("slow", plan::Resource{"slow", 0.5, 0.0, 1});
    inst.resources.emplace("fast", plan::Resource{"fast", 2.0, 0.0, 1});
    inst.services.emplace("k@fast", plan::ServiceEntry{"k@fast", "k", "fast", "sim:f"});
    inst.services.emplace("k@slow", plan::ServiceEntry{"k@slow", "k", "slow", "sim:s"});
    inst.awf = flow::parse_workflow("workflow \"w\" { step t0 = k(work: 1.5) step t1 = k(work: 8.0) }");
    double g = plan::plan(inst.awf, inst.services, inst.resources, inst.packages).makespan;
    double b = plan::optimal_plan_bruteforce(inst.awf, inst.services, inst.resources, inst.packages).makespan;
    if (!(b < g)) o.fail(fmt("fixture gap missing: greedy %g, optimal %g", g, b));
    o.detail = fmt("fixture greedy %g vs optimal %g", g, b);
    return o;
}

Outcome scheduling_sandwich() {
    Outcome o;
    auto t0 = Clock::now();
    Rng rng(105);
    const int n = 200;
    int strict = 0;
    for (int i = 0; i < n && o.ok; ++i) {
        auto inst = testkit::random_sched_instance(rng, 5, 3);
        auto g = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        auto b = plan::optimal_plan_bruteforce(inst.awf, inst.services, inst.resources, inst.packages);
        double serial = testkit::serial_fastest_bound(inst);
        if (!(b.makespan <= g.makespan)) o.fail(fmt("bruteforce %g > greedy %g", b.makespan, g.makespan));
        if (!(g.makespan <= serial + 1e-9)) o.fail(fmt("greedy %g > serial %g", g.makespan, serial));
        if (!plan::check_plan(g, inst.awf, inst.services, inst.resources).empty()) o.fail("greedy plan infeasible");
        if (!plan::check_plan(b, inst.awf, inst.services, inst.resources).empty()) o.fail("optimal plan infeasible");
        if (b.makespan < g.makespan) ++strict;
    }
    auto fixture = greedy_fixture_gap();
    if (!fixture.ok) o.fail(fixture.detail);
    double s = seconds_since(t0);
    if (s >= 60.0) o.fail(fmt("took %.2fs", s));
    if (o.ok) {
        o.detail = fmt("%.0f instances, %.0f random strict gaps, ", n, strict) + fixture.detail + fmt(", %.3fs", s);
    }
    return o;
}

Outcome execution_exactness() {
    Outcome o;
    Rng rng(106);
    const int n = 200;
    for (int i = 0; i < n && o.ok; ++i) {
        auto inst = testkit::random_sched_instance(rng, 10, 3);
        auto p = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        auto t = exec::execute_simulated(p, inst.awf, inst.packages, inst.services, inst.resources, 0.0, i);
        if (t.makespan != p.makespan) o.fail(fmt("trace %.17g vs plan %.17g", t.makespan, p.makespan));
        if (!exec::verify_trace(t, inst.awf, p).empty()) o.fail("verify_trace rejected a trace");
    }
    if (o.ok) o.detail = fmt("%.0f instances, exact equality", n);
    return o;
}

Outcome noise_bound() {
    Outcome o;
    Rng rng(107);
    const int n = 100;
    const double noise = 0.2;
    for (int i = 0; i < n && o.ok; ++i) {
        auto inst = testkit::random_sched_instance(rng, 10, 3);
        auto p = plan::plan(inst.awf, inst.services, inst.resources, inst.packages);
        auto t = exec::execute_simulated(p, inst.awf, inst.packages, inst.services, inst.resources, noise, 42);
        double lo = exec::execute_scaled(p, inst.awf, inst.services, inst.resources, 1.0 - noise).makespan;
        double hi = exec::execute_scaled(p, inst.awf, inst.services, inst.resources, 1.0 + noise).makespan;
        if (t.makespan < lo || t.makespan > hi) o.fail(fmt("makespan %g outside bounds (lo %g)", t.makespan, lo));
        if (!exec::verify_trace(t, inst.awf, p).empty()) o.fail("verify_trace rejected a noisy trace");
    }
    if (o.ok) o.detail = fmt("%.0f instances at noise %.1f", n, noise);
    return o;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome end_to_end() {
    Outcome o;
    fs::path dir = fs::temp_directory_path() / ("clavir-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::copy(CLAVIR_SAMPLE_DIR, dir, fs::copy_options::recursive);
    fs::create_directories(dir / "out");
    std::string cli = shell_quote(CLAVIR_CLI_PATH);
    auto run = [&](const std::string& args) {
        std::string cmd = "cd " + shell_quote(dir.string()) + " && " + cli + " " + args + " > /dev/null 2>&1";
        int rc = std::system(cmd.c_str());
        if (rc != 0) o.fail("exit status " + std::to_string(rc) + " for: " + args);
    };

    auto t0 = Clock::now();
    run("translate flood.vso -o out/flood.flow");
    for (int i = 0; i < 3 && o.ok; ++i) {
        std::string stem = "out/flood#" + std::to_string(i);
        run("plan " + shell_quote(stem + ".flow") + " -o " + shell_quote(stem + ".plan.json"));
        run("run " + shell_quote(stem + ".flow") + " --plan " + shell_quote(stem + ".plan.json") + " --backend sim --trace " +
            shell_quote(stem + ".trace"));
    }
    double s = seconds_since(t0);

    int verified = 0;
    for (int i = 0; i < 3 && o.ok; ++i) {
        fs::path stem = dir / "out" / ("flood#" + std::to_string(i));
        if (!fs::exists(stem.string() + ".trace")) {
            o.fail("missing trace " + stem.string());
            break;
        }
        auto awf = flow::parse_workflow(slurp(stem.string() + ".flow"));
        auto p = plan::plan_from_json(nlohmann::json::parse(slurp(stem.string() + ".plan.json")));
        auto t = testkit::parse_trace_log(awf.name, slurp(stem.string() + ".trace"));
        if (!exec::verify_trace(t, awf, p).empty()) o.fail("trace " + std::to_string(i) + " failed verification");
        if (t.makespan != p.makespan) o.fail("trace makespan differs from plan");
        ++verified;
    }
    if (fs::exists(dir / "out" / "flood#3.flow")) o.fail("more than 3 workflows");
    if (s >= 5.0) o.fail(fmt("took %.2fs", s));
    fs::remove_all(dir);
    if (o.ok) o.detail = fmt("%.0f traces verified, %.3fs", verified, s);
    return o;
}

Outcome comparison_invariance() {
    Outcome o;
    Rng rng(109);
    const int n = 60;
    for (int i = 0; i < n && o.ok; ++i) {
        std::ostringstream kb_text;
        kb_text << "concept obj level 1 \"O\"\nconcept mod level 2 \"M\"\nconcept meth level 3 \"M\"\n"
                << "link obj has_model mod\nlink mod implemented_by meth\n";
        pkg::PackageMap packages;
        int npkg = testkit::uniform_int(rng, 1, 5);
        for (int k = 0; k < npkg; ++k) {
            std::string c = testkit::numbered("c", k);
            kb_text << "concept " << c << " level 4 \"P\" { accuracy_rank = " << testkit::uniform_int(rng, 1, 5) << " }\n"
                    << "link meth realized_in " << c << "\n";
            std::string src = "package \"" + testkit::numbered("p", k) + "\" version \"1\" { concept \"" + c +
                              "\" input n : int default " + std::to_string(testkit::uniform_int(rng, 1, 20)) +
                              " output o : file format \"b\" perf time_s = n * " +
                              std::to_string(testkit::uniform_int(rng, 1, 9)) + " / resource.speed }";
            auto d = pkg::parse_package(src);
            packages.emplace(d.name, std::move(d));
        }
        auto kb = kb::parse_kb(kb_text.str());
        plan::ResourceMap resources;
        int nres = testkit::uniform_int(rng, 1, 3);
        for (int r = 0; r < nres; ++r) {
            std::string id = testkit::numbered("r", r);
            resources.emplace(id, plan::Resource{id, testkit::pick(rng, std::vector<double>{0.5, 1.0, 2.0, 4.0}),
                                                 testkit::uniform_int(rng, 0, 40) / 4.0, 1});
        }
        plan::ServiceMap services;
        for (int k = 0; k < npkg; ++k) {
            std::string id = testkit::numbered("p", k) + "@" + testkit::numbered("r", testkit::uniform_int(rng, 0, nres - 1));
            services.emplace(id, plan::ServiceEntry{id, testkit::numbered("p", k), id.substr(id.find('@') + 1), "sim:x"});
        }
        plan::Weights w{testkit::uniform_int(rng, 0, 4) / 2.0, testkit::uniform_int(rng, 1, 4) / 2.0,
                        testkit::uniform_int(rng, 0, 4) / 2.0};
        auto order = [&](const plan::ResourceMap& res) {
            std::vector<std::string> names;
            for (const auto& s : plan::compare_solutions("meth", kb, packages, services, res, {}, w)) names.push_back(s.package);
            return names;
        };
        auto before = order(resources);
        auto scaled = resources;
        for (auto& [id, r] : scaled) r.cost_per_hour *= 7.0;
        if (order(scaled) != before) o.fail("ordering changed on registry " + std::to_string(i));
    }
    if (o.ok) o.detail = fmt("%.0f registries", n);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> criteria{
        {"DSL round-trips", round_trips},
        {"Hierarchy oracle", hierarchy_oracle},
        {"Translation counts", translation_counts},
        {"Perf-model oracle", perf_oracle},
        {"Scheduling sandwich", scheduling_sandwich},
        {"Execution exactness", execution_exactness},
        {"Noise bound", noise_bound},
        {"End-to-end pipeline", end_to_end},
        {"Comparison invariance", comparison_invariance},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        if (!o.ok) ++failed;
        std::cout << (o.ok ? "[PASS] " : "[FAIL] ") << (i + 1) << ". " << criteria[i].name << " (" << o.detail << ")\n";
    }
    return failed == 0 ? 0 : 1;
}
