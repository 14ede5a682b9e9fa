#include "clavir/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "clavir/executor.hpp"
#include "clavir/kb.hpp"
#include "clavir/package.hpp"
#include "clavir/planner.hpp"
#include "clavir/vso.hpp"
#include "clavir/workflow.hpp"

namespace fs = std::filesystem;

namespace clavir::cli {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        auto at = s.find(sep, start);
        parts.push_back(trim(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return parts;
}

template <typename T>
bool parse_exact(const std::string& text, T& value) {
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && end == text.data() + text.size();
}

double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    if (!parse_exact(text, v)) throw Error(ErrorKind::InvalidArgument, what + ": not a number: '" + text + "'");
    return v;
}

Scalar parse_value(const std::string& text) {
    std::int64_t i = 0;
    if (parse_exact(text, i)) return i;
    double d = 0.0;
    if (parse_exact(text, d)) return d;
    if (text == "true") return true;
    if (text == "false") return false;
    return unquote(text);
}

}  // namespace

ProjectConfig parse_config(std::string_view text, const fs::path& base) {
    ProjectConfig cfg;
    auto resolve = [&](const std::string& v) { return fs::path(v).is_absolute() ? fs::path(v) : base / v; };
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = trim(line.substr(0, line.find('#')));
        if (body.empty() || body.front() == '[') continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ParseError, "expected 'key = value'", SourcePos{lineno, 1});
        }
        std::string key = trim(body.substr(0, eq));
        std::string value = unquote(trim(body.substr(eq + 1)));
        SourcePos pos{lineno, 1};
        try {
            if (key == "kb") {
                cfg.kb = resolve(value);
            } else if (key == "packages") {
                cfg.packages = resolve(value);
            } else if (key == "resources") {
                cfg.resources = resolve(value);
            } else if (key == "workdir") {
                cfg.workdir = resolve(value);
            } else if (key == "library") {
                cfg.library.clear();
                for (const auto& p : split(value, ',')) {
                    if (!p.empty()) cfg.library.push_back(resolve(p));
                }
            } else if (key == "noise") {
                cfg.noise = parse_double(value, "noise");
            } else if (key == "seed") {
                if (!parse_exact(value, cfg.seed)) throw Error(ErrorKind::InvalidArgument, "seed: not an unsigned integer");
            } else if (key == "max_parallel") {
                if (!parse_exact(value, cfg.max_parallel) || cfg.max_parallel < 1) {
                    throw Error(ErrorKind::InvalidArgument, "max_parallel: not a positive integer");
                }
            } else {
                throw Error(ErrorKind::ParseError, "unknown key '" + key + "'", pos);
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ParseError) throw;
            throw Error(ErrorKind::ParseError, e.detail(), pos);
        }
    }
    return cfg;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::WorkdirError:
    case ErrorKind::CommandSpawnError: return kExitEnvironment;
    default: return kExitDomain;
    }
}

namespace {

// An error raised while reading one input file.
struct FileError {
    fs::path file;
    Error error;
};

template <typename F>
auto in_file(const fs::path& file, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw FileError{file, e};
    }
}

Diagnostic as_diagnostic(const Error& e) {
    return Diagnostic{Severity::Error, std::string(to_string(e.kind())), e.detail(), e.pos()};
}

class Session {
public:
    Session(ProjectConfig cfg, std::ostream& out, std::ostream& err) : cfg_(std::move(cfg)), out_(out), err_(err) {}

    ProjectConfig& config() { return cfg_; }
    std::ostream& out() { return out_; }
    std::ostream& err() { return err_; }

    const kb::KnowledgeBase& kb() {
        if (!kb_) {
            if (!cfg_.kb) throw Error(ErrorKind::InvalidArgument, "no knowledge base configured (--kb or kb = ... in clavir.toml)");
            kb_ = in_file(*cfg_.kb, [&] { return kb::load_kb(*cfg_.kb); });
        }
        return *kb_;
    }

    const pkg::PackageMap& packages() {
        if (!packages_) {
            if (!cfg_.packages) {
                throw Error(ErrorKind::InvalidArgument, "no package directory configured (--packages or packages = ...)");
            }
            packages_ = pkg::load_package_dir(*cfg_.packages);
        }
        return *packages_;
    }

    const plan::ResourceBase& resources() {
        if (!resources_) {
            if (!cfg_.resources) {
                throw Error(ErrorKind::InvalidArgument, "no resource base configured (--resources or resources = ...)");
            }
            const auto& pkgs = packages();
            resources_ = in_file(*cfg_.resources, [&] { return plan::load_resources(*cfg_.resources, pkgs); });
            report(cfg_.resources->string(), resources_->diagnostics);
        }
        return *resources_;
    }

    /// Objects from the configured library, skipping `except` if it is part of it.
    vso::ObjectLibrary library(const std::optional<fs::path>& except = std::nullopt) {
        vso::ObjectLibrary lib;
        std::vector<fs::path> files;
        for (const auto& p : cfg_.library) {
            std::error_code ec;
            if (fs::is_directory(p, ec)) {
                std::vector<fs::path> found;
                for (const auto& entry : fs::directory_iterator(p)) {
                    if (entry.is_regular_file() && entry.path().extension() == ".vso") found.push_back(entry.path());
                }
                std::sort(found.begin(), found.end());
                files.insert(files.end(), found.begin(), found.end());
            } else {
                files.push_back(p);
            }
        }
        for (const auto& f : files) {
            std::error_code ec;
            if (except && fs::exists(f, ec) && fs::equivalent(f, *except, ec)) continue;
            auto doc = in_file(f, [&] { return vso::parse_vso(read_file(f)); });
            in_file(f, [&] { vso::add_objects(lib, doc.objects); });
        }
        return lib;
    }

    fs::path workdir() const { return cfg_.workdir.value_or(fs::path("clavir-work")); }

    /// Prints errors always and warnings when asked; returns true if any error.
    bool report(const std::string& file, const Diagnostics& diags, bool warnings = true) {
        for (const auto& d : diags) {
            if (d.severity == Severity::Error || warnings) err_ << format_diagnostic(file, d) << '\n';
        }
        return has_errors(diags);
    }

    void emit(const std::optional<fs::path>& path, const std::string& content) {
        if (!path) {
            out_ << content;
            return;
        }
        if (path->has_parent_path()) {
            std::error_code ec;
            fs::create_directories(path->parent_path(), ec);
        }
        write_file_atomic(*path, content);
    }

private:
    ProjectConfig cfg_;
    std::ostream& out_;
    std::ostream& err_;
    std::optional<kb::KnowledgeBase> kb_;
    std::optional<pkg::PackageMap> packages_;
    std::optional<plan::ResourceBase> resources_;
};

flow::AbstractWorkflow read_flow(const fs::path& file) {
    return in_file(file, [&] { return flow::parse_workflow(read_file(file)); });
}

// ---- lint ------------------------------------------------------------------

int rank_of(const fs::path& p) {
    auto ext = p.extension();
    if (ext == ".kb") return 0;
    if (ext == ".pkg") return 1;
    if (ext == ".vso") return 2;
    if (ext == ".flow") return 3;
    return 4;
}

int cmd_lint(Session& s, std::vector<fs::path> files, bool warnings) {
    std::stable_sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) { return rank_of(a) < rank_of(b); });

    std::optional<kb::KnowledgeBase> kb;
    pkg::PackageMap packages;
    bool have_packages = false;
    if (s.config().kb) {
        kb = s.kb();
    }
    if (s.config().packages) {
        packages = s.packages();
        have_packages = true;
    }
    vso::ObjectLibrary library = s.library();

    bool errors = false;
    bool environment = false;
    for (const auto& file : files) {
        std::string name = file.string();
        Diagnostics diags;
        try {
            std::string text = read_file(file);
            switch (rank_of(file)) {
            case 0: {
                kb::KnowledgeBase k = kb::parse_kb(text);
                diags = k.validate();
                kb = std::move(k);
                break;
            }
            case 1: {
                pkg::PackageDescriptor d = pkg::parse_package(text);
                if (kb) diags = pkg::validate_package(d, *kb);
                std::string pname = d.name;
                packages.insert_or_assign(pname, std::move(d));
                have_packages = true;
                break;
            }
            case 2: {
                vso::VsoDocument doc = vso::parse_vso(text);
                vso::ObjectLibrary lib = library;
                for (const auto& obj : doc.objects) lib.insert_or_assign(obj.name, obj);
                if (kb && have_packages) {
                    for (const auto& sys : doc.systems) {
                        auto more = vso::validate_system(sys, lib, *kb, packages);
                        diags.insert(diags.end(), more.begin(), more.end());
                    }
                }
                library = std::move(lib);
                break;
            }
            case 3: {
                flow::AbstractWorkflow awf = flow::parse_workflow(text);
                diags = flow::validate_workflow(awf, packages);
                if (!have_packages) {
                    std::erase_if(diags, [](const Diagnostic& d) { return d.code == "UnknownPackage"; });
                }
                break;
            }
            default:
                diags.push_back(make_error("UnknownFileType", "expected a .kb, .pkg, .vso or .flow file"));
            }
        } catch (const Error& e) {
            diags.push_back(as_diagnostic(e));
            if (exit_code_for(e.kind()) == kExitEnvironment) environment = true;
        }
        errors = s.report(name, diags, warnings) || errors;
    }
    if (environment) return kExitEnvironment;
    return errors ? kExitDomain : kExitOk;
}

// ---- translate ---------------------------------------------------------------

fs::path sibling(const fs::path& out, std::size_t index) {
    fs::path name = out.stem();
    name += "#" + std::to_string(index);
    name += out.extension();
    return out.parent_path() / name;
}

int cmd_translate(Session& s, const fs::path& file, const std::string& system_name,
                  const std::optional<fs::path>& out) {
    vso::VsoDocument doc = in_file(file, [&] { return vso::parse_vso(read_file(file)); });
    vso::ObjectLibrary library = s.library(file);
    in_file(file, [&] { vso::add_objects(library, doc.objects); });

    const vso::SystemDescription* sys = nullptr;
    if (system_name.empty()) {
        if (doc.systems.size() != 1) {
            throw FileError{file, Error(ErrorKind::InvalidArgument, std::to_string(doc.systems.size()) +
                                                                       " systems in file; choose one with --system")};
        }
        sys = &doc.systems.front();
    } else {
        for (const auto& candidate : doc.systems) {
            if (candidate.name == system_name) sys = &candidate;
        }
        if (!sys) throw FileError{file, Error(ErrorKind::InvalidArgument, "no system named '" + system_name + "'")};
    }

    const auto& kb = s.kb();
    const auto& packages = s.packages();
    if (s.report(file.string(), vso::validate_system(*sys, library, kb, packages), false)) return kExitDomain;

    flow::AbstractWorkflow awf = in_file(file, [&] { return vso::translate(*sys, library, kb, packages); });
    if (sys->tasks.empty()) {
        s.emit(out, flow::print_workflow(awf));
        if (out) s.out() << out->string() << '\n';
        return kExitOk;
    }
    auto variants = in_file(file, [&] { return vso::expand_sweep(*sys, awf, packages); });
    for (std::size_t i = 0; i < variants.size(); ++i) {
        std::string text = flow::print_workflow(variants[i]);
        if (out) {
            fs::path target = sibling(*out, i);
            s.emit(target, text);
            s.out() << target.string() << '\n';
        } else {
            s.out() << text;
        }
    }
    return kExitOk;
}

// ---- plan / run --------------------------------------------------------------

struct Planned {
    flow::AbstractWorkflow awf;
    plan::ExecutionPlan plan;
};

std::optional<Planned> make_plan(Session& s, const fs::path& file, const std::optional<fs::path>& plan_file,
                                 bool optimal) {
    Planned p{read_flow(file), {}};
    const auto& packages = s.packages();
    if (s.report(file.string(), flow::validate_workflow(p.awf, packages), false)) return std::nullopt;
    const auto& rb = s.resources();
    if (plan_file) {
        p.plan = in_file(*plan_file, [&] {
            try {
                return plan::plan_from_json(nlohmann::json::parse(read_file(*plan_file)));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::ParseError, e.what());
            }
        });
        if (s.report(plan_file->string(), plan::check_plan(p.plan, p.awf, rb.services, rb.resources))) return std::nullopt;
    } else {
        p.plan = in_file(file, [&] {
            return optimal ? plan::optimal_plan_bruteforce(p.awf, rb.services, rb.resources, packages)
                           : plan::plan(p.awf, rb.services, rb.resources, packages);
        });
    }
    return p;
}

int cmd_plan(Session& s, const fs::path& file, const std::optional<fs::path>& out, bool optimal) {
    auto p = make_plan(s, file, std::nullopt, optimal);
    if (!p) return kExitDomain;
    s.emit(out, plan::plan_to_json(p->plan).dump(2) + "\n");
    return kExitOk;
}

struct RunOptions {
    std::optional<fs::path> plan_file;
    std::string backend = "sim";
    double noise = 0.0;
    std::uint64_t seed = 0;
    int max_parallel = 4;
    std::optional<fs::path> trace_file;
    std::optional<fs::path> summary_file;
};

int cmd_run(Session& s, const fs::path& file, const RunOptions& opt) {
    auto p = make_plan(s, file, opt.plan_file, false);
    if (!p) return kExitDomain;
    const auto& rb = s.resources();
    const auto& packages = s.packages();

    exec::ExecutionTrace trace;
    Diagnostics issues;
    if (opt.backend == "sim") {
        trace = exec::execute_simulated(p->plan, p->awf, packages, rb.services, rb.resources, opt.noise, opt.seed);
        issues = exec::check_capacity(trace, rb.services, rb.resources);
    } else if (opt.backend == "local") {
        trace = exec::execute_local(p->plan, p->awf, packages, rb.services, s.workdir(), opt.max_parallel);
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown backend '" + opt.backend + "' (sim or local)");
    }
    auto verified = exec::verify_trace(trace, p->awf, p->plan);
    issues.insert(issues.end(), verified.begin(), verified.end());

    fs::path trace_path = opt.trace_file.value_or(s.workdir() / (p->awf.name + ".trace"));
    s.emit(trace_path, exec::trace_log(trace));
    if (opt.summary_file) s.emit(*opt.summary_file, exec::trace_summary(trace).dump(2) + "\n");

    if (s.report(trace_path.string(), issues)) return kExitDomain;
    if (trace.status == exec::Status::Failed) {
        for (const auto& e : trace.events) {
            if (e.kind == exec::EventKind::Fail) {
                s.err() << "clavir: step '" << e.step << "' failed on service '" << e.service << "' (log: "
                        << (s.workdir() / (e.step + ".log")).string() << ")\n";
            }
        }
        return kExitDomain;
    }
    s.out() << "makespan " << format_number(trace.makespan) << '\n';
    return kExitOk;
}

// ---- compare / form / render -------------------------------------------------

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int cmd_compare(Session& s, const std::string& method, const std::string& weights_text,
                const std::vector<std::string>& param_texts) {
    auto parts = split(weights_text, ',');
    if (parts.size() != 3) throw Error(ErrorKind::InvalidArgument, "--weights expects t,c,a");
    plan::Weights w{parse_double(parts[0], "time weight"), parse_double(parts[1], "cost weight"),
                    parse_double(parts[2], "accuracy weight")};
    std::map<std::string, Scalar> params;
    for (const auto& t : param_texts) {
        auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::InvalidArgument, "--param expects name=value, got '" + t + "'");
        params[trim(t.substr(0, eq))] = parse_value(trim(t.substr(eq + 1)));
    }
    const auto& rb = s.resources();
    auto ranked = plan::compare_solutions(method, s.kb(), s.packages(), rb.services, rb.resources, params, w);

    std::vector<std::array<std::string, 7>> rows;
    rows.push_back({"rank", "package", "service", "time_s", "cost", "accuracy", "score"});
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& r = ranked[i];
        rows.push_back({std::to_string(i + 1), r.package, r.service, fixed(r.time), fixed(r.cost), fixed(r.accuracy),
                        fixed(r.score)});
    }
    std::array<std::size_t, 7> width{};
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            line += row[c];
            if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
        }
        s.out() << line << '\n';
    }
    return kExitOk;
}

int cmd_form(Session& s, const std::string& target, const std::optional<fs::path>& out) {
    pkg::PackageDescriptor desc;
    fs::path as_path(target);
    std::error_code ec;
    if (as_path.extension() == ".pkg" && fs::is_regular_file(as_path, ec)) {
        desc = in_file(as_path, [&] { return pkg::load_package(as_path); });
    } else {
        const auto& packages = s.packages();
        auto it = packages.find(target);
        if (it == packages.end()) throw Error(ErrorKind::UnknownPackage, "no package named '" + target + "'");
        desc = it->second;
    }
    s.emit(out, pkg::form_schema(desc).dump(2) + "\n");
    return kExitOk;
}

int cmd_render(Session& s, const fs::path& file, const std::optional<fs::path>& out) {
    s.emit(out, flow::to_dot(read_flow(file)));
    return kExitOk;
}

std::optional<fs::path> opt_path(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return fs::path(text);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulation workflow toolkit: describe, translate, plan and run.", "clavir"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file, kb_flag, packages_flag, resources_flag, workdir_flag;
    std::vector<std::string> library_flag;
    app.add_option("--config", config_file, "project file (default: ./clavir.toml if present)");
    app.add_option("--kb", kb_flag, "knowledge base (.kb)");
    app.add_option("--packages", packages_flag, "directory of package descriptors (.pkg)");
    app.add_option("--resources", resources_flag, "resource base (JSON)");
    app.add_option("--library", library_flag, "object library (.vso file or directory); repeatable");
    app.add_option("--workdir", workdir_flag, "work directory for runs and default trace output");

    auto* lint = app.add_subcommand("lint", "check .kb/.pkg/.vso/.flow files");
    std::vector<std::string> lint_files;
    bool lint_warnings = false;
    lint->add_option("files", lint_files)->required();
    lint->add_flag("-W,--warnings", lint_warnings, "also print warnings");

    auto* translate = app.add_subcommand("translate", "system description to workflow(s)");
    std::string tr_file, tr_system, tr_out;
    translate->add_option("file", tr_file)->required();
    translate->add_option("-s,--system", tr_system, "system name when the file holds several");
    translate->add_option("-o,--output", tr_out, "output .flow; sweeps write <stem>#<i><ext>");

    auto* plan_cmd = app.add_subcommand("plan", "map workflow steps to services");
    std::string plan_file, plan_out;
    bool plan_optimal = false;
    plan_cmd->add_option("flow", plan_file)->required();
    plan_cmd->add_option("-o,--output", plan_out, "plan JSON");
    plan_cmd->add_flag("--optimal", plan_optimal, "exhaustive search (small workflows only)");

    auto* run = app.add_subcommand("run", "plan and execute a workflow");
    std::string run_file, run_plan, run_trace, run_summary;
    RunOptions run_opt;
    double run_noise = 0.0;
    std::uint64_t run_seed = 0;
    int run_parallel = 4;
    run->add_option("flow", run_file)->required();
    run->add_option("--plan", run_plan, "use this plan instead of planning");
    run->add_option("--backend", run_opt.backend, "sim or local")->check(CLI::IsMember({"sim", "local"}));
    auto* noise_opt = run->add_option("--noise", run_noise, "duration noise for sim, 0..0.99");
    auto* seed_opt = run->add_option("--seed", run_seed, "noise seed");
    auto* parallel_opt = run->add_option("--max-parallel", run_parallel, "concurrent local processes");
    run->add_option("-o,--trace", run_trace, "trace log (default <workdir>/<workflow>.trace)");
    run->add_option("--summary", run_summary, "JSON summary of the trace");

    auto* compare = app.add_subcommand("compare", "rank packages realizing a method");
    std::string cmp_method, cmp_weights = "1,0,0";
    std::vector<std::string> cmp_params;
    compare->add_option("method", cmp_method)->required();
    compare->add_option("--weights", cmp_weights, "time,cost,accuracy weights");
    compare->add_option("--param", cmp_params, "name=value used by performance models; repeatable");

    auto* form = app.add_subcommand("form", "input form schema for a package");
    std::string form_target, form_out;
    form->add_option("package", form_target, "package name or .pkg file")->required();
    form->add_option("-o,--output", form_out);

    auto* render = app.add_subcommand("render", "workflow as Graphviz DOT");
    std::string render_file, render_out;
    render->add_option("flow", render_file)->required();
    render->add_option("-o,--output", render_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitEnvironment;
    }

    try {
        ProjectConfig cfg;
        fs::path config_path = config_file.empty() ? fs::path(kConfigName) : fs::path(config_file);
        std::error_code ec;
        if (!config_file.empty() || fs::exists(config_path, ec)) {
            cfg = in_file(config_path, [&] { return parse_config(read_file(config_path), config_path.parent_path()); });
        }
        if (!kb_flag.empty()) cfg.kb = kb_flag;
        if (!packages_flag.empty()) cfg.packages = packages_flag;
        if (!resources_flag.empty()) cfg.resources = resources_flag;
        if (!workdir_flag.empty()) cfg.workdir = workdir_flag;
        if (!library_flag.empty()) cfg.library.assign(library_flag.begin(), library_flag.end());

        run_opt.noise = noise_opt->count() ? run_noise : cfg.noise;
        run_opt.seed = seed_opt->count() ? run_seed : cfg.seed;
        run_opt.max_parallel = parallel_opt->count() ? run_parallel : cfg.max_parallel;
        run_opt.plan_file = opt_path(run_plan);
        run_opt.trace_file = opt_path(run_trace);
        run_opt.summary_file = opt_path(run_summary);

        Session session(std::move(cfg), out, err);
        if (*lint) return cmd_lint(session, {lint_files.begin(), lint_files.end()}, lint_warnings);
        if (*translate) return cmd_translate(session, tr_file, tr_system, opt_path(tr_out));
        if (*plan_cmd) return cmd_plan(session, plan_file, opt_path(plan_out), plan_optimal);
        if (*run) return cmd_run(session, run_file, run_opt);
        if (*compare) return cmd_compare(session, cmp_method, cmp_weights, cmp_params);
        if (*form) return cmd_form(session, form_target, opt_path(form_out));
        if (*render) return cmd_render(session, render_file, opt_path(render_out));
        return kExitEnvironment;
    } catch (const FileError& fe) {
        err << format_diagnostic(fe.file.string(), as_diagnostic(fe.error)) << '\n';
        return exit_code_for(fe.error.kind());
    } catch (const Error& e) {
        err << "clavir: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "clavir: " << e.what() << '\n';
        return kExitDomain;
    }
}

}  // namespace clavir::cli
