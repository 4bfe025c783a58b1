#include "pgdpo/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pgdpo/bench.hpp"
#include "pgdpo/config.hpp"
#include "pgdpo/csv.hpp"
#include "pgdpo/errors.hpp"
#include "pgdpo/noise.hpp"
#include "pgdpo/parallel.hpp"

namespace pgdpo {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool check = false;
    std::string out;
    std::string checkpoint;
};

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

RunConfig load(const Options& o) {
    RunConfig c = load_config(o.config);
    if (o.seed) c.seeds = {*o.seed};
    if (!o.out.empty()) c.out_dir = o.out;
    return c;
}

std::string seed_dir(const RunConfig& c, std::uint64_t seed) {
    return join_path(join_path(c.out_dir, c.case_name()), std::to_string(seed));
}

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("--config", "cannot read '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int report_checks(const std::vector<CheckLine>& lines, std::ostream& out) {
    bool all = true;
    for (const auto& l : lines) {
        out << (l.pass ? "PASS " : "FAIL ") << l.name << "  [" << l.detail << "]\n";
        all = all && l.pass;
    }
    return all ? exit_ok : exit_check_failed;
}

MlpPolicy checked_policy(const std::string& path, const CaseSetup& setup) {
    if (!fs::exists(path)) throw ConfigError("--checkpoint", "no checkpoint at '" + path + "'");
    MlpPolicy p = MlpPolicy::load(path);
    if (p.state_dim() != setup.problem->state_dim() || p.control_dim() != setup.problem->control_dim())
        throw ConfigError("--checkpoint", "checkpoint dimensions do not match the configured problem");
    return p;
}

// Trained policy from --checkpoint when given, otherwise from a fresh Stage-1 run.
MlpPolicy obtain_policy(const Options& o, const CaseSetup& setup, std::uint64_t seed) {
    if (!o.checkpoint.empty()) return checked_policy(o.checkpoint, setup);
    return warm_start(*setup.problem, setup.kernel, setup.initial_policy(seed), setup.anchors,
                      setup.train_config(seed))
        .policy;
}

int cmd_kernel_check(const Options& o, std::ostream& out) {
    const std::string text = read_file(o.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("<root>", "expected an object");
    const nlohmann::json& kj = j.contains("kernel") ? j.at("kernel") : j;
    const DiscountKernel kernel = parse_kernel(kj.dump());
    double horizon = 1.0;
    if (j.contains("problem") && j.at("problem").is_object() && j.at("problem").contains("horizon") &&
        j.at("problem").at("horizon").is_number())
        horizon = j.at("problem").at("horizon").get<double>();
    const KernelDefects defects = max_defects(kernel, horizon);
    const KernelClass cls = classify(kernel, horizon);
    out << "kind=" << to_string(kernel.kind()) << " multiplicativity_defect=" << format_double(defects.multiplicativity)
        << " homogeneity_defect=" << format_double(defects.homogeneity) << " class=" << to_string(cls) << "\n";
    const std::string dir = o.out.empty() ? std::string("runs") : o.out;
    fs::create_directories(dir);
    CsvWriter w(join_path(dir, "kernel_check.csv"), {"kind", "multiplicativity_defect", "homogeneity_defect", "class"},
                fnv1a64(j.dump()), o.seed.value_or(0));
    w << std::string(to_string(kernel.kind())) << defects.multiplicativity << defects.homogeneity
      << std::string(to_string(cls));
    w.end_row();
    return exit_ok;
}

int cmd_train(const Options& o, std::ostream& out) {
    const RunConfig c = load(o);
    const CaseSetup setup = CaseSetup::from(c);
    const std::uint64_t seed = c.seeds.front();
    const std::string dir = seed_dir(c, seed);
    fs::create_directories(dir);
    const TrainResult res = warm_start(*setup.problem, setup.kernel, setup.initial_policy(seed), setup.anchors,
                                       setup.train_config(seed));
    const std::string ckpt = o.checkpoint.empty() ? join_path(dir, "policy.bin") : o.checkpoint;
    if (fs::path(ckpt).has_parent_path()) fs::create_directories(fs::path(ckpt).parent_path());
    res.policy.save(ckpt);
    CsvWriter w(join_path(dir, "trace.csv"), {"iteration", "mean_return", "grad_norm", "skips"}, c.hash, seed);
    for (const auto& r : res.trace) {
        w << r.iteration << r.mean_return << r.grad_norm << r.skips;
        w.end_row();
    }
    out << "trained " << res.trace.size() << " iterations, skips " << res.skips;
    if (!res.trace.empty()) out << ", final mean return " << format_double(res.trace.back().mean_return);
    out << "\ncheckpoint " << ckpt << "\n";
    return exit_ok;
}

int cmd_project(const Options& o, std::ostream& out) {
    const RunConfig c = load(o);
    const CaseSetup setup = CaseSetup::from(c);
    const std::uint64_t seed = c.seeds.front();
    const std::string dir = seed_dir(c, seed);
    const MlpPolicy policy =
        checked_policy(o.checkpoint.empty() ? join_path(dir, "policy.bin") : o.checkpoint, setup);
    const std::vector<Query> queries = c.queries.empty() ? EvalGrid::build(c).queries : c.queries;
    const std::size_t n = queries.size();
    std::vector<ProjectionResult> results(n);
    std::vector<char> failed(n, 0);
    const std::uint64_t base = projection_seed(seed);
    parallel_for(n, [&](std::size_t i) {
        try {
            results[i] = project(*setup.problem, setup.kernel, policy, queries[i], c.stage2, mix_seed(base, i));
        } catch (const std::exception&) {
            results[i].t = queries[i].t;
            results[i].x = queries[i].x;
            failed[i] = 1;
        }
    });
    fs::create_directories(dir);
    const std::string path = join_path(dir, "projection.csv");
    write_projection_csv(path, results, failed, setup.problem->state_dim(), setup.problem->control_dim(), c.hash,
                         seed);
    const auto bad = std::count(failed.begin(), failed.end(), char{1});
    out << "projected " << n << " queries (" << bad << " flagged) -> " << path << "\n";
    return exit_ok;
}

int cmd_bench(const Options& o, std::ostream& out) {
    const RunConfig c = load(o);
    const CaseSetup setup = CaseSetup::from(c);
    const BenchReport report = run_case(setup, c.out_dir);
    std::ifstream txt(join_path(join_path(c.out_dir, c.case_name()), "summary.txt"));
    out << txt.rdbuf();
    if (o.check) return report_checks(check_case(setup, report), out);
    return report.failed_seeds == static_cast<int>(report.runs.size()) ? exit_runtime : exit_ok;
}

int cmd_bridge(const Options& o, std::ostream& out) {
    const RunConfig c = load(o);
    const CaseSetup setup = CaseSetup::from(c);
    const std::uint64_t seed = c.seeds.front();
    const MlpPolicy policy = obtain_policy(o, setup, seed);
    const auto results = run_bridge(setup, policy, seed, join_path(seed_dir(c, seed), "bridge.csv"));
    char line[200];
    for (const auto& r : results) {
        std::snprintf(line, sizeof line, "t=%.6g dt=%.6g |rho|/dt=%.6e se=%.3e |foc|=%.3e%s\n", r.prefix_time,
                      r.dt, r.rho_over_dt, r.std_error, r.foc_norm, r.inconclusive ? " inconclusive" : "");
        out << line;
    }
    if (!o.check) return exit_ok;
    std::vector<CheckLine> lines;
    for (const auto& b : check_bridge(results))
        lines.push_back({"bridge remainder decreasing at t=" + format_double(b.prefix_time),
                         b.decreasing && b.resolved,
                         std::string(b.decreasing ? "decreasing" : "not decreasing") +
                             (b.resolved ? ", resolved" : ", within standard error")});
    return report_checks(lines, out);
}

int cmd_residual(const Options& o, std::ostream& out) {
    const RunConfig c = load(o);
    const CaseSetup setup = CaseSetup::from(c);
    const std::uint64_t seed = c.seeds.front();
    const ResidualCurve curve = residual_curve(setup, seed, join_path(seed_dir(c, seed), "residual_curve.csv"));
    for (std::size_t i = 0; i < curve.iterations.size(); ++i)
        out << "iteration " << curve.iterations[i] << " R=" << format_double(curve.warmup[i]) << "\n";
    out << "R_warmup_final=" << format_double(curve.warmup_final)
        << " R_projected=" << format_double(curve.projected) << "\n";
    if (!o.check) return exit_ok;
    return report_checks({{"R_projected < 0.1 R_warmup_final", curve.projected < 0.1 * curve.warmup_final,
                           format_double(curve.projected) + " vs " + format_double(curve.warmup_final)}},
                         out);
}

int cmd_sweep(const Options& o, std::ostream& out) {
    const RunConfig c = load(o);
    const auto rows = dimension_sweep(c, join_path(c.out_dir, c.case_name()));
    char line[200];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "d=%-3d %-6s %-3s L1 %.3e +- %.2e\n", r.dim, r.stats.method.c_str(),
                      r.stats.block.c_str(), r.stats.l1_mean, r.stats.l1_std);
        out << line;
    }
    if (!o.check) return exit_ok;
    auto find = [&](int d, const std::string& m, const std::string& b) -> const MethodSummary* {
        for (const auto& r : rows)
            if (r.dim == d && r.stats.method == m && r.stats.block == b) return &r.stats;
        return nullptr;
    };
    std::vector<CheckLine> lines;
    for (int d : c.sweep.dims)
        for (const char* b : {"pi", "c"}) {
            const auto* p = find(d, "pgdpo", b);
            const auto* q = find(d, "dpo", b);
            if (p && q)
                lines.push_back({"d=" + std::to_string(d) + " pgdpo " + b + " L1 < dpo", p->l1_mean < q->l1_mean,
                                 format_double(p->l1_mean) + " vs " + format_double(q->l1_mean)});
        }
    const auto [dmin, dmax] = std::minmax_element(c.sweep.dims.begin(), c.sweep.dims.end());
    const auto* lo = find(*dmin, "pgdpo", "pi");
    const auto* hi = find(*dmax, "pgdpo", "pi");
    if (lo && hi)
        lines.push_back({"pgdpo pi L1 growth <= 2x", hi->l1_mean <= 2.0 * lo->l1_mean,
                         format_double(hi->l1_mean) + " vs " + format_double(lo->l1_mean)});
    return report_checks(lines, out);
}

int cmd_runtime(const Options& o, std::ostream& out) {
    const RunConfig c = load(o);
    const CaseSetup setup = CaseSetup::from(c);
    const std::uint64_t seed = c.seeds.front();
    const MlpPolicy policy =
        o.checkpoint.empty() ? setup.initial_policy(seed) : checked_policy(o.checkpoint, setup);
    const RuntimeReport rep = runtime_scaling(setup, policy, c.runtime.configs, c.runtime.repetitions, seed,
                                              join_path(join_path(c.out_dir, c.case_name()), "runtime.csv"));
    for (const auto& r : rep.rows)
        out << "M_MC=" << r.paths << " N'=" << r.steps << " seconds/query=" << format_double(r.seconds_per_query)
            << "\n";
    out << "log-log slope=" << format_double(rep.slope) << "\n";
    if (!o.check) return exit_ok;
    return report_checks({{"runtime slope in [0.8, 1.2]", rep.slope >= 0.8 && rep.slope <= 1.2,
                           format_double(rep.slope)}},
                         out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-stage policy optimization for non-exponential discounting"};
    app.require_subcommand(1, 1);
    Options o;
    std::uint64_t seed = 0;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"kernel-check", "classify the configured discount kernel"},
        {"train", "Stage 1 warm-up; writes a checkpoint and trace"},
        {"project", "Stage 2 projection at configured queries or the grid"},
        {"bench", "train, project and score against the reference for all seeds"},
        {"bridge", "costate bridge remainder at several step sizes"},
        {"residual", "Hamiltonian residual during Stage 1 and after projection"},
        {"sweep", "case-2 accuracy over asset counts"},
        {"runtime", "projection wall time against M_MC * N'"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* s = app.add_subcommand(name, help);
        s->add_option("--config", o.config, "run configuration (JSON)")->required();
        s->add_option("--seed", seed, "override the configured seeds with one seed");
        s->add_option("--workers", o.workers, "worker threads")->check(CLI::Range(1, 1024));
        s->add_flag("--check", o.check, "exit 4 when acceptance thresholds fail");
        s->add_option("--out", o.out, "output directory");
        s->add_option("--checkpoint", o.checkpoint, "policy checkpoint path");
        subs.push_back(s);
    }

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }
    for (auto* s : subs)
        if (s->count("--seed") > 0) o.seed = seed;

    const std::string name = app.get_subcommands().front()->get_name();
    const int previous_workers = worker_count();
    set_worker_count(o.workers);
    int code = exit_ok;
    try {
        if (name == "kernel-check") code = cmd_kernel_check(o, out);
        else if (name == "train") code = cmd_train(o, out);
        else if (name == "project") code = cmd_project(o, out);
        else if (name == "bench") code = cmd_bench(o, out);
        else if (name == "bridge") code = cmd_bridge(o, out);
        else if (name == "residual") code = cmd_residual(o, out);
        else if (name == "sweep") code = cmd_sweep(o, out);
        else code = cmd_runtime(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        code = exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = exit_runtime;
    }
    set_worker_count(previous_workers);
    return code;
}

}  // namespace pgdpo
