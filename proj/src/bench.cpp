#include "pgdpo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pgdpo/csv.hpp"
#include "pgdpo/errors.hpp"
#include "pgdpo/noise.hpp"
#include "pgdpo/parallel.hpp"
#include "pgdpo/reference.hpp"
#include "pgdpo/rollout.hpp"

namespace pgdpo {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// Salt separating the Stage-2 Monte-Carlo seed from the Stage-1 seed.
constexpr std::uint64_t projection_salt = 0x5354414745320000ull;

std::vector<std::string> indexed(const std::string& prefix, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

void write_errors_csv(const std::string& path, const SeedRun& run, std::uint64_t hash) {
    CsvWriter w(path, {"method", "block", "l1", "linf", "failures"}, hash, run.seed);
    auto emit = [&](const char* method, const GridError& e) {
        for (const auto& b : e.blocks) {
            w << method << b.block << b.l1 << b.linf << e.failures;
            w.end_row();
        }
    };
    if (run.has_dpo) emit("dpo", run.dpo);
    if (run.has_pgdpo) emit("pgdpo", run.pgdpo);
}

bool wants(const RunConfig& cfg, const std::string& method) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), method) != cfg.methods.end();
}

}  // namespace

void write_projection_csv(const std::string& path, const std::vector<ProjectionResult>& results,
                          const std::vector<char>& failed, int d, int m, std::uint64_t hash,
                          std::uint64_t seed) {
    std::vector<std::string> cols{"t"};
    for (auto& v : {indexed("x", d), indexed("u", m), indexed("u_warm", m), indexed("lambda", d),
                    indexed("lambda_se", d)})
        cols.insert(cols.end(), v.begin(), v.end());
    for (const char* c : {"grad_inf", "residual_projected", "residual_warm", "h_value", "h_warm",
                          "newton_iters", "converged", "stalled", "error", "wall_us"})
        cols.emplace_back(c);
    CsvWriter w(path, cols, hash, seed);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const ProjectionResult& r = results[i];
        const bool bad = failed[i] != 0;
        w << r.t;
        for (int j = 0; j < d; ++j) w << r.x[j];
        for (int j = 0; j < m; ++j) w << (bad ? nan : r.u[j]);
        for (int j = 0; j < m; ++j) w << (bad ? nan : r.u_warm[j]);
        for (int j = 0; j < d; ++j) w << (bad ? nan : r.lambda[j]);
        for (int j = 0; j < d; ++j) w << (bad ? nan : r.lambda_std_error[j]);
        w << r.grad_inf << r.residual_projected << r.residual_warm << r.h_value << r.h_warm
          << r.newton_iters << static_cast<int>(r.converged) << static_cast<int>(r.stalled)
          << static_cast<int>(bad) << r.wall_us;
        w.end_row();
    }
}

std::uint64_t projection_seed(std::uint64_t seed) { return mix_seed(seed, projection_salt); }

std::vector<ControlBlock> control_blocks(int case_id, int control_dim) {
    if (case_id == 1) return {{"u", 0, control_dim}};
    return {{"pi", 0, control_dim - 1}, {"c", control_dim - 1, 1}};
}

EvalGrid EvalGrid::build(const RunConfig& cfg) {
    EvalGrid g;
    const double horizon = cfg.horizon();
    const int nt = cfg.grid.times;
    const int nx = cfg.grid.points;
    g.points = nx;
    for (int i = 0; i < nt; ++i) g.time_points.push_back(horizon * i / nt);
    auto coord = [nx](int j) { return nx == 1 ? 0.0 : -1.0 + 2.0 * j / (nx - 1); };
    const double dt = horizon / nt;

    std::vector<Vec> slice_dirs;
    Vec center;
    double radius = 0.0;
    if (cfg.case_id == 1) {
        const int d = cfg.lq.dim;
        CounterRng rng(cfg.grid.slice_seed, StreamTag::Grid);
        g.direction.resize(d);
        for (int j = 0; j < d; ++j) g.direction[j] = 2.0 * rng.uniform(0, static_cast<std::uint32_t>(j), 0) - 1.0;
        slice_dirs.push_back(g.direction);
        if (cfg.grid.axis_slices)
            for (int a = 0; a < d; ++a) slice_dirs.push_back(Vec::Unit(d, a));
        center = cfg.lq.target;
        radius = cfg.grid.halfwidth;
    } else {
        slice_dirs.push_back(Vec::Ones(1));
        center = Vec::Constant(1, 0.5 * (cfg.grid.lo + cfg.grid.hi));
        radius = 0.5 * (cfg.grid.hi - cfg.grid.lo);
    }
    g.slices = static_cast<int>(slice_dirs.size());
    // Weighted L1 integrates over each slice (arc length) and time, averaged over slices.
    double mean_len = 0.0;
    for (const auto& v : slice_dirs) mean_len += v.norm() / g.slices;
    const double ds = nx == 1 ? 0.0 : 2.0 * radius * mean_len / (nx - 1);
    g.cell_measure = dt * ds / g.slices;

    for (const auto& v : slice_dirs)
        for (double t : g.time_points)
            for (int j = 0; j < nx; ++j) g.queries.push_back({t, Vec(center + radius * coord(j) * v)});
    return g;
}

EvalGrid EvalGrid::subgrid(int stride_t, int stride_x) const {
    if (stride_t < 1 || stride_x < 1) throw ContractError("subgrid strides must be >= 1");
    EvalGrid s;
    s.direction = direction;
    s.slices = 1;
    const int nt = static_cast<int>(time_points.size());
    for (int i = 0; i < nt; i += stride_t) s.time_points.push_back(time_points[i]);
    for (int i = 0; i < nt; i += stride_t)
        for (int j = 0; j < points; j += stride_x) s.queries.push_back(queries[static_cast<std::size_t>(i) * points + j]);
    s.points = (points + stride_x - 1) / stride_x;
    s.cell_measure = cell_measure * stride_t * stride_x;
    return s;
}

const BlockError& GridError::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.block == name) return b;
    throw ContractError("no control block named '" + name + "'");
}

GridError grid_error(CMatRef candidate, CMatRef reference, const std::vector<char>& failed,
                     const std::vector<ControlBlock>& blocks, double cell_measure) {
    if (candidate.rows() != reference.rows() || candidate.cols() != reference.cols())
        throw ContractError("candidate and reference grids differ in shape");
    const Eigen::Index n = candidate.cols();
    if (static_cast<Eigen::Index>(failed.size()) != n) throw ContractError("failure mask size mismatch");
    GridError out;
    out.failed = failed;
    out.failures = static_cast<int>(std::count(failed.begin(), failed.end(), char{1}));
    for (const auto& b : blocks) {
        std::vector<double> per_point;
        per_point.reserve(n);
        double linf = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (failed[i]) continue;
            const double e = (candidate.col(i).segment(b.begin, b.size) -
                              reference.col(i).segment(b.begin, b.size)).cwiseAbs().sum();
            per_point.push_back(e);
            linf = std::max(linf, e);
        }
        BlockError be{b.name, 0.0, linf};
        if (!per_point.empty()) {
            const double sum = pairwise_sum(per_point.data(), per_point.size());
            be.l1 = cell_measure > 0.0 ? sum * cell_measure : sum / per_point.size();
        }
        out.blocks.push_back(be);
    }
    return out;
}

CaseSetup CaseSetup::from(const RunConfig& cfg) {
    CaseSetup s;
    s.config = cfg;
    s.kernel = cfg.kernel;
    const int d = cfg.state_dim();
    const int m = cfg.control_dim();
    s.arch.state_dim = d;
    s.arch.control_dim = m;
    s.arch.hidden = cfg.hidden;
    s.arch.heads = cfg.heads;
    s.norm.time_scale = cfg.horizon();
    if (cfg.case_id == 1) {
        auto problem = make_case1_lq(cfg.lq);
        s.norm.center = problem->target();
        s.norm.scale = Vec::Constant(d, cfg.anchor_halfwidth);
        s.anchors = AnchorDistribution::box(problem->target(), cfg.anchor_halfwidth, cfg.anchor_time);
        s.reference = std::make_shared<RiccatiPolicy>(problem->params(), cfg.kernel);
        s.problem = problem;
    } else {
        auto problem = cfg.case_id == 2 ? make_case2_merton(cfg.merton) : make_case3_resource(cfg.merton);
        s.norm.center = Vec::Constant(1, 0.5 * (cfg.anchor_lo + cfg.anchor_hi));
        s.norm.scale = Vec::Constant(1, 0.5 * (cfg.anchor_hi - cfg.anchor_lo));
        s.anchors = AnchorDistribution::log_wealth(cfg.anchor_lo, cfg.anchor_hi);
        s.anchors.time = cfg.anchor_time;
        s.reference = std::make_shared<MertonEquilibriumPolicy>(problem->params(), cfg.kernel);
        s.problem = problem;
    }
    s.anchors.fixed_t0 = cfg.anchor_t0;
    s.blocks = control_blocks(cfg.case_id, m);
    return s;
}

MlpPolicy CaseSetup::initial_policy(std::uint64_t seed) const { return MlpPolicy::init(arch, norm, seed); }

TrainConfig CaseSetup::train_config(std::uint64_t seed) const {
    TrainConfig t = config.stage1;
    t.seed = seed;
    return t;
}

Mat CaseSetup::reference_controls(const std::vector<Query>& queries) const {
    Mat out(problem->control_dim(), static_cast<Eigen::Index>(queries.size()));
    for (std::size_t i = 0; i < queries.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = reference->act(queries[i].t, queries[i].x);
    return out;
}

SeedRun run_seed(const CaseSetup& setup, std::uint64_t seed, const std::string& out_dir) {
    const RunConfig& cfg = setup.config;
    const ControlProblem& problem = *setup.problem;
    const int d = problem.state_dim();
    const int m = problem.control_dim();
    SeedRun run;
    run.seed = seed;
    run.has_dpo = wants(cfg, "dpo");
    run.has_pgdpo = wants(cfg, "pgdpo");
    if (!out_dir.empty()) fs::create_directories(out_dir);

    auto start = std::chrono::steady_clock::now();
    TrainResult trained =
        warm_start(problem, setup.kernel, setup.initial_policy(seed), setup.anchors, setup.train_config(seed));
    run.train_seconds = seconds_since(start);
    run.trace = trained.trace;
    const MlpPolicy& policy = trained.policy;

    const EvalGrid grid = EvalGrid::build(cfg);
    const std::size_t n = grid.size();
    const Mat reference = setup.reference_controls(grid.queries);
    const double measure = cfg.grid.weighted ? grid.cell_measure : 0.0;

    Mat warm(m, static_cast<Eigen::Index>(n));
    std::vector<char> warm_failed(n, 0);
    parallel_for(n, [&](std::size_t i) {
        try {
            warm.col(static_cast<Eigen::Index>(i)) = policy.act(grid.queries[i].t, grid.queries[i].x);
        } catch (const std::exception&) {
            warm.col(static_cast<Eigen::Index>(i)).setZero();
            warm_failed[i] = 1;
        }
    });
    if (run.has_dpo) run.dpo = grid_error(warm, reference, warm_failed, setup.blocks, measure);

    std::vector<char> failed(n, 0);
    if (run.has_pgdpo) {
        start = std::chrono::steady_clock::now();
        run.projection.resize(n);
        const std::uint64_t pseed = projection_seed(seed);
        parallel_for(n, [&](std::size_t i) {
            try {
                run.projection[i] = project(problem, setup.kernel, policy, grid.queries[i], cfg.stage2,
                                            mix_seed(pseed, i));
            } catch (const std::exception&) {
                ProjectionResult r;
                r.t = grid.queries[i].t;
                r.x = grid.queries[i].x;
                run.projection[i] = r;
                failed[i] = 1;
            }
        });
        run.project_seconds = seconds_since(start);
        Mat projected(m, static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            projected.col(static_cast<Eigen::Index>(i)) =
                failed[i] ? Vec(Vec::Zero(m)) : run.projection[i].u;
        run.pgdpo = grid_error(projected, reference, failed, setup.blocks, measure);

        StationarityStats& st = run.stationarity;
        std::vector<double> rw, rp;
        for (std::size_t i = 0; i < n; ++i) {
            if (failed[i]) continue;
            const ProjectionResult& r = run.projection[i];
            st.max_grad_inf = std::max(st.max_grad_inf, r.grad_inf);
            if (r.h_value < r.h_warm) ++st.h_decreases;
            if (!r.converged) ++st.unconverged;
            if (r.stalled) ++st.stalled;
            rw.push_back(r.residual_warm);
            rp.push_back(r.residual_projected);
        }
        if (!rw.empty()) {
            st.residual_warm = pairwise_sum(rw.data(), rw.size()) / rw.size();
            st.residual_projected = pairwise_sum(rp.data(), rp.size()) / rp.size();
        }
    }

    if (!out_dir.empty()) {
        policy.save(join_path(out_dir, "policy.bin"));
        CsvWriter tw(join_path(out_dir, "trace.csv"), {"iteration", "mean_return", "grad_norm", "skips"},
                     cfg.hash, seed);
        for (const auto& r : run.trace) {
            tw << r.iteration << r.mean_return << r.grad_norm << r.skips;
            tw.end_row();
        }
        if (run.has_pgdpo) {
            write_projection_csv(join_path(out_dir, "projection.csv"), run.projection, failed, d, m, cfg.hash,
                                 seed);
            CsvWriter rw(join_path(out_dir, "residual.csv"), {"source", "mean_residual"}, cfg.hash, seed);
            rw << "policy" << run.stationarity.residual_warm;
            rw.end_row();
            rw << "projected" << run.stationarity.residual_projected;
            rw.end_row();
        }
        write_errors_csv(join_path(out_dir, "errors.csv"), run, cfg.hash);
        if (cfg.trajectory_dump) {
            Vec x0 = setup.norm.center;
            Trajectory traj = simulate(problem, policy, setup.kernel, Anchor{cfg.anchor_t0, x0},
                                       (cfg.horizon() - cfg.anchor_t0) / cfg.stage1.steps, cfg.stage1.steps,
                                       NoiseStream(seed, 0), TapeLevel::Returns);
            write_trajectory_csv(traj, join_path(out_dir, "trajectory.csv"), cfg.hash, seed);
        }
    }
    run.ok = true;
    return run;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    const double mean = pairwise_sum(v.data(), v.size()) / v.size();
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (v.size() - 1))};
}

const MethodSummary* BenchReport::find(const std::string& method, const std::string& block) const {
    for (const auto& s : summary)
        if (s.method == method && s.block == block) return &s;
    return nullptr;
}

BenchReport run_case(const CaseSetup& setup, const std::string& out) {
    const RunConfig& cfg = setup.config;
    BenchReport report;
    const std::string case_dir = out.empty() ? std::string() : join_path(out, cfg.case_name());
    for (std::uint64_t seed : cfg.seeds) {
        const std::string dir = case_dir.empty() ? std::string() : join_path(case_dir, std::to_string(seed));
        try {
            report.runs.push_back(run_seed(setup, seed, dir));
        } catch (const std::exception& e) {
            SeedRun failed;
            failed.seed = seed;
            failed.error = e.what();
            report.runs.push_back(std::move(failed));
            ++report.failed_seeds;
        }
    }

    for (const char* method : {"dpo", "pgdpo"}) {
        if (!wants(cfg, method)) continue;
        const bool is_dpo = std::string(method) == "dpo";
        for (const auto& b : setup.blocks) {
            std::vector<double> l1, linf;
            for (const auto& r : report.runs) {
                if (!r.ok) continue;
                const BlockError& e = (is_dpo ? r.dpo : r.pgdpo).block(b.name);
                l1.push_back(e.l1);
                linf.push_back(e.linf);
            }
            MethodSummary s;
            s.method = method;
            s.block = b.name;
            std::tie(s.l1_mean, s.l1_std) = mean_std(l1);
            std::tie(s.linf_mean, s.linf_std) = mean_std(linf);
            s.seeds = static_cast<int>(l1.size());
            report.summary.push_back(s);
        }
    }

    if (!case_dir.empty()) {
        fs::create_directories(case_dir);
        const std::uint64_t first_seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
        CsvWriter w(join_path(case_dir, "summary.csv"),
                    {"method", "block", "l1_mean", "l1_std", "linf_mean", "linf_std", "seeds", "failed_seeds"},
                    cfg.hash, first_seed);
        for (const auto& s : report.summary) {
            w << s.method << s.block << s.l1_mean << s.l1_std << s.linf_mean << s.linf_std << s.seeds
              << report.failed_seeds;
            w.end_row();
        }
        std::ofstream txt(join_path(case_dir, "summary.txt"));
        char line[256];
        std::snprintf(line, sizeof line, "%s  kernel=%s  seeds=%zu  failed=%d\n", cfg.case_name().c_str(),
                      std::string(to_string(cfg.kernel.kind())).c_str(), cfg.seeds.size(), report.failed_seeds);
        txt << line;
        std::snprintf(line, sizeof line, "%-8s %-6s %-26s %-26s\n", "method", "block", "L1 (mean +- std)",
                      "Linf (mean +- std)");
        txt << line;
        for (const auto& s : report.summary) {
            std::snprintf(line, sizeof line, "%-8s %-6s %.3e +- %.2e        %.3e +- %.2e\n", s.method.c_str(),
                          s.block.c_str(), s.l1_mean, s.l1_std, s.linf_mean, s.linf_std);
            txt << line;
        }
        for (const auto& r : report.runs)
            if (!r.ok) txt << "seed " << r.seed << " failed: " << r.error << "\n";
    }
    return report;
}

std::vector<CheckLine> check_case(const CaseSetup& setup, const BenchReport& report) {
    std::vector<CheckLine> out;
    auto fmt = [](double v) { return format_double(v); };
    out.push_back({"all seeds completed", report.failed_seeds == 0,
                   std::to_string(report.failed_seeds) + " failed"});
    const int id = setup.config.case_id;
    if (const MethodSummary* s = report.find("pgdpo", id == 1 ? "u" : "c")) {
        const double limit = id == 1 ? 5e-2 : id == 2 ? 1e-2 : 2e-2;
        out.push_back({"pgdpo " + s->block + " L1 <= " + fmt(limit), s->l1_mean <= limit, fmt(s->l1_mean)});
    }
    if (id == 2)
        if (const MethodSummary* s = report.find("pgdpo", "pi"))
            out.push_back({"pgdpo pi Linf <= 1e-2", s->linf_mean <= 1e-2, fmt(s->linf_mean)});
    for (const auto& r : report.runs) {
        if (!r.ok) continue;
        const std::string tag = " (seed " + std::to_string(r.seed) + ")";
        if (r.has_dpo && r.has_pgdpo)
            for (const auto& b : setup.blocks) {
                const double p = r.pgdpo.block(b.name).l1;
                const double q = r.dpo.block(b.name).l1;
                out.push_back({"pgdpo " + b.name + " L1 < dpo" + tag, p < q, fmt(p) + " vs " + fmt(q)});
            }
        if (r.has_pgdpo) {
            out.push_back({"stationarity sup|dH/du| <= 1e-8" + tag, r.stationarity.max_grad_inf <= 1e-8,
                           fmt(r.stationarity.max_grad_inf)});
            out.push_back({"H(projected) >= H(policy)" + tag, r.stationarity.h_decreases == 0,
                           std::to_string(r.stationarity.h_decreases) + " decreases"});
        }
    }
    return out;
}

ResidualCurve residual_curve(const CaseSetup& setup, std::uint64_t seed, const std::string& out_csv) {
    const RunConfig& cfg = setup.config;
    const ControlProblem& problem = *setup.problem;
    const EvalGrid sub = EvalGrid::build(cfg).subgrid(cfg.residual.stride_t, cfg.residual.stride_x);
    const std::uint64_t rseed = projection_seed(seed);
    ResidualCurve curve;
    auto record = [&](int iteration, const MlpPolicy& policy) {
        const ResidualField f =
            residual_field(problem, setup.kernel, policy, sub.queries, ControlSource::Policy, cfg.stage2, rseed);
        curve.iterations.push_back(iteration);
        curve.warmup.push_back(f.mean);
    };
    const MlpPolicy init = setup.initial_policy(seed);
    record(0, init);
    const int k0 = cfg.stage1.iterations;
    TrainResult trained = warm_start(problem, setup.kernel, init, setup.anchors, setup.train_config(seed),
                                     [&](int it, const MlpPolicy& policy) {
                                         const int done = it + 1;
                                         if (done % cfg.residual.every == 0 || done == k0) record(done, policy);
                                     });
    const auto results = project_grid(problem, setup.kernel, trained.policy, sub.queries, cfg.stage2, rseed);
    curve.warmup_final = residual_from(results, ControlSource::Policy).mean;
    curve.projected = residual_from(results, ControlSource::Projected).mean;

    if (!out_csv.empty()) {
        fs::path p(out_csv);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        CsvWriter w(out_csv, {"iteration", "stage", "residual"}, cfg.hash, seed);
        for (std::size_t i = 0; i < curve.iterations.size(); ++i) {
            w << curve.iterations[i] << "warmup" << curve.warmup[i];
            w.end_row();
        }
        w << k0 << "warmup_final" << curve.warmup_final;
        w.end_row();
        w << k0 << "projected" << curve.projected;
        w.end_row();
    }
    return curve;
}

std::vector<SweepRow> dimension_sweep(const RunConfig& cfg, const std::string& out) {
    if (cfg.case_id != 2) throw ConfigError("problem.case", "the dimension sweep runs on case 2");
    if (cfg.market_explicit) throw ConfigError("sweep.dims", "needs a generated market, not explicit values");
    std::vector<SweepRow> rows;
    for (int dim : cfg.sweep.dims) {
        RunConfig c = cfg;
        c.assets = dim;
        MertonParams g = generate_market(dim, cfg.market_seed, cfg.merton.bequest, cfg.merton.horizon);
        c.merton.excess_return = g.excess_return;
        c.merton.covariance = g.covariance;
        c.heads.assign(dim + 1, OutputHead::Identity);
        c.heads.back() = OutputHead::Softplus;
        const std::string dir = out.empty() ? std::string() : join_path(out, "sweep_d" + std::to_string(dim));
        const BenchReport report = run_case(CaseSetup::from(c), dir);
        for (const auto& s : report.summary) rows.push_back({dim, s});
    }
    if (!out.empty()) {
        fs::create_directories(out);
        CsvWriter w(join_path(out, "sweep.csv"), {"d", "method", "block", "l1_mean", "l1_std", "linf_mean"},
                    cfg.hash, cfg.seeds.front());
        for (const auto& r : rows) {
            w << r.dim << r.stats.method << r.stats.block << r.stats.l1_mean << r.stats.l1_std
              << r.stats.linf_mean;
            w.end_row();
        }
    }
    return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]);
        const double b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

RuntimeReport runtime_scaling(const CaseSetup& setup, const FeedbackPolicy& policy,
                              const std::vector<std::pair<int, int>>& configs, int repetitions,
                              std::uint64_t seed, const std::string& out_csv) {
    const RunConfig& cfg = setup.config;
    RuntimeReport report;
    const Query q{cfg.anchor_t0, setup.norm.center};
    if (repetitions > 0) {
        for (const auto& [paths, steps] : configs) {
            ProjectionConfig pc = cfg.stage2;
            pc.paths = paths;
            pc.steps = steps;
            std::vector<double> times;
            for (int r = 0; r <= repetitions; ++r) {
                const auto start = std::chrono::steady_clock::now();
                (void)project(*setup.problem, setup.kernel, policy, q, pc, mix_seed(seed, r));
                if (r > 0) times.push_back(seconds_since(start));
            }
            std::sort(times.begin(), times.end());
            const std::size_t h = times.size() / 2;
            const double median = times.size() % 2 ? times[h] : 0.5 * (times[h - 1] + times[h]);
            report.rows.push_back({paths, steps, median});
        }
        std::vector<double> work, secs;
        for (const auto& r : report.rows) {
            work.push_back(static_cast<double>(r.paths) * r.steps);
            secs.push_back(r.seconds_per_query);
        }
        report.slope = loglog_slope(work, secs);
    } else {
        report.slope = std::numeric_limits<double>::quiet_NaN();
    }
    if (!out_csv.empty()) {
        fs::path p(out_csv);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        CsvWriter w(out_csv, {"m_mc", "n_steps", "seconds_per_query"}, cfg.hash, seed);
        for (const auto& r : report.rows) {
            w << r.paths << r.steps << r.seconds_per_query;
            w.end_row();
        }
    }
    return report;
}

std::vector<BridgeResult> run_bridge(const CaseSetup& setup, const FeedbackPolicy& policy,
                                     std::uint64_t seed, const std::string& out_csv) {
    const RunConfig& cfg = setup.config;
    BridgeConfig bc;
    bc.t0 = cfg.bridge.t0;
    bc.x0 = cfg.bridge.x0;
    bc.fine_step = cfg.bridge.fine_step;
    bc.inner = cfg.bridge.inner;
    bc.antithetic = cfg.bridge.antithetic;
    std::vector<BridgeResult> all;
    for (std::size_t i = 0; i < cfg.bridge.prefix_times.size(); ++i) {
        auto rs = bridge_residuals(*setup.problem, policy, setup.kernel, bc, cfg.bridge.prefix_times[i],
                                   cfg.bridge.dts, mix_seed(seed, i));
        all.insert(all.end(), rs.begin(), rs.end());
    }
    if (!out_csv.empty()) {
        fs::path p(out_csv);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        CsvWriter w(out_csv,
                    {"prefix_time", "dt", "rho_norm", "rho_over_dt", "std_error", "foc_norm", "inconclusive"},
                    cfg.hash, seed);
        for (const auto& r : all) {
            w << r.prefix_time << r.dt << r.rho_norm << r.rho_over_dt << r.std_error << r.foc_norm
              << static_cast<int>(r.inconclusive);
            w.end_row();
        }
    }
    return all;
}

std::vector<BridgeCheck> check_bridge(const std::vector<BridgeResult>& results) {
    std::vector<double> times;
    for (const auto& r : results)
        if (std::find(times.begin(), times.end(), r.prefix_time) == times.end()) times.push_back(r.prefix_time);
    std::vector<BridgeCheck> out;
    for (double t : times) {
        std::vector<const BridgeResult*> g;
        for (const auto& r : results)
            if (r.prefix_time == t) g.push_back(&r);
        std::sort(g.begin(), g.end(), [](auto* a, auto* b) { return a->dt > b->dt; });
        BridgeCheck c{t, g.size() >= 2, g.size() >= 2};
        for (std::size_t i = 1; i < g.size(); ++i) {
            const double drop = g[i - 1]->rho_over_dt - g[i]->rho_over_dt;
            if (!(drop > 0.0)) c.decreasing = false;
            if (!(drop > g[i - 1]->std_error && drop > g[i]->std_error)) c.resolved = false;
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace pgdpo
