#include "pgdpo/adjoint.hpp"

#include <cmath>

#include "pgdpo/errors.hpp"
#include "pgdpo/parallel.hpp"

namespace pgdpo {

namespace {

constexpr std::uint64_t kPrefixPath = 0xFFFFFFFFull;
constexpr int kBridgeChunk = 32;

void check_tape(const Trajectory& tr, int cache_rows) {
    const auto n = static_cast<std::size_t>(tr.steps);
    if (tr.level != TapeLevel::Full) throw ContractError("reverse pass needs a full tape");
    if (tr.x.size() != n + 1 || tr.u.size() != n || tr.dw.size() != n || tr.cache.size() != n ||
        tr.bx.size() != n || tr.bu.size() != n || tr.lx.size() != n || tr.lu.size() != n ||
        (!tr.sx.empty() && tr.sx.size() != n) || (!tr.su.empty() && tr.su.size() != n) ||
        tr.terminal_grad.cols() != tr.paths() || tr.discount.rows() != tr.steps + 1)
        throw ContractError("tape is missing entries");
    for (const auto& c : tr.cache)
        if (c.rows() != cache_rows) throw ContractError("tape policy cache does not match the policy");
}

}  // namespace

PathwiseAdjoint reverse_pass(const Trajectory& tr, const FeedbackPolicy& policy,
                             const ReverseOptions& opts) {
    check_tape(tr, policy.cache_rows());
    const int n = tr.steps;
    const int b = tr.paths();
    const int d = static_cast<int>(tr.x[0].rows());
    const int m = static_cast<int>(tr.u[0].rows());
    const int q = static_cast<int>(tr.dw[0].rows());
    const int p = policy.param_count();
    const bool has_sx = !tr.sx.empty();
    const bool has_su = !tr.su.empty();

    PathwiseAdjoint out;
    if (opts.param_sum) out.param_grad = Vec::Zero(p);
    if (opts.param_per_path) out.param_grad_paths = Mat::Zero(p, b);
    if (opts.keep_all) {
        out.lambda.resize(n + 1);
        out.signal.resize(n);
    }

    Mat lam(d, b);
    for (int i = 0; i < b; ++i) lam.col(i) = tr.discount(n, i) * tr.terminal_grad.col(i);
    if (opts.keep_all) out.lambda[n] = lam;
    if (n == 1) out.lambda1 = lam;

    Mat g(m, b);
    Mat next(d, b);
    Vec tk(b);
    for (int k = n - 1; k >= 0; --k) {
        for (int i = 0; i < b; ++i) {
            const double dt = tr.dt[i];
            const double c = tr.discount(k, i) * dt;
            auto ln = lam.col(i);
            auto bx = tr.bx[k].middleCols(i * d, d);
            auto bu = tr.bu[k].middleCols(i * m, m);
            g.col(i) = c * tr.lu[k].col(i) + dt * (bu.transpose() * ln);
            next.col(i) = c * tr.lx[k].col(i) + ln + dt * (bx.transpose() * ln);
            for (int j = 0; j < q; ++j) {
                const double w = tr.dw[k](j, i);
                if (has_su) g.col(i) += w * (tr.su[k].middleCols((i * q + j) * m, m).transpose() * ln);
                if (has_sx) next.col(i) += w * (tr.sx[k].middleCols((i * q + j) * d, d).transpose() * ln);
            }
            tk[i] = tr.time(k, i);
        }
        policy.vjp_batch(tk, tr.x[k], tr.cache[k], g, opts.policy_jacobian ? &next : nullptr,
                         opts.param_sum ? &out.param_grad : nullptr,
                         opts.param_per_path ? &out.param_grad_paths : nullptr);
        lam.swap(next);
        if (opts.keep_all) {
            out.lambda[k] = lam;
            out.signal[k] = g;
        }
        if (k == 1) out.lambda1 = lam;
    }
    out.lambda0 = lam;
    return out;
}

void column_mean_and_error(CMatRef samples, bool antithetic, Vec& mean, Vec& std_error) {
    const auto n = samples.cols();
    const auto r = samples.rows();
    if (n == 0) throw ContractError("no samples");
    mean = pairwise_column_sum(samples) / static_cast<double>(n);
    std_error = Vec::Zero(r);
    Mat units;
    if (antithetic && n % 2 == 0) {
        units.resize(r, n / 2);
        for (Eigen::Index i = 0; i < n / 2; ++i)
            units.col(i) = 0.5 * (samples.col(2 * i) + samples.col(2 * i + 1));
    } else {
        units = samples;
    }
    const auto u = units.cols();
    if (u < 2) return;
    Mat dev = (units.colwise() - mean).array().square().matrix();
    Vec var = pairwise_column_sum(dev) / static_cast<double>(u - 1);
    std_error = (var.array() / static_cast<double>(u)).sqrt().matrix();
}

CostateEstimate mc_costate(const ControlProblem& problem, const FeedbackPolicy& policy,
                           const DiscountKernel& kernel, double t, CVecRef x,
                           const CostateOptions& opts, std::uint64_t seed) {
    const double horizon = problem.horizon();
    if (!std::isfinite(t) || t >= horizon || t < 0.0)
        throw DomainError("costate query time must lie in [0, T)");
    if (opts.paths < 1 || opts.steps < 1) throw DomainError("M_MC and N' must be >= 1");
    if (opts.antithetic && opts.paths % 2 != 0)
        throw DomainError("antithetic sampling needs an even M_MC");
    if (x.size() != problem.state_dim()) throw ContractError("query state dimension mismatch");
    const int d = problem.state_dim();
    const int q = problem.noise_dim();
    const int mpaths = opts.paths;
    const int nchunks = (mpaths + chunk_size - 1) / chunk_size;

    Mat lam(d, mpaths);
    Mat zs;
    if (opts.want_z) zs.resize(d * q, mpaths);
    ReverseOptions ro;
    ro.keep_all = false;
    ro.param_sum = false;
    parallel_for(static_cast<std::size_t>(nchunks), [&](std::size_t c) {
        const int lo = static_cast<int>(c) * chunk_size;
        const int n = std::min(chunk_size, mpaths - lo);
        std::vector<NoiseStream> noise;
        noise.reserve(n);
        for (int j = 0; j < n; ++j) noise.push_back(batch_stream(seed, lo + j, opts.antithetic));
        Vec t0 = Vec::Constant(n, t);
        Mat x0 = x.replicate(1, n);
        Trajectory tr = simulate_paths(problem, policy, kernel, t0, x0, opts.steps, noise, TapeLevel::Full);
        PathwiseAdjoint adj = reverse_pass(tr, policy, ro);
        lam.middleCols(lo, n) = adj.lambda0;
        if (opts.want_z) {
            for (int j = 0; j < n; ++j) {
                Mat zj = adj.lambda1.col(j) * tr.dw[0].col(j).transpose() / tr.dt[j];
                zs.col(lo + j) = Eigen::Map<const Vec>(zj.data(), d * q);
            }
        }
    });

    CostateEstimate est;
    est.t = t;
    est.x = x;
    est.samples = mpaths;
    est.steps = opts.steps;
    column_mean_and_error(lam, opts.antithetic, est.lambda, est.std_error);
    if (opts.want_z) {
        Vec zm, zse;
        column_mean_and_error(zs, opts.antithetic, zm, zse);
        est.has_z = true;
        est.z = Eigen::Map<const Mat>(zm.data(), d, q);
        est.z_std_error = Eigen::Map<const Mat>(zse.data(), d, q);
    }
    return est;
}

Mat estimate_z(const ControlProblem& problem, const FeedbackPolicy& policy,
               const DiscountKernel& kernel, double t, CVecRef x, CostateOptions opts,
               std::uint64_t seed) {
    opts.want_z = true;
    return mc_costate(problem, policy, kernel, t, x, opts, seed).z;
}

Vec terminal_costate(const ControlProblem& problem, CVecRef x) {
    Vec g(problem.state_dim());
    problem.terminal_grad(x, g);
    return g;
}

std::vector<BridgeResult> bridge_residuals(const ControlProblem& problem,
                                           const FeedbackPolicy& policy,
                                           const DiscountKernel& kernel, const BridgeConfig& cfg,
                                           double prefix_time, const std::vector<double>& dts,
                                           std::uint64_t seed) {
    const double horizon = problem.horizon();
    const int d = problem.state_dim();
    const int m = problem.control_dim();
    const int q = problem.noise_dim();
    if (cfg.x0.size() != d) throw ContractError("bridge anchor state dimension mismatch");
    if (!(cfg.fine_step > 0.0)) throw DomainError("fine step must be positive");
    if (cfg.inner < 2 || (cfg.antithetic && cfg.inner % 2 != 0))
        throw DomainError("M_inner must be >= 2 (and even when antithetic)");
    auto as_steps = [&](double span, const char* what) {
        const double r = span / cfg.fine_step;
        const long n = std::lround(r);
        if (std::abs(r - n) > 1e-6) throw DomainError(std::string(what) + " is not a multiple of the fine step");
        return static_cast<int>(n);
    };
    const int nfine = as_steps(horizon - cfg.t0, "horizon minus anchor time");
    const int kf = as_steps(prefix_time - cfg.t0, "prefix time");
    if (kf < 0 || kf >= nfine) throw DomainError("prefix time must lie in [t0, T)");
    std::vector<int> reps;
    for (double dt : dts) {
        const int r = as_steps(dt, "coarse step");
        if (r < 1 || kf + r > nfine) throw DomainError("coarse step leaves the horizon");
        reps.push_back(r);
    }
    const int nd = static_cast<int>(dts.size());
    const int inner = cfg.inner;

    std::vector<Mat> lam_a(nd, Mat(d, inner)), lam_b(nd, Mat(d, inner)), zsamp(nd, Mat(d * q, inner)),
        rho_s(nd, Mat(d, inner));
    Mat prefix_x(d, 1), prefix_u(m, 1);
    double disc_k = 0.0, t_k = 0.0, h = 0.0;
    Vec lx(d), lu(m);
    Mat bx(d, d), bu(d, m);
    std::vector<Mat> sx, su;
    Mat jx(m, d);

    ReverseOptions ro;
    ro.param_sum = false;
    const int nchunks = (inner + kBridgeChunk - 1) / kBridgeChunk;
    // Chunk 0 first: it fixes the shared prefix quantities used by every branch.
    auto run_chunk = [&](std::size_t c) {
        const int lo = static_cast<int>(c) * kBridgeChunk;
        const int n = std::min(kBridgeChunk, inner - lo);
        std::vector<NoiseStream> noise;
        noise.reserve(n);
        for (int j = 0; j < n; ++j)
            noise.push_back(batch_stream(seed, lo + j, cfg.antithetic)
                                .with_shared_prefix(kPrefixPath, static_cast<std::uint64_t>(kf)));
        Vec t0 = Vec::Constant(n, cfg.t0);
        Mat x0 = cfg.x0.replicate(1, n);
        Trajectory tr = simulate_paths(problem, policy, kernel, t0, x0, nfine, noise, TapeLevel::Full);
        PathwiseAdjoint adj = reverse_pass(tr, policy, ro);
        if (c == 0) {
            h = tr.dt[0];
            t_k = tr.time(kf, 0);
            prefix_x = tr.x[kf].col(0);
            prefix_u = tr.u[kf].col(0);
            disc_k = tr.discount(kf, 0);
            lx = tr.lx[kf].col(0);
            lu = tr.lu[kf].col(0);
            bx = tr.bx[kf].middleCols(0, d);
            bu = tr.bu[kf].middleCols(0, m);
            sx.clear();
            su.clear();
            for (int j = 0; j < q; ++j) {
                if (!tr.sx.empty()) sx.push_back(tr.sx[kf].middleCols(j * d, d));
                if (!tr.su.empty()) su.push_back(tr.su[kf].middleCols(j * m, m));
            }
            jx = policy.state_jacobian(t_k, prefix_x.col(0));
        }
        for (int a = 0; a < nd; ++a) {
            const int r = reps[a];
            const double dt = r * tr.dt[0];
            for (int j = 0; j < n; ++j) {
                Vec dw = Vec::Zero(q);
                for (int s = kf; s < kf + r; ++s) dw += tr.dw[s].col(j);
                Vec la = adj.lambda[kf].col(j);
                Vec lb = adj.lambda[kf + r].col(j);
                Mat z = lb * dw.transpose() / dt;
                // d_x H and d_u H are affine in (lambda, Z): per-branch plug-ins average
                // to the conditional plug-ins exactly.
                Vec hx = disc_k * lx + bx.transpose() * lb;
                Vec hu = disc_k * lu + bu.transpose() * lb;
                for (int jj = 0; jj < q; ++jj) {
                    if (!sx.empty()) hx += sx[jj].transpose() * z.col(jj);
                    if (!su.empty()) hu += su[jj].transpose() * z.col(jj);
                }
                lam_a[a].col(lo + j) = la;
                lam_b[a].col(lo + j) = lb;
                zsamp[a].col(lo + j) = Eigen::Map<const Vec>(z.data(), d * q);
                rho_s[a].col(lo + j) = la - lb - (hx + jx.transpose() * hu) * dt;
            }
        }
    };
    run_chunk(0);
    if (nchunks > 1)
        parallel_for(static_cast<std::size_t>(nchunks - 1), [&](std::size_t c) { run_chunk(c + 1); });

    std::vector<BridgeResult> out;
    for (int a = 0; a < nd; ++a) {
        BridgeResult br;
        br.prefix_time = t_k;
        br.dt = reps[a] * h;
        br.state = prefix_x.col(0);
        br.control = prefix_u.col(0);
        Vec se;
        column_mean_and_error(lam_a[a], cfg.antithetic, br.lambda_k, se);
        column_mean_and_error(lam_b[a], cfg.antithetic, br.lambda_next, se);
        Vec zm;
        column_mean_and_error(zsamp[a], cfg.antithetic, zm, se);
        br.z = Eigen::Map<const Mat>(zm.data(), d, q);
        br.dx = disc_k * lx + bx.transpose() * br.lambda_next;
        br.foc = disc_k * lu + bu.transpose() * br.lambda_next;
        for (int j = 0; j < q; ++j) {
            if (!sx.empty()) br.dx += sx[j].transpose() * br.z.col(j);
            if (!su.empty()) br.foc += su[j].transpose() * br.z.col(j);
        }
        br.correction = jx.transpose() * br.foc;
        br.rho = br.lambda_k - br.lambda_next - (br.dx + br.correction) * br.dt;
        Vec rho_mean;
        column_mean_and_error(rho_s[a], cfg.antithetic, rho_mean, br.rho_std_error);
        br.rho_norm = br.rho.norm();
        br.rho_over_dt = br.rho_norm / br.dt;
        br.std_error = br.rho_std_error.norm() / br.dt;
        br.foc_norm = br.foc.norm();
        br.inconclusive = br.std_error > br.rho_over_dt;
        out.push_back(std::move(br));
    }
    return out;
}

BridgeResult bridge_residual(const ControlProblem& problem, const FeedbackPolicy& policy,
                             const DiscountKernel& kernel, const BridgeConfig& cfg,
                             double prefix_time, double dt, std::uint64_t seed) {
    return bridge_residuals(problem, policy, kernel, cfg, prefix_time, {dt}, seed).front();
}

}  // namespace pgdpo
