#include "pgdpo/rollout.hpp"

#include <cmath>

#include "pgdpo/csv.hpp"
#include "pgdpo/errors.hpp"
#include "pgdpo/parallel.hpp"

namespace pgdpo {

namespace {

void check_dims(const ControlProblem& problem, const FeedbackPolicy& policy) {
    if (policy.state_dim() != problem.state_dim() || policy.control_dim() != problem.control_dim())
        throw ContractError("policy dimensions do not match the problem");
}

Trajectory simulate_core(const ControlProblem& problem, const FeedbackPolicy& policy,
                         const DiscountKernel& kernel, CVecRef t0, CVecRef dt, CMatRef x0,
                         int steps, const std::vector<NoiseStream>& noise, TapeLevel level,
                         std::vector<long> ids) {
    check_dims(problem, policy);
    const int d = problem.state_dim();
    const int m = problem.control_dim();
    const int q = problem.noise_dim();
    const int b = static_cast<int>(t0.size());
    if (steps < 1) throw DomainError("rollout needs at least one step");
    if (x0.rows() != d || x0.cols() != b || static_cast<int>(noise.size()) != b)
        throw ContractError("anchor batch shape mismatch");
    if (!x0.allFinite()) throw DomainError("initial state must be finite");
    const bool full = level == TapeLevel::Full;
    const bool sx_on = full && problem.diffusion_depends_on_state();
    const bool su_on = full && problem.diffusion_depends_on_control();

    Trajectory tr;
    tr.steps = steps;
    tr.level = level;
    tr.t0 = t0;
    tr.dt = dt;
    tr.path_ids = std::move(ids);
    tr.horizon = problem.horizon();
    tr.x.assign(steps + 1, Mat(d, b));
    tr.u.assign(steps, Mat(m, b));
    tr.dw.assign(steps, Mat(q, b));
    tr.discount.resize(steps + 1, b);
    tr.running.resize(steps, b);
    tr.reward.resize(steps, b);
    tr.terminal.resize(b);
    tr.returns.resize(b);
    tr.x[0] = x0;
    if (full) {
        tr.cache.assign(steps, Mat(policy.cache_rows(), b));
        tr.bx.assign(steps, Mat(d, d * b));
        tr.bu.assign(steps, Mat(d, m * b));
        tr.lx.assign(steps, Mat(d, b));
        tr.lu.assign(steps, Mat(m, b));
        if (sx_on) tr.sx.assign(steps, Mat(d, d * q * b));
        if (su_on) tr.su.assign(steps, Mat(d, m * q * b));
        tr.terminal_grad.resize(d, b);
    }

    Mat scratch_cache(policy.cache_rows(), b);
    Vec tk(b);
    Vec drift(d);
    Mat sigma(d, q);
    for (int k = 0; k < steps; ++k) {
        for (int i = 0; i < b; ++i) tk[i] = t0[i] + k * dt[i];
        const Mat& xk = tr.x[k];
        Mat& uk = tr.u[k];
        policy.act_batch(tk, xk, uk, full ? tr.cache[k] : scratch_cache);
        Mat& xn = tr.x[k + 1];
        for (int i = 0; i < b; ++i) {
            const double t = tk[i];
            auto xi = xk.col(i);
            auto ui = uk.col(i);
            noise[i].increments(static_cast<std::uint64_t>(k), dt[i], tr.dw[k].col(i));
            problem.drift(t, xi, ui, drift);
            problem.diffusion(t, xi, ui, sigma);
            xn.col(i) = xi + drift * dt[i] + sigma * tr.dw[k].col(i);
            if (!xn.col(i).allFinite()) throw SimulationDiverged(k, tr.path_ids[i]);
            const double disc = kernel(t0[i], t);
            const double ell = problem.running_reward(t, xi, ui);
            tr.discount(k, i) = disc;
            tr.running(k, i) = ell;
            tr.reward(k, i) = (disc * ell) * dt[i];
            if (full) {
                problem.drift_jac_x(t, xi, ui, tr.bx[k].middleCols(i * d, d));
                problem.drift_jac_u(t, xi, ui, tr.bu[k].middleCols(i * m, m));
                for (int j = 0; j < q; ++j) {
                    if (sx_on)
                        problem.diffusion_jac_x(t, xi, ui, j, tr.sx[k].middleCols((i * q + j) * d, d));
                    if (su_on)
                        problem.diffusion_jac_u(t, xi, ui, j, tr.su[k].middleCols((i * q + j) * m, m));
                }
                problem.reward_grad_x(t, xi, ui, tr.lx[k].col(i));
                problem.reward_grad_u(t, xi, ui, tr.lu[k].col(i));
            }
        }
    }
    const double horizon = problem.horizon();
    for (int i = 0; i < b; ++i) {
        auto xN = tr.x[steps].col(i);
        const double disc = kernel(t0[i], horizon);
        tr.discount(steps, i) = disc;
        tr.terminal[i] = disc * problem.terminal_reward(xN);
        if (full) problem.terminal_grad(xN, tr.terminal_grad.col(i));
        double s = 0.0;
        for (int k = 0; k < steps; ++k) s += tr.reward(k, i);
        tr.returns[i] = s + tr.terminal[i];
    }
    return tr;
}

}  // namespace

Trajectory simulate(const ControlProblem& problem, const FeedbackPolicy& policy,
                    const DiscountKernel& kernel, const Anchor& anchor, double dt, int steps,
                    const NoiseStream& noise, TapeLevel level) {
    if (!std::isfinite(anchor.t0) || !std::isfinite(dt) || !(dt > 0.0))
        throw DomainError("anchor time and step must be finite, step positive");
    if (std::abs(anchor.t0 + steps * dt - problem.horizon()) > 1e-9)
        throw DomainError("t0 + N dt must equal the horizon");
    if (anchor.x0.size() != problem.state_dim()) throw ContractError("anchor state dimension mismatch");
    Vec t0 = Vec::Constant(1, anchor.t0);
    Vec dts = Vec::Constant(1, dt);
    return simulate_core(problem, policy, kernel, t0, dts, anchor.x0, steps, {noise}, level,
                         {static_cast<long>(noise.path())});
}

Trajectory simulate_paths(const ControlProblem& problem, const FeedbackPolicy& policy,
                          const DiscountKernel& kernel, CVecRef t0, CMatRef x0, int steps,
                          const std::vector<NoiseStream>& noise, TapeLevel level) {
    const double horizon = problem.horizon();
    Vec dt(t0.size());
    for (Eigen::Index i = 0; i < t0.size(); ++i) {
        if (!std::isfinite(t0[i]) || !(t0[i] < horizon) || t0[i] < 0.0)
            throw DomainError("anchor time must lie in [0, T)");
        dt[i] = (horizon - t0[i]) / steps;
    }
    std::vector<long> ids;
    ids.reserve(noise.size());
    for (const auto& n : noise) ids.push_back(static_cast<long>(n.path()));
    return simulate_core(problem, policy, kernel, t0, dt, x0, steps, noise, level, std::move(ids));
}

double anchored_return(const Trajectory& traj, const DiscountKernel& kernel, double t0, int path) {
    if (path < 0 || path >= traj.paths()) throw ContractError("path index out of range");
    if (t0 != traj.t0[path]) throw ContractError("trajectory was produced with a different anchor");
    double s = 0.0;
    for (int k = 0; k < traj.steps; ++k) {
        const double t = t0 + k * traj.dt[path];
        s += (kernel(t0, t) * traj.running(k, path)) * traj.dt[path];
    }
    return s + traj.terminal[path];
}

BatchRollout simulate_batch(const ControlProblem& problem, const FeedbackPolicy& policy,
                            const DiscountKernel& kernel, const Anchor& anchor, int steps,
                            int paths, std::uint64_t seed, bool antithetic, TapeLevel level) {
    if (paths < 1) throw DomainError("path count must be >= 1");
    if (antithetic && paths % 2 != 0) throw DomainError("antithetic batches need an even path count");
    if (anchor.x0.size() != problem.state_dim()) throw ContractError("anchor state dimension mismatch");
    const int nchunks = (paths + chunk_size - 1) / chunk_size;
    BatchRollout out;
    out.chunks.resize(nchunks);
    parallel_for(static_cast<std::size_t>(nchunks), [&](std::size_t c) {
        const int lo = static_cast<int>(c) * chunk_size;
        const int n = std::min(chunk_size, paths - lo);
        std::vector<NoiseStream> noise;
        noise.reserve(n);
        for (int j = 0; j < n; ++j) noise.push_back(batch_stream(seed, lo + j, antithetic));
        Vec t0 = Vec::Constant(n, anchor.t0);
        Mat x0 = anchor.x0.replicate(1, n);
        out.chunks[c] = simulate_paths(problem, policy, kernel, t0, x0, steps, noise, level);
    });
    out.returns.resize(paths);
    for (int c = 0; c < nchunks; ++c)
        out.returns.segment(c * chunk_size, out.chunks[c].paths()) = out.chunks[c].returns;
    out.mean_return = pairwise_sum(out.returns.data(), static_cast<std::size_t>(paths)) / paths;
    return out;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          std::uint64_t config_hash, std::uint64_t seed) {
    const int d = static_cast<int>(traj.x[0].rows());
    const int m = traj.u.empty() ? 0 : static_cast<int>(traj.u[0].rows());
    std::vector<std::string> cols{"path", "k", "t"};
    for (int j = 0; j < d; ++j) cols.push_back("X_" + std::to_string(j + 1));
    for (int j = 0; j < m; ++j) cols.push_back("u_" + std::to_string(j + 1));
    cols.push_back("reward_k");
    CsvWriter w(path, cols, config_hash, seed);
    for (int i = 0; i < traj.paths(); ++i) {
        for (int k = 0; k <= traj.steps; ++k) {
            w << static_cast<long long>(traj.path_ids[i]) << k << traj.time(k, i);
            for (int j = 0; j < d; ++j) w << traj.x[k](j, i);
            if (k < traj.steps) {
                for (int j = 0; j < m; ++j) w << traj.u[k](j, i);
                w << traj.reward(k, i);
            } else {
                for (int j = 0; j < m; ++j) w << "";
                w << traj.terminal[i];
            }
            w.end_row();
        }
    }
}

}  // namespace pgdpo
