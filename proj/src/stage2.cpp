#include "pgdpo/stage2.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "pgdpo/adjoint.hpp"
#include "pgdpo/errors.hpp"
#include "pgdpo/noise.hpp"
#include "pgdpo/parallel.hpp"

namespace pgdpo {

HamiltonianEval hamiltonian(const ControlProblem& problem, const DiscountKernel& kernel, double t0,
                            double t, CVecRef x, CVecRef u, CVecRef lambda, const Mat* z) {
    const int d = problem.state_dim();
    const int m = problem.control_dim();
    const int q = problem.noise_dim();
    if (z == nullptr && problem.diffusion_depends_on_control())
        throw ContractError("Z is required when the diffusion depends on the control");
    if (z != nullptr && (z->rows() != d || z->cols() != q)) throw ContractError("Z must be d x q");
    if (lambda.size() != d || u.size() != m || x.size() != d)
        throw ContractError("Hamiltonian argument dimension mismatch");
    const double disc = kernel(t0, t);

    HamiltonianEval h;
    Vec b(d);
    Mat bu(d, m);
    Vec lu(m);
    Mat tmp(m, m);
    problem.drift(t, x, u, b);
    problem.drift_jac_u(t, x, u, bu);
    problem.reward_grad_u(t, x, u, lu);
    h.value = disc * problem.running_reward(t, x, u) + lambda.dot(b);
    h.grad = disc * lu + bu.transpose() * lambda;
    h.hess.resize(m, m);
    problem.reward_hess_uu(t, x, u, h.hess);
    h.hess *= disc;
    problem.drift_hess_uu(t, x, u, lambda, tmp);
    h.hess += tmp;
    if (z != nullptr) {
        Mat sigma(d, q);
        problem.diffusion(t, x, u, sigma);
        h.value += (z->array() * sigma.array()).sum();
        Mat su(d, m);
        for (int j = 0; j < q; ++j) {
            problem.diffusion_jac_u(t, x, u, j, su);
            h.grad += su.transpose() * z->col(j);
        }
        problem.diffusion_hess_uu(t, x, u, *z, tmp);
        h.hess += tmp;
    }
    return h;
}

namespace {

struct Objective {
    const ControlProblem& problem;
    const DiscountKernel& kernel;
    double t;
    CVecRef x;
    CVecRef lambda;
    const Mat* z;
    std::vector<int> positive;
    int nc;

    Vec to_u(const Vec& s) const {
        Vec u = s;
        for (int i : positive) u[i] = std::exp(s[i]);
        return u;
    }
    Vec to_s(CVecRef u) const {
        Vec s = u;
        for (int i : positive) s[i] = std::log(u[i]);
        return s;
    }
    bool feasible(const Vec& u) const {
        for (int i : positive)
            if (!(u[i] > 0.0) || !std::isfinite(u[i])) return false;
        if (!u.allFinite()) return false;
        if (nc == 0) return true;
        Vec g(nc);
        problem.constraints(u, x, g);
        return (g.array() < 0.0).all();
    }
    // Value, gradient and Hessian of H + mu sum log(-g_i) in s coordinates.
    void eval(const Vec& s, double mu, double& value, Vec* grad_s, Mat* hess_s,
              Vec* grad_u) const {
        const Vec u = to_u(s);
        HamiltonianEval h = hamiltonian(problem, kernel, t, t, x, u, lambda, z);
        const int m = static_cast<int>(u.size());
        value = h.value;
        Vec gu = h.grad;
        Mat hu = h.hess;
        if (grad_u) *grad_u = h.grad;
        if (nc > 0) {
            Vec g(nc);
            problem.constraints(u, x, g);
            Vec gi(m);
            Mat hi(m, m);
            for (int i = 0; i < nc; ++i) {
                value += mu * std::log(-g[i]);
                problem.constraint_grad_u(u, x, i, gi);
                gu += mu * gi / g[i];
                if (hess_s) {
                    problem.constraint_hess_uu(u, x, i, hi);
                    hu += mu * (hi / g[i] - gi * gi.transpose() / (g[i] * g[i]));
                }
            }
        }
        if (grad_s || hess_s) {
            Vec jac = Vec::Ones(m);
            for (int i : positive) jac[i] = u[i];
            if (grad_s) *grad_s = jac.cwiseProduct(gu);
            if (hess_s) {
                *hess_s = jac.asDiagonal() * hu * jac.asDiagonal();
                for (int i : positive) (*hess_s)(i, i) += u[i] * gu[i];
            }
        }
    }
};

// Sup norm of the convergence measure: d_u H unconstrained, the barrier
// gradient in s otherwise.
double measure(const Objective& obj, const Vec& s, double mu) {
    double v;
    Vec gs, gu;
    obj.eval(s, mu, v, &gs, nullptr, &gu);
    if (obj.nc == 0) return gu.lpNorm<Eigen::Infinity>();
    return gs.lpNorm<Eigen::Infinity>();
}

}  // namespace

HamiltonianSolve maximize_hamiltonian(const ControlProblem& problem, const DiscountKernel& kernel,
                                      double t, CVecRef x, CVecRef lambda, const Mat* z,
                                      CVecRef u0, const ProjectionConfig& cfg) {
    if (!(cfg.tol > 0.0)) throw DomainError("tol_H must be > 0");
    Objective obj{problem, kernel, t, x, lambda, z, problem.positive_controls(),
                  problem.constraint_count()};
    if (obj.nc > 0 && !(cfg.barrier_floor > 0.0)) throw DomainError("barrier floor must be > 0");
    if (!obj.feasible(u0)) throw ContractError("warm start must be strictly feasible");

    HamiltonianSolve out;
    Vec s = obj.to_s(u0);
    {
        HamiltonianEval h0 = hamiltonian(problem, kernel, t, t, x, u0, lambda, z);
        out.initial_value = h0.value;
    }
    std::vector<double> stages;
    if (obj.nc == 0) {
        stages.push_back(0.0);
    } else {
        for (double mu = cfg.barrier_initial; mu > cfg.barrier_floor * (1.0 + 1e-12); mu *= cfg.barrier_decay)
            stages.push_back(mu);
        stages.push_back(cfg.barrier_floor);
    }

    for (double mu : stages) {
        for (int it = 0; it < cfg.newton_max; ++it) {
            double val;
            Vec gs;
            Mat hs;
            obj.eval(s, mu, val, &gs, &hs, nullptr);
            if (measure(obj, s, mu) <= cfg.tol) break;
            ++out.iterations;
            // Ascent direction from the negated Hessian with eigenvalues floored.
            Eigen::SelfAdjointEigenSolver<Mat> es(-0.5 * (hs + hs.transpose()));
            Vec ev = es.eigenvalues().cwiseMax(cfg.hessian_floor);
            Vec dir = es.eigenvectors() * (es.eigenvectors().transpose() * gs).cwiseQuotient(ev);
            if (!dir.allFinite()) dir = gs;

            auto line_search = [&](const Vec& p, Vec& s_new) {
                const double slope = gs.dot(p);
                const double m_old = measure(obj, s, mu);
                double alpha = 1.0;
                for (int bt = 0; bt < cfg.max_backtracks; ++bt, alpha *= cfg.shrink) {
                    Vec cand = s + alpha * p;
                    Vec uc = obj.to_u(cand);
                    if (!obj.feasible(uc)) continue;
                    double vc;
                    obj.eval(cand, mu, vc, nullptr, nullptr, nullptr);
                    if (!std::isfinite(vc)) continue;
                    if (vc >= val + cfg.armijo * alpha * slope ||
                        (vc >= val && measure(obj, cand, mu) < m_old)) {
                        s_new = cand;
                        return true;
                    }
                }
                return false;
            };
            Vec s_new;
            if (line_search(dir, s_new)) {
                s = s_new;
                continue;
            }
            out.used_fallback = true;
            bool moved = false;
            for (int g = 0; g < cfg.gradient_steps; ++g) {
                obj.eval(s, mu, val, &gs, nullptr, nullptr);
                if (!line_search(gs, s_new)) break;
                s = s_new;
                moved = true;
            }
            if (!moved) {
                out.stalled = true;
                break;
            }
        }
        if (out.stalled) break;
    }

    out.u = obj.to_u(s);
    HamiltonianEval hf = hamiltonian(problem, kernel, t, t, x, out.u, lambda, z);
    out.value = hf.value;
    out.grad_inf = hf.grad.lpNorm<Eigen::Infinity>();
    out.converged = obj.nc == 0 ? out.grad_inf <= cfg.tol : measure(obj, s, stages.back()) <= cfg.tol;
    return out;
}

bool projection_needs_z(const ControlProblem& problem) {
    return problem.diffusion_depends_on_control() && !problem.martingale_coefficient_vanishes();
}

ProjectionResult project(const ControlProblem& problem, const DiscountKernel& kernel,
                         const FeedbackPolicy& policy, const Query& query,
                         const ProjectionConfig& cfg, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    CostateOptions co;
    co.paths = cfg.paths;
    co.steps = cfg.steps;
    co.antithetic = cfg.antithetic;
    co.want_z = projection_needs_z(problem);
    CostateEstimate est = mc_costate(problem, policy, kernel, query.t, query.x, co, seed);

    Mat z;
    const Mat* zp = nullptr;
    if (est.has_z) {
        z = est.z;
        zp = &z;
    } else if (problem.diffusion_depends_on_control()) {
        z = Mat::Zero(problem.state_dim(), problem.noise_dim());
        zp = &z;
    }

    ProjectionResult r;
    r.t = query.t;
    r.x = query.x;
    r.lambda = est.lambda;
    r.lambda_std_error = est.std_error;
    r.u_warm = policy.act(query.t, query.x);
    HamiltonianSolve sol =
        maximize_hamiltonian(problem, kernel, query.t, query.x, est.lambda, zp, r.u_warm, cfg);
    r.u = sol.u;
    r.grad_inf = sol.grad_inf;
    r.h_value = sol.value;
    r.h_warm = sol.initial_value;
    r.newton_iters = sol.iterations;
    r.converged = sol.converged;
    r.stalled = sol.stalled;
    r.residual_projected =
        hamiltonian(problem, kernel, query.t, query.t, query.x, r.u, est.lambda, zp).grad.lpNorm<1>();
    r.residual_warm =
        hamiltonian(problem, kernel, query.t, query.t, query.x, r.u_warm, est.lambda, zp).grad.lpNorm<1>();
    r.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<ProjectionResult> project_grid(const ControlProblem& problem,
                                           const DiscountKernel& kernel,
                                           const FeedbackPolicy& policy,
                                           const std::vector<Query>& queries,
                                           const ProjectionConfig& cfg, std::uint64_t seed) {
    std::vector<ProjectionResult> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) {
        out[i] = project(problem, kernel, policy, queries[i], cfg, mix_seed(seed, i));
    });
    return out;
}

ResidualField residual_from(const std::vector<ProjectionResult>& results, ControlSource source) {
    ResidualField f;
    f.per_point.resize(static_cast<Eigen::Index>(results.size()));
    for (std::size_t i = 0; i < results.size(); ++i)
        f.per_point[static_cast<Eigen::Index>(i)] =
            source == ControlSource::Projected ? results[i].residual_projected : results[i].residual_warm;
    if (!results.empty()) {
        f.mean = pairwise_sum(f.per_point.data(), results.size()) / static_cast<double>(results.size());
        f.max = f.per_point.maxCoeff();
    }
    return f;
}

ResidualField residual_field(const ControlProblem& problem, const DiscountKernel& kernel,
                             const FeedbackPolicy& policy, const std::vector<Query>& queries,
                             ControlSource source, const ProjectionConfig& cfg, std::uint64_t seed) {
    if (queries.empty()) throw DomainError("residual grid must be non-empty");
    return residual_from(project_grid(problem, kernel, policy, queries, cfg, seed), source);
}

}  // namespace pgdpo
