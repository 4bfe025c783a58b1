#pragma once

#include <cstdint>
#include <vector>

#include "pgdpo/kernels.hpp"
#include "pgdpo/linalg.hpp"
#include "pgdpo/policy.hpp"
#include "pgdpo/problems.hpp"

namespace pgdpo {

struct ProjectionConfig {
    int paths = 256;         // M_MC
    int steps = 16;          // N'
    bool antithetic = true;
    double barrier_initial = 1e-2;
    double barrier_decay = 0.1;
    double barrier_floor = 1e-8;
    int newton_max = 20;
    double tol = 1e-8;       // on the sup norm of d_u H
    double armijo = 1e-4;
    double shrink = 0.5;
    double hessian_floor = 1e-8;
    int max_backtracks = 60;
    int gradient_steps = 50;
};

struct HamiltonianEval {
    double value = 0.0;
    Vec grad;  // d_u H
    Mat hess;  // d_uu H
};

/// H = D(t0,t) l(t,x,u) + <lambda, b> + tr(Z' sigma).  `z` may be null only
/// when sigma does not depend on u.
HamiltonianEval hamiltonian(const ControlProblem& problem, const DiscountKernel& kernel, double t0,
                            double t, CVecRef x, CVecRef u, CVecRef lambda, const Mat* z);

struct HamiltonianSolve {
    Vec u;
    double value = 0.0;
    double initial_value = 0.0;
    double grad_inf = 0.0;   // sup norm of d_u H at u
    int iterations = 0;      // Newton iterations over all barrier stages
    bool converged = false;
    bool used_fallback = false;  // gradient steps were needed
    bool stalled = false;        // no ascent step found; u is the best iterate
};

/// Newton ascent on the diagonal Hamiltonian (anchor t0 = t), in log
/// coordinates for positive controls and with a log barrier when the problem
/// has constraints.  u0 must be strictly feasible.
HamiltonianSolve maximize_hamiltonian(const ControlProblem& problem, const DiscountKernel& kernel,
                                      double t, CVecRef x, CVecRef lambda, const Mat* z,
                                      CVecRef u0, const ProjectionConfig& cfg);

struct Query {
    double t = 0.0;
    Vec x;
};

struct ProjectionResult {
    double t = 0.0;
    Vec x;
    Vec u;            // projected control
    Vec u_warm;       // policy control
    Vec lambda;
    Vec lambda_std_error;
    double grad_inf = 0.0;
    double residual_projected = 0.0;  // L1 norm of d_u H at u
    double residual_warm = 0.0;       // L1 norm of d_u H at u_warm
    double h_value = 0.0;
    double h_warm = 0.0;
    int newton_iters = 0;
    bool converged = false;
    bool stalled = false;
    double wall_us = 0.0;
};

/// Whether the projection needs a Z estimate for this problem.
bool projection_needs_z(const ControlProblem& problem);

/// Stage 2 at one query: Monte-Carlo costate at the diagonal anchor, then the
/// Hamiltonian maximizer warm-started at the policy's control.
ProjectionResult project(const ControlProblem& problem, const DiscountKernel& kernel,
                         const FeedbackPolicy& policy, const Query& query,
                         const ProjectionConfig& cfg, std::uint64_t seed);

/// Queries in parallel; query i uses seed mix_seed(seed, i).
std::vector<ProjectionResult> project_grid(const ControlProblem& problem,
                                           const DiscountKernel& kernel,
                                           const FeedbackPolicy& policy,
                                           const std::vector<Query>& queries,
                                           const ProjectionConfig& cfg, std::uint64_t seed);

enum class ControlSource { Policy, Projected };

struct ResidualField {
    Vec per_point;  // L1 norm of d_u H
    double mean = 0.0;
    double max = 0.0;
};

/// Hamiltonian stationarity residual of `source` over the queries, with the
/// costate of `policy` as plug-in.
ResidualField residual_field(const ControlProblem& problem, const DiscountKernel& kernel,
                             const FeedbackPolicy& policy, const std::vector<Query>& queries,
                             ControlSource source, const ProjectionConfig& cfg, std::uint64_t seed);

ResidualField residual_from(const std::vector<ProjectionResult>& results, ControlSource source);

}  // namespace pgdpo
