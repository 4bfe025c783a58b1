#pragma once

#include <cstdint>
#include <vector>

#include "pgdpo/kernels.hpp"
#include "pgdpo/linalg.hpp"
#include "pgdpo/policy.hpp"
#include "pgdpo/problems.hpp"
#include "pgdpo/rollout.hpp"

namespace pgdpo {

struct ReverseOptions {
    bool keep_all = true;          // keep lambda_k and G_k for every k
    bool param_sum = true;         // accumulate dJ/dtheta summed over paths
    bool param_per_path = false;   // P x B per-path parameter gradients
    bool policy_jacobian = true;   // include the (du/dx)' G_k term
};

/// Pathwise costates of one tape (all paths of the batch, column-wise).
struct PathwiseAdjoint {
    std::vector<Mat> lambda;   // N + 1 of d x B when keep_all, else empty
    std::vector<Mat> signal;   // N of m x B (G_k) when keep_all
    Mat lambda0;               // d x B, equals dJ/dx0
    Mat lambda1;               // d x B
    Vec param_grad;            // length P, summed over paths
    Mat param_grad_paths;      // P x B
};

/// Exact reverse sweep of the Euler rollout:
///   lambda_N = D(t0,T) grad g(X_N)
///   G_k      = d_u r_k + (d_u F_k)' lambda_{k+1}
///   lambda_k = d_x r_k + (d_x F_k)' lambda_{k+1} + (d_x u_k)' G_k
/// with r_k = D(t0,t_k) l_k dt and F_k the Euler map.  Requires a full tape.
PathwiseAdjoint reverse_pass(const Trajectory& traj, const FeedbackPolicy& policy,
                             const ReverseOptions& opts = {});

struct CostateOptions {
    int paths = 256;        // M_MC
    int steps = 16;         // N'
    bool antithetic = true;
    bool want_z = false;
};

struct CostateEstimate {
    double t = 0.0;
    Vec x;
    Vec lambda;
    Vec std_error;
    bool has_z = false;
    Mat z;           // d x q
    Mat z_std_error; // d x q
    int samples = 0;
    int steps = 0;
};

/// Average of pathwise lambda_0 over sub-rollouts anchored at (t, x) with the
/// kernel re-anchored at t.  Throws DomainError for t >= T.
CostateEstimate mc_costate(const ControlProblem& problem, const FeedbackPolicy& policy,
                           const DiscountKernel& kernel, double t, CVecRef x,
                           const CostateOptions& opts, std::uint64_t seed);

/// One-step regression mean(lambda_1 dW_0') / dt over the same sub-rollouts.
Mat estimate_z(const ControlProblem& problem, const FeedbackPolicy& policy,
               const DiscountKernel& kernel, double t, CVecRef x, CostateOptions opts,
               std::uint64_t seed);

/// Costate at the horizon: grad g(x), since D(T, T) = 1.
Vec terminal_costate(const ControlProblem& problem, CVecRef x);

struct BridgeConfig {
    double t0 = 0.0;
    Vec x0;
    double fine_step = 1.0 / 1024.0;
    int inner = 4096;  // M_inner continuations
    bool antithetic = true;
};

/// Components of the one-step costate identity on [t_k, t_k + dt].
struct BridgeResult {
    double prefix_time = 0.0;
    double dt = 0.0;
    Vec state;            // X_k on the shared prefix
    Vec control;          // u_k
    Vec lambda_k;         // E_k[lambda_k^pw]
    Vec lambda_next;      // E_k[lambda_{k+1}^pw]
    Mat z;                // E_k[lambda_{k+1}^pw dW_k'] / dt
    Vec dx;               // d_x H at (X_k, u_k) with plug-ins
    Vec foc;              // d_u H at (X_k, u_k) with plug-ins
    Vec correction;       // (d_x u)' foc
    Vec rho;              // lambda_k - lambda_next - (dx + correction) dt
    Vec rho_std_error;    // per coordinate
    double rho_norm = 0.0;
    double rho_over_dt = 0.0;
    double std_error = 0.0;  // standard error of rho_over_dt
    double foc_norm = 0.0;
    bool inconclusive = false;
};

/// Nested Monte Carlo estimate of the bridge remainder at absolute time
/// `prefix_time` for each coarse step in `dts`.  One path is simulated from
/// (cfg.t0, cfg.x0) on the fine grid up to prefix_time; `cfg.inner`
/// continuations branch from it.  Every coarse step must be a multiple of the
/// fine step and prefix_time + dt <= T.
std::vector<BridgeResult> bridge_residuals(const ControlProblem& problem,
                                           const FeedbackPolicy& policy,
                                           const DiscountKernel& kernel, const BridgeConfig& cfg,
                                           double prefix_time, const std::vector<double>& dts,
                                           std::uint64_t seed);

BridgeResult bridge_residual(const ControlProblem& problem, const FeedbackPolicy& policy,
                             const DiscountKernel& kernel, const BridgeConfig& cfg,
                             double prefix_time, double dt, std::uint64_t seed);

/// Mean and standard error of the columns of `samples`; antithetic pairs
/// (2i, 2i + 1) are averaged before the error is formed.
void column_mean_and_error(CMatRef samples, bool antithetic, Vec& mean, Vec& std_error);

}  // namespace pgdpo
