#pragma once

#include <cstdint>
#include <vector>

#include "pgdpo/kernels.hpp"
#include "pgdpo/linalg.hpp"
#include "pgdpo/policy.hpp"
#include "pgdpo/problems.hpp"
#include "pgdpo/stage2.hpp"

namespace pgdpo {

/// Scalar Riccati curvature P(t) of the isotropic target-tracking problem under
/// a multiplicative kernel with rate delta(t):
///   dP/dt = delta(t) P - q_s + P^2 / r_u,  P(T) = q_T,
/// integrated backward with classical RK4 and interpolated linearly.
class RiccatiSolution {
public:
    static RiccatiSolution solve(const LqTargetParams& params, const DiscountKernel& kernel,
                                 int steps = 10000);

    double operator()(double t) const;
    double horizon() const noexcept { return horizon_; }
    const std::vector<double>& values() const noexcept { return p_; }
    int steps() const noexcept { return static_cast<int>(p_.size()) - 1; }

private:
    double horizon_ = 1.0;
    std::vector<double> p_;  // P at t_i = i T / steps
};

/// u* = -(P(t) / r_u)(x - x*).  Throws ContractError for non-multiplicative kernels.
Vec case1_reference(double t, CVecRef x, const LqTargetParams& params, const RiccatiSolution& sol);

/// Linear feedback policy built from a Riccati solution.
class RiccatiPolicy final : public FeedbackPolicy {
public:
    RiccatiPolicy(LqTargetParams params, const DiscountKernel& kernel, int steps = 10000);

    int state_dim() const override { return params_.dim; }
    int control_dim() const override { return params_.dim; }
    bool is_open_loop() const override { return false; }
    void act_batch(CVecRef t, CMatRef x, MatRef u, MatRef cache) const override;
    void vjp_batch(CVecRef t, CMatRef x, CMatRef cache, CMatRef g, Mat* state_grad, Vec* param_sum,
                   Mat* param_cols) const override;
    const RiccatiSolution& solution() const noexcept { return sol_; }

private:
    LqTargetParams params_;
    RiccatiSolution sol_;
};

/// Integral of D(t, s) over s in [t, T] in closed form.
double discount_integral(const DiscountKernel& kernel, double t, double horizon);

/// Log-utility equilibrium consumption ratio 1 / (int_t^T D(t,s) ds + eps D(t,T)).
double equilibrium_consumption(const DiscountKernel& kernel, double t, double horizon, double bequest);

struct MertonControl {
    Vec pi;
    double c = 0.0;
};

/// Hyperbolic kernel: pi* = Sigma^{-1}(mu - r), c* from the closed-form integral.
MertonControl case2_reference(double t, const MertonParams& params, const DiscountKernel& kernel);
/// Time-varying hyperbolic kernel; only k(t) at the decision time enters.
MertonControl case3_reference(double t, const MertonParams& params, const DiscountKernel& kernel);

/// Open-loop equilibrium policy (pi*, c*(t)) for any kernel with a closed-form integral.
class MertonEquilibriumPolicy final : public FeedbackPolicy {
public:
    MertonEquilibriumPolicy(MertonParams params, DiscountKernel kernel);

    int state_dim() const override { return 1; }
    int control_dim() const override { return static_cast<int>(pi_.size()) + 1; }
    bool is_open_loop() const override { return true; }
    void act_batch(CVecRef t, CMatRef x, MatRef u, MatRef cache) const override;
    void vjp_batch(CVecRef, CMatRef, CMatRef, CMatRef, Mat*, Vec*, Mat*) const override {}

    /// Multiplies the consumption output (sensitivity checks).
    void set_consumption_scale(double s) { c_scale_ = s; }

private:
    MertonParams params_;
    DiscountKernel kernel_;
    Vec pi_;
    double c_scale_ = 1.0;
};

/// Diagonal stationarity residual of a reference policy, with its own
/// Monte-Carlo costate as plug-in.
ResidualField verify_equilibrium_residual(const ControlProblem& problem,
                                          const DiscountKernel& kernel,
                                          const FeedbackPolicy& reference,
                                          const std::vector<Query>& grid,
                                          const ProjectionConfig& cfg, std::uint64_t seed);

}  // namespace pgdpo
