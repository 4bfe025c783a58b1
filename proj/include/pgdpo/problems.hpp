#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pgdpo/linalg.hpp"

namespace pgdpo {

/// Controlled diffusion dX = b(t,X,u) dt + sigma(t,X,u) dW with running reward
/// l(t,x,u), terminal reward g(x) and optional inequality constraints
/// g_i(u,x) <= 0.  Rewards are maximized.
///
/// Every first partial used by the reverse pass, and the second partials in u
/// used by the Hamiltonian solver, are supplied analytically.  Implementations
/// are immutable after construction and all evaluation methods are reentrant.
/// Output arguments must be pre-sized by the caller.
class ControlProblem {
public:
    ControlProblem(int state_dim, int control_dim, int noise_dim, double horizon);
    virtual ~ControlProblem() = default;

    int state_dim() const noexcept { return d_; }
    int control_dim() const noexcept { return m_; }
    int noise_dim() const noexcept { return q_; }
    double horizon() const noexcept { return horizon_; }

    virtual std::string name() const = 0;

    virtual void drift(double t, CVecRef x, CVecRef u, VecRef out) const = 0;
    /// d x q matrix; column j is sigma^(j).
    virtual void diffusion(double t, CVecRef x, CVecRef u, MatRef out) const = 0;
    virtual double running_reward(double t, CVecRef x, CVecRef u) const = 0;
    virtual double terminal_reward(CVecRef x) const = 0;

    virtual void drift_jac_x(double t, CVecRef x, CVecRef u, MatRef out) const = 0;  // d x d
    virtual void drift_jac_u(double t, CVecRef x, CVecRef u, MatRef out) const = 0;  // d x m
    /// d x d Jacobian of column j of sigma with respect to x.
    virtual void diffusion_jac_x(double t, CVecRef x, CVecRef u, int j, MatRef out) const = 0;
    /// d x m Jacobian of column j of sigma with respect to u.
    virtual void diffusion_jac_u(double t, CVecRef x, CVecRef u, int j, MatRef out) const = 0;
    virtual void reward_grad_x(double t, CVecRef x, CVecRef u, VecRef out) const = 0;
    virtual void reward_grad_u(double t, CVecRef x, CVecRef u, VecRef out) const = 0;
    virtual void terminal_grad(CVecRef x, VecRef out) const = 0;

    virtual void reward_hess_uu(double t, CVecRef x, CVecRef u, MatRef out) const = 0;
    /// Hessian in u of <p, b(t,x,u)>.
    virtual void drift_hess_uu(double t, CVecRef x, CVecRef u, CVecRef p, MatRef out) const = 0;
    /// Hessian in u of <Z, sigma(t,x,u)>_F.
    virtual void diffusion_hess_uu(double t, CVecRef x, CVecRef u, CMatRef z, MatRef out) const = 0;

    /// Structural flags let the tape skip identically-zero Jacobians.
    virtual bool diffusion_depends_on_state() const = 0;
    virtual bool diffusion_depends_on_control() const = 0;

    /// True when the adjoint's martingale coefficient is known to vanish at the
    /// Pontryagin point, so the Hamiltonian may be maximized with Z = 0.
    virtual bool martingale_coefficient_vanishes() const { return false; }

    /// Control coordinates restricted to (0, inf); Stage 2 solves in log coordinates.
    virtual std::vector<int> positive_controls() const { return {}; }
    /// True when u lies in the open admissible set (positivity and constraints).
    bool admissible(CVecRef x, CVecRef u) const;

    virtual int constraint_count() const { return 0; }
    virtual void constraints(CVecRef u, CVecRef x, VecRef out) const;
    virtual void constraint_grad_u(CVecRef u, CVecRef x, int i, VecRef out) const;
    virtual void constraint_hess_uu(CVecRef u, CVecRef x, int i, MatRef out) const;

private:
    int d_, m_, q_;
    double horizon_;
};

struct LqTargetParams {
    int dim = 5;
    Vec target;                 // empty means the origin
    double state_weight = 1.0;  // q_s
    double control_weight = 0.5;  // r_u
    double terminal_weight = 1.0;  // q_T
    double noise = 0.2;           // sigma0
    double horizon = 1.0;
};

/// Fully actuated target tracking: b = u, sigma = sigma0 I,
/// l = -(q_s |x - x*|^2 + r_u |u|^2), g = -q_T |x - x*|^2.
class LqTargetProblem final : public ControlProblem {
public:
    explicit LqTargetProblem(LqTargetParams params);

    std::string name() const override { return "case1_lq"; }
    const LqTargetParams& params() const noexcept { return p_; }
    const Vec& target() const noexcept { return p_.target; }

    void drift(double t, CVecRef x, CVecRef u, VecRef out) const override;
    void diffusion(double t, CVecRef x, CVecRef u, MatRef out) const override;
    double running_reward(double t, CVecRef x, CVecRef u) const override;
    double terminal_reward(CVecRef x) const override;
    void drift_jac_x(double t, CVecRef x, CVecRef u, MatRef out) const override;
    void drift_jac_u(double t, CVecRef x, CVecRef u, MatRef out) const override;
    void diffusion_jac_x(double t, CVecRef x, CVecRef u, int j, MatRef out) const override;
    void diffusion_jac_u(double t, CVecRef x, CVecRef u, int j, MatRef out) const override;
    void reward_grad_x(double t, CVecRef x, CVecRef u, VecRef out) const override;
    void reward_grad_u(double t, CVecRef x, CVecRef u, VecRef out) const override;
    void terminal_grad(CVecRef x, VecRef out) const override;
    void reward_hess_uu(double t, CVecRef x, CVecRef u, MatRef out) const override;
    void drift_hess_uu(double t, CVecRef x, CVecRef u, CVecRef p, MatRef out) const override;
    void diffusion_hess_uu(double t, CVecRef x, CVecRef u, CMatRef z, MatRef out) const override;
    bool diffusion_depends_on_state() const override { return false; }
    bool diffusion_depends_on_control() const override { return false; }

private:
    LqTargetParams p_;
};

struct MertonParams {
    Vec excess_return;  // mu - r 1, length d
    Mat covariance;     // Sigma, SPD d x d
    double rate = 0.02;
    double bequest = 0.2;  // epsilon
    double horizon = 1.0;
};

/// Log-utility consumption/investment on log-wealth y.
///
/// Controls u = (pi_1..pi_d, c) with c the consumption-to-wealth ratio;
/// dy = (r + pi'(mu - r) - c - pi' Sigma pi / 2) dt + pi' L dW with Sigma = L L',
/// l = log c + y, g = epsilon y.
class MertonLogProblem final : public ControlProblem {
public:
    MertonLogProblem(MertonParams params, std::string label);

    std::string name() const override { return label_; }
    const MertonParams& params() const noexcept { return p_; }
    int assets() const noexcept { return control_dim() - 1; }
    const Mat& cholesky() const noexcept { return chol_; }
    /// Sigma^{-1} (mu - r 1).
    const Vec& merton_fraction() const noexcept { return merton_; }

    void drift(double t, CVecRef x, CVecRef u, VecRef out) const override;
    void diffusion(double t, CVecRef x, CVecRef u, MatRef out) const override;
    double running_reward(double t, CVecRef x, CVecRef u) const override;
    double terminal_reward(CVecRef x) const override;
    void drift_jac_x(double t, CVecRef x, CVecRef u, MatRef out) const override;
    void drift_jac_u(double t, CVecRef x, CVecRef u, MatRef out) const override;
    void diffusion_jac_x(double t, CVecRef x, CVecRef u, int j, MatRef out) const override;
    void diffusion_jac_u(double t, CVecRef x, CVecRef u, int j, MatRef out) const override;
    void reward_grad_x(double t, CVecRef x, CVecRef u, VecRef out) const override;
    void reward_grad_u(double t, CVecRef x, CVecRef u, VecRef out) const override;
    void terminal_grad(CVecRef x, VecRef out) const override;
    void reward_hess_uu(double t, CVecRef x, CVecRef u, MatRef out) const override;
    void drift_hess_uu(double t, CVecRef x, CVecRef u, CVecRef p, MatRef out) const override;
    void diffusion_hess_uu(double t, CVecRef x, CVecRef u, CMatRef z, MatRef out) const override;
    bool diffusion_depends_on_state() const override { return false; }
    bool diffusion_depends_on_control() const override { return true; }
    bool martingale_coefficient_vanishes() const override { return true; }
    std::vector<int> positive_controls() const override { return {assets()}; }

private:
    MertonParams p_;
    std::string label_;
    Mat chol_;
    Vec merton_;
};

std::shared_ptr<const LqTargetProblem> make_case1_lq(LqTargetParams params);
std::shared_ptr<const MertonLogProblem> make_case2_merton(MertonParams params);
/// Same dynamics and rewards as Case 2; the time-varying kernel is attached at run level.
std::shared_ptr<const MertonLogProblem> make_case3_resource(MertonParams params);

/// Reproducible market: Sigma = A A' + 0.01 I with A seeded, excess returns in [0.02, 0.08].
MertonParams generate_market(int assets, unsigned long long seed, double bequest = 0.2,
                             double horizon = 1.0);

}  // namespace pgdpo
