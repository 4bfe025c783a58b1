#include "pgdpo/problems.hpp"

#include <cmath>

#include "pgdpo/errors.hpp"
#include "pgdpo/noise.hpp"

namespace pgdpo {

ControlProblem::ControlProblem(int state_dim, int control_dim, int noise_dim, double horizon)
    : d_(state_dim), m_(control_dim), q_(noise_dim), horizon_(horizon) {
    if (d_ < 1 || m_ < 1 || q_ < 1) throw ConstructionError("problem dimensions must be positive");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw ConstructionError("horizon must be positive and finite");
}

bool ControlProblem::admissible(CVecRef x, CVecRef u) const {
    for (int i : positive_controls())
        if (!(u[i] > 0.0)) return false;
    const int nc = constraint_count();
    if (nc == 0) return true;
    Vec g(nc);
    constraints(u, x, g);
    return (g.array() < 0.0).all();
}

void ControlProblem::constraints(CVecRef, CVecRef, VecRef) const {}
void ControlProblem::constraint_grad_u(CVecRef, CVecRef, int, VecRef out) const { out.setZero(); }
void ControlProblem::constraint_hess_uu(CVecRef, CVecRef, int, MatRef out) const { out.setZero(); }

// ---------------------------------------------------------------------------
// Case 1

LqTargetProblem::LqTargetProblem(LqTargetParams params)
    : ControlProblem(params.dim, params.dim, params.dim, params.horizon), p_(std::move(params)) {
    if (!(p_.control_weight > 0.0))
        throw ConstructionError("control weight r_u must be > 0 (Hamiltonian unbounded in u)");
    if (p_.state_weight < 0.0 || p_.terminal_weight < 0.0)
        throw ConstructionError("state and terminal weights must be >= 0");
    if (!(p_.noise > 0.0)) {
        // sigma0 = 0 is allowed for deterministic diagnostics; negative is not.
        if (p_.noise < 0.0) throw ConstructionError("noise level must be >= 0");
    }
    if (p_.target.size() == 0) p_.target = Vec::Zero(p_.dim);
    if (p_.target.size() != p_.dim) throw ConstructionError("target dimension mismatch");
}

void LqTargetProblem::drift(double, CVecRef, CVecRef u, VecRef out) const { out = u; }

void LqTargetProblem::diffusion(double, CVecRef, CVecRef, MatRef out) const {
    out.setZero();
    out.diagonal().setConstant(p_.noise);
}

double LqTargetProblem::running_reward(double, CVecRef x, CVecRef u) const {
    return -(p_.state_weight * (x - p_.target).squaredNorm() + p_.control_weight * u.squaredNorm());
}

double LqTargetProblem::terminal_reward(CVecRef x) const {
    return -p_.terminal_weight * (x - p_.target).squaredNorm();
}

void LqTargetProblem::drift_jac_x(double, CVecRef, CVecRef, MatRef out) const { out.setZero(); }

void LqTargetProblem::drift_jac_u(double, CVecRef, CVecRef, MatRef out) const {
    out.setIdentity();
}

void LqTargetProblem::diffusion_jac_x(double, CVecRef, CVecRef, int, MatRef out) const {
    out.setZero();
}

void LqTargetProblem::diffusion_jac_u(double, CVecRef, CVecRef, int, MatRef out) const {
    out.setZero();
}

void LqTargetProblem::reward_grad_x(double, CVecRef x, CVecRef, VecRef out) const {
    out = -2.0 * p_.state_weight * (x - p_.target);
}

void LqTargetProblem::reward_grad_u(double, CVecRef, CVecRef u, VecRef out) const {
    out = -2.0 * p_.control_weight * u;
}

void LqTargetProblem::terminal_grad(CVecRef x, VecRef out) const {
    out = -2.0 * p_.terminal_weight * (x - p_.target);
}

void LqTargetProblem::reward_hess_uu(double, CVecRef, CVecRef, MatRef out) const {
    out.setZero();
    out.diagonal().setConstant(-2.0 * p_.control_weight);
}

void LqTargetProblem::drift_hess_uu(double, CVecRef, CVecRef, CVecRef, MatRef out) const {
    out.setZero();
}

void LqTargetProblem::diffusion_hess_uu(double, CVecRef, CVecRef, CMatRef, MatRef out) const {
    out.setZero();
}

// ---------------------------------------------------------------------------
// Cases 2 and 3

MertonLogProblem::MertonLogProblem(MertonParams params, std::string label)
    : ControlProblem(1, static_cast<int>(params.excess_return.size()) + 1,
                     static_cast<int>(params.excess_return.size()), params.horizon),
      p_(std::move(params)), label_(std::move(label)) {
    const auto n = p_.excess_return.size();
    if (p_.covariance.rows() != n || p_.covariance.cols() != n)
        throw ConstructionError("covariance must be d x d");
    if (!p_.covariance.isApprox(p_.covariance.transpose(), 1e-12))
        throw ConstructionError("covariance must be symmetric");
    Eigen::LLT<Mat> llt(p_.covariance);
    if (llt.info() != Eigen::Success) throw ConstructionError("covariance must be positive definite");
    chol_ = llt.matrixL();
    if ((chol_.diagonal().array() <= 0.0).any())
        throw ConstructionError("covariance must be positive definite");
    merton_ = llt.solve(p_.excess_return);
    if (p_.bequest < 0.0) throw ConstructionError("bequest weight must be >= 0");
}

void MertonLogProblem::drift(double, CVecRef, CVecRef u, VecRef out) const {
    const int n = assets();
    auto pi = u.head(n);
    out[0] = p_.rate + pi.dot(p_.excess_return) - u[n] - 0.5 * pi.dot(p_.covariance * pi);
}

void MertonLogProblem::diffusion(double, CVecRef, CVecRef u, MatRef out) const {
    out = (chol_.transpose() * u.head(assets())).transpose();
}

double MertonLogProblem::running_reward(double, CVecRef x, CVecRef u) const {
    return std::log(u[assets()]) + x[0];
}

double MertonLogProblem::terminal_reward(CVecRef x) const { return p_.bequest * x[0]; }

void MertonLogProblem::drift_jac_x(double, CVecRef, CVecRef, MatRef out) const { out.setZero(); }

void MertonLogProblem::drift_jac_u(double, CVecRef, CVecRef u, MatRef out) const {
    const int n = assets();
    out.leftCols(n) = (p_.excess_return - p_.covariance * u.head(n)).transpose();
    out(0, n) = -1.0;
}

void MertonLogProblem::diffusion_jac_x(double, CVecRef, CVecRef, int, MatRef out) const {
    out.setZero();
}

void MertonLogProblem::diffusion_jac_u(double, CVecRef, CVecRef, int j, MatRef out) const {
    const int n = assets();
    out.setZero();
    // sigma^(j) = sum_i pi_i L(i, j)
    out.row(0).head(n) = chol_.col(j).transpose();
}

void MertonLogProblem::reward_grad_x(double, CVecRef, CVecRef, VecRef out) const {
    out[0] = 1.0;
}

void MertonLogProblem::reward_grad_u(double, CVecRef, CVecRef u, VecRef out) const {
    out.setZero();
    out[assets()] = 1.0 / u[assets()];
}

void MertonLogProblem::terminal_grad(CVecRef, VecRef out) const { out[0] = p_.bequest; }

void MertonLogProblem::reward_hess_uu(double, CVecRef, CVecRef u, MatRef out) const {
    out.setZero();
    const double c = u[assets()];
    out(assets(), assets()) = -1.0 / (c * c);
}

void MertonLogProblem::drift_hess_uu(double, CVecRef, CVecRef, CVecRef p, MatRef out) const {
    const int n = assets();
    out.setZero();
    out.topLeftCorner(n, n) = -p[0] * p_.covariance;
}

void MertonLogProblem::diffusion_hess_uu(double, CVecRef, CVecRef, CMatRef, MatRef out) const {
    out.setZero();
}

std::shared_ptr<const LqTargetProblem> make_case1_lq(LqTargetParams params) {
    return std::make_shared<const LqTargetProblem>(std::move(params));
}

std::shared_ptr<const MertonLogProblem> make_case2_merton(MertonParams params) {
    return std::make_shared<const MertonLogProblem>(std::move(params), "case2_merton");
}

std::shared_ptr<const MertonLogProblem> make_case3_resource(MertonParams params) {
    return std::make_shared<const MertonLogProblem>(std::move(params), "case3_resource");
}

MertonParams generate_market(int assets, unsigned long long seed, double bequest, double horizon) {
    if (assets < 1) throw ConstructionError("market needs at least one asset");
    CounterRng rng(seed, StreamTag::Market);
    Mat a(assets, assets);
    const double scale = 0.15 / std::sqrt(static_cast<double>(assets));
    for (int i = 0; i < assets; ++i)
        for (int j = 0; j < assets; ++j)
            a(i, j) = scale * rng.normal(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0);
    MertonParams p;
    p.covariance = a * a.transpose() + 0.01 * Mat::Identity(assets, assets);
    p.covariance = 0.5 * (p.covariance + p.covariance.transpose());
    p.excess_return.resize(assets);
    for (int i = 0; i < assets; ++i)
        p.excess_return[i] = 0.02 + 0.06 * rng.uniform(static_cast<std::uint32_t>(i), 0, 1);
    p.bequest = bequest;
    p.horizon = horizon;
    return p;
}

}  // namespace pgdpo
