#include "pgdpo/reference.hpp"

#include <cmath>

#include "pgdpo/errors.hpp"

namespace pgdpo {

RiccatiSolution RiccatiSolution::solve(const LqTargetParams& params, const DiscountKernel& kernel,
                                       int steps) {
    if (!kernel.is_multiplicative_family())
        throw ContractError("the Riccati reference needs a multiplicative kernel");
    if (steps < 1) throw DomainError("Riccati grid needs at least one step");
    RiccatiSolution sol;
    sol.horizon_ = params.horizon;
    sol.p_.assign(steps + 1, 0.0);
    const double qs = params.state_weight;
    const double ru = params.control_weight;
    const double h = params.horizon / steps;
    auto rhs = [&](double t, double p) { return kernel.instantaneous_rate(t) * p - qs + p * p / ru; };
    double p = params.terminal_weight;
    sol.p_[steps] = p;
    for (int i = steps; i > 0; --i) {
        const double t = i * h;
        // Backward step: dP = -rhs dt over [t - h, t].
        const double k1 = rhs(t, p);
        const double k2 = rhs(t - 0.5 * h, p - 0.5 * h * k1);
        const double k3 = rhs(t - 0.5 * h, p - 0.5 * h * k2);
        const double k4 = rhs(t - h, p - h * k3);
        p -= h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        sol.p_[i - 1] = p;
    }
    return sol;
}

double RiccatiSolution::operator()(double t) const {
    const int n = steps();
    if (!std::isfinite(t)) throw DomainError("time must be finite");
    const double pos = std::clamp(t / horizon_, 0.0, 1.0) * n;
    const int i = std::min(static_cast<int>(pos), n - 1);
    const double w = pos - i;
    return (1.0 - w) * p_[i] + w * p_[i + 1];
}

Vec case1_reference(double t, CVecRef x, const LqTargetParams& params, const RiccatiSolution& sol) {
    Vec target = params.target.size() ? params.target : Vec::Zero(x.size());
    return -(sol(t) / params.control_weight) * (x - target);
}

RiccatiPolicy::RiccatiPolicy(LqTargetParams params, const DiscountKernel& kernel, int steps)
    : params_(std::move(params)), sol_(RiccatiSolution::solve(params_, kernel, steps)) {
    if (params_.target.size() == 0) params_.target = Vec::Zero(params_.dim);
}

void RiccatiPolicy::act_batch(CVecRef t, CMatRef x, MatRef u, MatRef) const {
    for (Eigen::Index i = 0; i < x.cols(); ++i)
        u.col(i) = -(sol_(t[i]) / params_.control_weight) * (x.col(i) - params_.target);
}

void RiccatiPolicy::vjp_batch(CVecRef t, CMatRef x, CMatRef, CMatRef g, Mat* state_grad, Vec*,
                              Mat*) const {
    if (state_grad == nullptr) return;
    for (Eigen::Index i = 0; i < x.cols(); ++i)
        state_grad->col(i) -= (sol_(t[i]) / params_.control_weight) * g.col(i);
}

double discount_integral(const DiscountKernel& kernel, double t, double horizon) {
    if (!(t <= horizon)) throw DomainError("integral needs t <= T");
    const double tau = horizon - t;
    struct Visitor {
        double t, horizon, tau;
        double hyperbolic(double k) const { return k == 0.0 ? tau : std::log1p(k * tau) / k; }
        double operator()(const DiscountKernel::Exponential& e) const {
            return e.rate == 0.0 ? tau : -std::expm1(-e.rate * tau) / e.rate;
        }
        double operator()(const DiscountKernel::SurvivalGamma& g) const {
            const double a = g.scale + t;
            const double b = g.scale + horizon;
            if (g.shape == 1.0) return a * std::log(b / a);
            return a / (1.0 - g.shape) * std::expm1((1.0 - g.shape) * std::log(b / a));
        }
        double operator()(const DiscountKernel::Hyperbolic& h) const { return hyperbolic(h.impatience); }
        double operator()(const DiscountKernel::TimeVaryingHyperbolic& h) const {
            return hyperbolic(h.profile(t));
        }
    };
    return std::visit(Visitor{t, horizon, tau}, kernel.params());
}

double equilibrium_consumption(const DiscountKernel& kernel, double t, double horizon, double bequest) {
    return 1.0 / (discount_integral(kernel, t, horizon) + bequest * kernel(t, horizon));
}

namespace {

MertonControl merton_reference(double t, const MertonParams& params, const DiscountKernel& kernel) {
    MertonControl c;
    Eigen::LLT<Mat> llt(params.covariance);
    if (llt.info() != Eigen::Success) throw ConstructionError("covariance must be positive definite");
    c.pi = llt.solve(params.excess_return);
    c.c = equilibrium_consumption(kernel, t, params.horizon, params.bequest);
    return c;
}

}  // namespace

MertonControl case2_reference(double t, const MertonParams& params, const DiscountKernel& kernel) {
    if (kernel.kind() != KernelKind::Hyperbolic) throw ContractError("case 2 reference needs a hyperbolic kernel");
    return merton_reference(t, params, kernel);
}

MertonControl case3_reference(double t, const MertonParams& params, const DiscountKernel& kernel) {
    if (kernel.kind() != KernelKind::TimeVaryingHyperbolic)
        throw ContractError("case 3 reference needs a time-varying hyperbolic kernel");
    return merton_reference(t, params, kernel);
}

MertonEquilibriumPolicy::MertonEquilibriumPolicy(MertonParams params, DiscountKernel kernel)
    : params_(std::move(params)), kernel_(std::move(kernel)) {
    pi_ = merton_reference(0.0, params_, kernel_).pi;
}

void MertonEquilibriumPolicy::act_batch(CVecRef t, CMatRef x, MatRef u, MatRef) const {
    const int n = static_cast<int>(pi_.size());
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        u.col(i).head(n) = pi_;
        u(n, i) = c_scale_ * equilibrium_consumption(kernel_, t[i], params_.horizon, params_.bequest);
    }
}

ResidualField verify_equilibrium_residual(const ControlProblem& problem,
                                          const DiscountKernel& kernel,
                                          const FeedbackPolicy& reference,
                                          const std::vector<Query>& grid,
                                          const ProjectionConfig& cfg, std::uint64_t seed) {
    return residual_field(problem, kernel, reference, grid, ControlSource::Policy, cfg, seed);
}

}  // namespace pgdpo
