#include "pgdpo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pgdpo/errors.hpp"

namespace pgdpo {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite ") + what);
}

}  // namespace

double ImpatienceProfile::operator()(double s) const {
    switch (shape) {
        case Shape::Linear: return k0 + k1 * s;
        case Shape::Sinusoidal: return k0 + amplitude * std::sin(frequency * s);
        case Shape::Exponential: return k0 * std::exp(-decay * s);
    }
    return k0;
}

ImpatienceProfile ImpatienceProfile::linear(double k0, double k1) {
    ImpatienceProfile p;
    p.shape = Shape::Linear;
    p.k0 = k0;
    p.k1 = k1;
    return p;
}

ImpatienceProfile ImpatienceProfile::sinusoidal(double k0, double amplitude, double frequency) {
    if (amplitude < 0.0 || amplitude >= k0)
        throw ConstructionError("sinusoidal profile needs k0 > amplitude >= 0");
    ImpatienceProfile p;
    p.shape = Shape::Sinusoidal;
    p.k0 = k0;
    p.k1 = 0.0;
    p.amplitude = amplitude;
    p.frequency = frequency;
    return p;
}

ImpatienceProfile ImpatienceProfile::exponential(double k0, double decay) {
    ImpatienceProfile p;
    p.shape = Shape::Exponential;
    p.k0 = k0;
    p.k1 = 0.0;
    p.decay = decay;
    return p;
}

ImpatienceProfile ImpatienceProfile::default_for(Shape shape) {
    switch (shape) {
        case Shape::Linear: return linear(0.2, 1.8);
        case Shape::Sinusoidal: return sinusoidal(1.1, 0.9, 2.0 * std::numbers::pi);
        case Shape::Exponential: return exponential(2.0, std::log(10.0));
    }
    return linear(0.2, 1.8);
}

std::string_view to_string(ImpatienceProfile::Shape shape) {
    switch (shape) {
        case ImpatienceProfile::Shape::Linear: return "linear";
        case ImpatienceProfile::Shape::Sinusoidal: return "sinusoidal";
        case ImpatienceProfile::Shape::Exponential: return "exponential";
    }
    return "linear";
}

ImpatienceProfile::Shape parse_profile_shape(std::string_view name) {
    if (name == "linear") return ImpatienceProfile::Shape::Linear;
    if (name == "sinusoidal") return ImpatienceProfile::Shape::Sinusoidal;
    if (name == "exponential") return ImpatienceProfile::Shape::Exponential;
    throw ConstructionError("unknown impatience profile '" + std::string(name) + "'");
}

std::string_view to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Exponential: return "exponential";
        case KernelKind::SurvivalGamma: return "survival_gamma";
        case KernelKind::Hyperbolic: return "hyperbolic";
        case KernelKind::TimeVaryingHyperbolic: return "time_varying_hyperbolic";
    }
    return "exponential";
}

std::string_view to_string(KernelClass c) {
    switch (c) {
        case KernelClass::Exponential: return "exponential";
        case KernelClass::Case1: return "case1";
        case KernelClass::Case2: return "case2";
        case KernelClass::Case3: return "case3";
    }
    return "case3";
}

DiscountKernel DiscountKernel::exponential(double rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate))
        throw ConstructionError("exponential kernel needs a finite rate >= 0");
    return DiscountKernel(Exponential{rate});
}

DiscountKernel DiscountKernel::survival_gamma(double alpha0, double beta0) {
    if (!(alpha0 > 0.0) || !(beta0 > 0.0) || !std::isfinite(alpha0) || !std::isfinite(beta0))
        throw ConstructionError("survival kernel needs alpha0 > 0 and beta0 > 0");
    return DiscountKernel(SurvivalGamma{alpha0, beta0});
}

DiscountKernel DiscountKernel::hyperbolic(double kappa) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
        throw ConstructionError("hyperbolic kernel needs a finite kappa >= 0");
    return DiscountKernel(Hyperbolic{kappa});
}

DiscountKernel DiscountKernel::time_varying_hyperbolic(ImpatienceProfile profile) {
    return DiscountKernel(TimeVaryingHyperbolic{profile});
}

KernelKind DiscountKernel::kind() const noexcept {
    return std::visit(Overloaded{
                          [](const Exponential&) { return KernelKind::Exponential; },
                          [](const SurvivalGamma&) { return KernelKind::SurvivalGamma; },
                          [](const Hyperbolic&) { return KernelKind::Hyperbolic; },
                          [](const TimeVaryingHyperbolic&) {
                              return KernelKind::TimeVaryingHyperbolic;
                          },
                      },
                      params_);
}

bool DiscountKernel::is_multiplicative_family() const noexcept {
    auto k = kind();
    return k == KernelKind::Exponential || k == KernelKind::SurvivalGamma;
}

double DiscountKernel::operator()(double s, double t) const {
    require_finite(s, "evaluation time");
    require_finite(t, "payoff time");
    if (s > t) throw DomainError("discount kernel requires s <= t");
    if (s == t) return 1.0;
    return std::visit(
        Overloaded{
            [&](const Exponential& e) { return std::exp(-e.rate * (t - s)); },
            [&](const SurvivalGamma& g) {
                return std::pow((g.scale + s) / (g.scale + t), g.shape);
            },
            [&](const Hyperbolic& h) { return 1.0 / (1.0 + h.impatience * (t - s)); },
            [&](const TimeVaryingHyperbolic& v) {
                double k = v.profile(s);
                if (!(k >= 0.0)) throw DomainError("impatience profile negative at s");
                return 1.0 / (1.0 + k * (t - s));
            },
        },
        params_);
}

double DiscountKernel::instantaneous_rate(double t) const {
    return std::visit(Overloaded{
                          [](const Exponential& e) { return e.rate; },
                          [&](const SurvivalGamma& g) { return g.shape / (g.scale + t); },
                          [](const Hyperbolic&) -> double {
                              throw ContractError("hyperbolic kernel is not multiplicative");
                          },
                          [](const TimeVaryingHyperbolic&) -> double {
                              throw ContractError("hyperbolic kernel is not multiplicative");
                          },
                      },
                      params_);
}

double evaluate(const DiscountKernel& kernel, double s, double t) { return kernel(s, t); }

double multiplicativity_defect(const DiscountKernel& kernel, double s, double u, double t) {
    if (!(s <= u && u <= t)) throw DomainError("multiplicativity defect requires s <= u <= t");
    return std::abs(kernel(s, t) - kernel(s, u) * kernel(u, t));
}

double homogeneity_defect(const DiscountKernel& kernel, double s, double t, double h) {
    if (!(s <= t)) throw DomainError("homogeneity defect requires s <= t");
    return std::abs(kernel(s, t) - kernel(s + h, t + h));
}

KernelDefects max_defects(const DiscountKernel& kernel, double horizon, int resolution) {
    if (resolution < 2) resolution = 2;
    KernelDefects out;
    const double step = horizon / (resolution - 1);
    auto node = [&](int i) { return i * step; };
    for (int i = 0; i < resolution; ++i) {
        for (int j = i; j < resolution; ++j) {
            for (int k = j; k < resolution; ++k) {
                out.multiplicativity = std::max(
                    out.multiplicativity, multiplicativity_defect(kernel, node(i), node(j), node(k)));
            }
            // shift h = node(k) keeps t + h inside [0, horizon]
            for (int k = 1; j + k < resolution; ++k) {
                out.homogeneity = std::max(out.homogeneity,
                                           homogeneity_defect(kernel, node(i), node(j), node(k)));
            }
        }
    }
    return out;
}

KernelClass classify(const DiscountKernel& kernel, double horizon, int resolution, double tol) {
    if (!(tol > 0.0)) throw DomainError("classify tolerance must be positive");
    KernelDefects d = max_defects(kernel, horizon, resolution);
    bool mult = d.multiplicativity <= tol;
    bool homo = d.homogeneity <= tol;
    if (mult && homo) return KernelClass::Exponential;
    if (mult) return KernelClass::Case1;
    if (homo) return KernelClass::Case2;
    return KernelClass::Case3;
}

}  // namespace pgdpo
