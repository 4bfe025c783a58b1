#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace pgdpo {

/// Decision-time impatience k(s) for the time-varying hyperbolic kernel.
///
///   linear       k(s) = k0 + k1 s
///   sinusoidal   k(s) = k0 + amplitude sin(frequency s)
///   exponential  k(s) = k0 exp(-decay s)
struct ImpatienceProfile {
    enum class Shape { Linear, Sinusoidal, Exponential };

    Shape shape = Shape::Linear;
    double k0 = 0.2;
    double k1 = 1.8;
    double amplitude = 0.0;
    double frequency = 0.0;
    double decay = 0.0;

    double operator()(double s) const;

    static ImpatienceProfile linear(double k0, double k1);
    static ImpatienceProfile sinusoidal(double k0, double amplitude, double frequency);
    static ImpatienceProfile exponential(double k0, double decay);

    /// Defaults keeping k(s) within [0.2, 2.0] on [0, 1].
    static ImpatienceProfile default_for(Shape shape);
};

std::string_view to_string(ImpatienceProfile::Shape shape);
ImpatienceProfile::Shape parse_profile_shape(std::string_view name);

enum class KernelKind { Exponential, SurvivalGamma, Hyperbolic, TimeVaryingHyperbolic };

std::string_view to_string(KernelKind kind);

/// Quadrant of the discount-kernel taxonomy.
enum class KernelClass { Exponential, Case1, Case2, Case3 };

std::string_view to_string(KernelClass c);

/// Two-time discount kernel D(s, t): factor applied at evaluation time s to a
/// payoff at t >= s.  Immutable value type.
class DiscountKernel {
public:
    struct Exponential { double rate; };
    struct SurvivalGamma { double shape; double scale; };
    struct Hyperbolic { double impatience; };
    struct TimeVaryingHyperbolic { ImpatienceProfile profile; };

    static DiscountKernel exponential(double rate);
    static DiscountKernel survival_gamma(double alpha0, double beta0);
    static DiscountKernel hyperbolic(double kappa);
    static DiscountKernel time_varying_hyperbolic(ImpatienceProfile profile);

    KernelKind kind() const noexcept;

    /// D(s, t).  Throws DomainError when s > t or an input is non-finite.
    double operator()(double s, double t) const;

    /// Multiplicative kernels only: instantaneous rate -d/dt log D(s, t), which
    /// is independent of s.  Throws ContractError for the hyperbolic families.
    double instantaneous_rate(double t) const;

    bool is_multiplicative_family() const noexcept;

    const auto& params() const noexcept { return params_; }

private:
    using Params = std::variant<Exponential, SurvivalGamma, Hyperbolic, TimeVaryingHyperbolic>;
    explicit DiscountKernel(Params p) : params_(p) {}
    Params params_;
};

double evaluate(const DiscountKernel& kernel, double s, double t);

/// |D(s,t) - D(s,u) D(u,t)| for s <= u <= t.
double multiplicativity_defect(const DiscountKernel& kernel, double s, double u, double t);

/// |D(s,t) - D(s+h, t+h)| for s <= t.
double homogeneity_defect(const DiscountKernel& kernel, double s, double t, double h);

struct KernelDefects {
    double multiplicativity = 0.0;
    double homogeneity = 0.0;
};

/// Largest defects over a deterministic resolution^3 grid of triples on [0, horizon].
KernelDefects max_defects(const DiscountKernel& kernel, double horizon, int resolution = 16);

KernelClass classify(const DiscountKernel& kernel, double horizon = 1.0, int resolution = 16,
                     double tol = 1e-9);

}  // namespace pgdpo
