#include <doctest.h>

#include <cmath>
#include <functional>

#include "pgdpo/errors.hpp"
#include "pgdpo/reference.hpp"

using namespace pgdpo;

namespace {

// Independent oracle: explicit midpoint integration of the Riccati equation
// backward in time with a fine step.
double riccati_oracle(const LqTargetParams& p, const DiscountKernel& k, double t, int n = 200000) {
    auto f = [&](double s, double P) {
        return k.instantaneous_rate(s) * P - p.state_weight + P * P / p.control_weight;
    };
    double P = p.terminal_weight;
    const double h = (p.horizon - t) / n;
    double s = p.horizon;
    for (int i = 0; i < n; ++i) {
        const double mid = P - 0.5 * h * f(s, P);
        P -= h * f(s - 0.5 * h, mid);
        s -= h;
    }
    return P;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

}  // namespace

TEST_CASE("Riccati solution matches an independent integrator") {
    LqTargetParams lp;
    for (const auto& k : {DiscountKernel::survival_gamma(1.0, 0.2), DiscountKernel::survival_gamma(1.0, 1.0),
                          DiscountKernel::exponential(0.3)}) {
        const RiccatiSolution sol = RiccatiSolution::solve(lp, k);
        for (double t : {0.0, 0.3, 0.77, 1.0}) CHECK(sol(t) == doctest::Approx(riccati_oracle(lp, k, t)).epsilon(1e-8));
        CHECK(sol(1.0) == lp.terminal_weight);
    }
    CHECK_THROWS_AS(RiccatiSolution::solve(lp, DiscountKernel::hyperbolic(1.0)), ContractError);
}

TEST_CASE("Riccati feedback law") {
    LqTargetParams lp;
    lp.dim = 2;
    lp.target = Vec::Constant(2, 1.0);
    const auto k = DiscountKernel::exponential(0.1);
    const RiccatiSolution sol = RiccatiSolution::solve(lp, k);
    const Vec x = Vec::Constant(2, 1.5);
    const Vec u = case1_reference(0.4, x, lp, sol);
    CHECK((u - (-(sol(0.4) / lp.control_weight) * (x - lp.target))).norm() <= 1e-15);
    const RiccatiPolicy pol(lp, k);
    CHECK((pol.act(0.4, x) - u).norm() <= 1e-15);
    CHECK((pol.state_jacobian(0.4, x) + (sol(0.4) / lp.control_weight) * Mat::Identity(2, 2)).norm() <= 1e-15);
}

TEST_CASE("discount integrals match quadrature for every family") {
    const std::vector<DiscountKernel> ks{
        DiscountKernel::exponential(0.4), DiscountKernel::exponential(0.0), DiscountKernel::survival_gamma(1.0, 0.2),
        DiscountKernel::survival_gamma(2.5, 0.7), DiscountKernel::hyperbolic(1.0), DiscountKernel::hyperbolic(0.0),
        DiscountKernel::time_varying_hyperbolic(ImpatienceProfile::linear(0.2, 1.8))};
    for (const auto& k : ks)
        for (double t : {0.0, 0.4, 0.9}) {
            const double q = simpson([&](double s) { return k(t, s); }, t, 1.0);
            CHECK(discount_integral(k, t, 1.0) == doctest::Approx(q).epsilon(1e-10));
        }
}

TEST_CASE("equilibrium consumption and the Merton reference") {
    const auto k = DiscountKernel::hyperbolic(1.0);
    const double t = 0.25;
    const double c = equilibrium_consumption(k, t, 1.0, 0.2);
    CHECK(c == doctest::Approx(1.0 / (std::log(1.75) + 0.2 / 1.75)));
    const MertonParams mp = generate_market(4, 9);
    const MertonControl ref = case2_reference(t, mp, k);
    CHECK((mp.covariance * ref.pi - mp.excess_return).norm() <= 1e-12);
    CHECK(ref.c == c);
    CHECK_THROWS_AS(case2_reference(t, mp, DiscountKernel::exponential(0.1)), ContractError);
    CHECK_THROWS_AS(case3_reference(t, mp, k), ContractError);
}

TEST_CASE("case-3 consumption co-moves with impatience") {
    const MertonParams mp = generate_market(2, 1);
    for (auto shape : {ImpatienceProfile::Shape::Linear, ImpatienceProfile::Shape::Sinusoidal,
                       ImpatienceProfile::Shape::Exponential}) {
        const auto prof = ImpatienceProfile::default_for(shape);
        const auto k = DiscountKernel::time_varying_hyperbolic(prof);
        CHECK(case3_reference(0.4, mp, k).c ==
              doctest::Approx(equilibrium_consumption(DiscountKernel::hyperbolic(prof(0.4)), 0.4, 1.0, mp.bequest))
                  .epsilon(1e-14));
        for (double t1 : {0.1, 0.3, 0.5})
            for (double t2 : {0.2, 0.6, 0.7}) {
                if (t1 == t2) continue;
                // Same decision time, impatience of t1 versus t2.
                const double pure =
                    equilibrium_consumption(DiscountKernel::hyperbolic(prof(t2)), t2, 1.0, mp.bequest) -
                    equilibrium_consumption(DiscountKernel::hyperbolic(prof(t1)), t2, 1.0, mp.bequest);
                const double dk = prof(t2) - prof(t1);
                if (std::abs(dk) > 1e-9) CHECK((pure > 0) == (dk > 0));
            }
    }
}

TEST_CASE("equilibrium residual separates the reference from a perturbed policy") {
    const MertonParams mp = generate_market(3, 2);
    const auto p = make_case2_merton(mp);
    const auto k = DiscountKernel::hyperbolic(1.0);
    MertonEquilibriumPolicy ref(mp, k);
    std::vector<Query> grid;
    for (double t : {0.0, 0.3, 0.6}) grid.push_back({t, Vec::Zero(1)});
    ProjectionConfig c;
    c.paths = 64;
    c.steps = 256;
    const ResidualField good = verify_equilibrium_residual(*p, k, ref, grid, c, 4);
    ref.set_consumption_scale(1.5);
    const ResidualField bad = verify_equilibrium_residual(*p, k, ref, grid, c, 4);
    CHECK(good.max < 0.05);
    CHECK(bad.mean > 10 * good.mean);
}
