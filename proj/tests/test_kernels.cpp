#include <doctest.h>

#include <cmath>
#include <random>

#include "pgdpo/errors.hpp"
#include "pgdpo/kernels.hpp"

using namespace pgdpo;

TEST_CASE("survival-gamma kernel closed form and rate") {
    const auto k = DiscountKernel::survival_gamma(1.5, 0.4);
    CHECK(k(0.2, 0.7) == doctest::Approx(std::pow((0.4 + 0.2) / (0.4 + 0.7), 1.5)).epsilon(1e-15));
    CHECK(k(0.3, 0.3) == 1.0);
    for (double t : {0.25, 0.5, 0.9}) {
        const double h = 1e-6;
        const double fd = -(std::log(k(0.0, t + h)) - std::log(k(0.0, t - h))) / (2 * h);
        CHECK(k.instantaneous_rate(t) == doctest::Approx(1.5 / (0.4 + t)));
        CHECK(k.instantaneous_rate(t) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("multiplicativity and homogeneity defects on random tuples") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto sg = DiscountKernel::survival_gamma(1.0, 0.2);
    const auto hy = DiscountKernel::hyperbolic(1.0);
    const auto ex = DiscountKernel::exponential(0.3);
    double sg_mult = 0, hy_hom = 0, ex_both = 0, sg_hom = 0;
    for (int i = 0; i < 1000; ++i) {
        double a = u(gen), b = u(gen), c = u(gen);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        const double h = u(gen);
        sg_mult = std::max(sg_mult, multiplicativity_defect(sg, a, b, c));
        hy_hom = std::max(hy_hom, homogeneity_defect(hy, a, c, h));
        sg_hom = std::max(sg_hom, homogeneity_defect(sg, a, c, h));
        ex_both = std::max({ex_both, multiplicativity_defect(ex, a, b, c), homogeneity_defect(ex, a, c, h)});
    }
    CHECK(sg_mult <= 1e-12);
    CHECK(hy_hom <= 1e-14);
    CHECK(ex_both <= 1e-12);
    CHECK(sg_hom > 1e-3);
}

TEST_CASE("hyperbolic multiplicativity defect at (0,1,2)") {
    const auto hy = DiscountKernel::hyperbolic(1.0);
    CHECK(std::abs(multiplicativity_defect(hy, 0, 1, 2) - 1.0 / 12.0) <= 1e-12);
}

TEST_CASE("taxonomy quadrants") {
    CHECK(classify(DiscountKernel::exponential(0.1)) == KernelClass::Exponential);
    CHECK(classify(DiscountKernel::survival_gamma(1.0, 0.2)) == KernelClass::Case1);
    CHECK(classify(DiscountKernel::hyperbolic(1.0)) == KernelClass::Case2);
    CHECK(classify(DiscountKernel::time_varying_hyperbolic(ImpatienceProfile::linear(0.2, 1.8))) ==
          KernelClass::Case3);
    CHECK(to_string(KernelClass::Case1) == "case1");
}

TEST_CASE("time-varying hyperbolic uses impatience at the evaluation time") {
    const auto p = ImpatienceProfile::sinusoidal(1.0, 0.5, 3.0);
    const auto k = DiscountKernel::time_varying_hyperbolic(p);
    const double s = 0.3, t = 0.8;
    CHECK(k(s, t) == doctest::Approx(1.0 / (1.0 + p(s) * (t - s))).epsilon(1e-15));
    for (auto shape : {ImpatienceProfile::Shape::Linear, ImpatienceProfile::Shape::Sinusoidal,
                       ImpatienceProfile::Shape::Exponential}) {
        const auto d = ImpatienceProfile::default_for(shape);
        for (int i = 0; i <= 100; ++i) {
            CHECK(d(i / 100.0) >= 0.2 - 1e-12);
            CHECK(d(i / 100.0) <= 2.0 + 1e-12);
        }
        CHECK(parse_profile_shape(to_string(shape)) == shape);
    }
}

TEST_CASE("kernel domain and construction errors") {
    const auto hy = DiscountKernel::hyperbolic(1.0);
    CHECK_THROWS_AS(hy(0.5, 0.4), DomainError);
    CHECK_THROWS_AS(hy(std::nan(""), 0.4), DomainError);
    CHECK_THROWS_AS(hy.instantaneous_rate(0.1), ContractError);
    CHECK_THROWS_AS(DiscountKernel::survival_gamma(-1.0, 0.2), ConstructionError);
    CHECK_THROWS_AS(DiscountKernel::survival_gamma(1.0, 0.0), ConstructionError);
    CHECK_THROWS_AS(DiscountKernel::hyperbolic(-0.1), ConstructionError);
    CHECK_THROWS_AS(ImpatienceProfile::sinusoidal(0.5, 0.6, 1.0), ConstructionError);
}
