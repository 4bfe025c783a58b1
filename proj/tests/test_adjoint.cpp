#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pgdpo/errors.hpp"
#include "pgdpo/reference.hpp"

using namespace pgdpo;

namespace {

MlpPolicy net(int d, int m, bool softplus_last, std::uint64_t seed) {
    MlpPolicy::Architecture a;
    a.state_dim = d;
    a.control_dim = m;
    a.hidden = {6, 6};
    if (softplus_last) {
        a.heads.assign(m, OutputHead::Identity);
        a.heads.back() = OutputHead::Softplus;
    }
    return MlpPolicy::init(a, {}, seed);
}

}  // namespace

TEST_CASE("reverse pass matches frozen-noise finite differences") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto lq = make_case1_lq({});
    const MertonParams mp = generate_market(3, 5);
    const auto c2 = make_case2_merton(mp);
    const auto c3 = make_case3_resource(mp);
    for (int rep = 0; rep < 3; ++rep) {
        const double t0 = 0.5 * u(g);
        const auto s1 = oracle::frozen_noise_fd(*lq, net(5, 5, false, rep), DiscountKernel::survival_gamma(1.0, 0.2),
                                                t0, Vec::Constant(5, u(g) - 0.5), 10, NoiseStream(rep, 0));
        CHECK(s1.lambda_rel <= 1e-6);
        CHECK(s1.theta_rel <= 1e-5);
        const auto s2 = oracle::frozen_noise_fd(*c2, net(1, 4, true, rep), DiscountKernel::hyperbolic(1.0), t0,
                                                Vec::Constant(1, u(g) - 0.5), 10, NoiseStream(rep, 1));
        CHECK(s2.lambda_rel <= 1e-6);
        CHECK(s2.theta_rel <= 1e-5);
        const auto s3 = oracle::frozen_noise_fd(
            *c3, net(1, 4, true, rep),
            DiscountKernel::time_varying_hyperbolic(ImpatienceProfile::default_for(ImpatienceProfile::Shape::Sinusoidal)),
            t0, Vec::Constant(1, u(g) - 0.5), 10, NoiseStream(rep, 2));
        CHECK(s3.lambda_rel <= 1e-6);
        CHECK(s3.theta_rel <= 1e-5);
    }
}

TEST_CASE("reverse pass needs a full tape") {
    const auto lq = make_case1_lq({});
    const auto pol = net(5, 5, false, 1);
    const Trajectory tr = simulate(*lq, pol, DiscountKernel::exponential(0.1), Anchor{0.0, Vec::Zero(5)}, 0.125, 8,
                                   NoiseStream(1, 0), TapeLevel::Returns);
    CHECK_THROWS_AS(reverse_pass(tr, pol), ContractError);
}

TEST_CASE("terminal costate of the last step") {
    // With one step, lambda_1 = D(t0, T) grad g(X_1).
    const auto lq = make_case1_lq({});
    const auto pol = net(5, 5, false, 2);
    const auto k = DiscountKernel::survival_gamma(1.0, 0.2);
    const Trajectory tr =
        simulate(*lq, pol, k, Anchor{0.5, Vec::Constant(5, 0.1)}, 0.5, 1, NoiseStream(3, 0), TapeLevel::Full);
    const PathwiseAdjoint adj = reverse_pass(tr, pol);
    const Vec expect = k(0.5, 1.0) * terminal_costate(*lq, tr.x[1].col(0));
    CHECK((adj.lambda1.col(0) - expect).norm() <= 1e-15);
    CHECK((adj.lambda.back().col(0) - expect).norm() <= 1e-15);
}

TEST_CASE("Monte-Carlo costate of the Riccati policy approaches -P(t)(x - x*)") {
    LqTargetParams lp;
    lp.dim = 2;
    const auto lq = make_case1_lq(lp);
    const auto k = DiscountKernel::exponential(0.3);
    const RiccatiPolicy ref(lp, k);
    const Vec x = Vec::Constant(2, 0.4);
    CostateOptions o;
    o.paths = 2048;
    o.steps = 200;
    const CostateEstimate est = mc_costate(*lq, ref, k, 0.2, x, o, 5);
    // Value V = -P x'x - const, so lambda = dV/dx = -2 P x.
    const Vec expect = -2.0 * ref.solution()(0.2) * x;
    CHECK((est.lambda - expect).norm() <= 0.02 * expect.norm());
    CHECK(est.std_error.maxCoeff() < 1e-10);  // linear dynamics: the costate is deterministic
    CHECK_THROWS_AS(mc_costate(*lq, ref, k, 1.0, x, o, 5), DomainError);
}

TEST_CASE("antithetic column means and errors") {
    Mat s(1, 4);
    s << 1.0, 3.0, 2.0, 6.0;
    Vec mean, se;
    column_mean_and_error(s, true, mean, se);
    CHECK(mean[0] == doctest::Approx(3.0));
    // pair means 2 and 4: sd sqrt(2), se 1
    CHECK(se[0] == doctest::Approx(1.0));
    column_mean_and_error(s.leftCols(1), false, mean, se);
    CHECK(se[0] == 0.0);
}

TEST_CASE("bridge remainder pieces are consistent") {
    LqTargetParams lp;
    lp.dim = 2;
    const auto lq = make_case1_lq(lp);
    const auto k = DiscountKernel::survival_gamma(1.0, 0.2);
    const RiccatiPolicy ref(lp, k);
    BridgeConfig bc;
    bc.x0 = Vec::Constant(2, 0.5);
    bc.inner = 256;
    bc.fine_step = 1.0 / 256;
    const auto rs = bridge_residuals(*lq, ref, k, bc, 0.5, {1.0 / 16, 1.0 / 32}, 3);
    REQUIRE(rs.size() == 2);
    for (const auto& r : rs) {
        CHECK(r.rho_over_dt == doctest::Approx(r.rho_norm / r.dt));
        CHECK(r.state.size() == 2);
        CHECK((r.state - rs[0].state).norm() == 0.0);  // shared prefix
        CHECK(r.std_error >= 0.0);
    }
    CHECK_THROWS(bridge_residuals(*lq, ref, k, bc, 0.5, {1.0 / 1000}, 3));
}
