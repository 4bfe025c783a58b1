#include <doctest.h>

#include "fd.hpp"
#include "pgdpo/parallel.hpp"
#include "pgdpo/rollout.hpp"
#include "pgdpo/stage1.hpp"

using namespace pgdpo;

namespace {

struct Fixture {
    LqTargetParams lp;
    std::shared_ptr<const LqTargetProblem> problem;
    DiscountKernel kernel = DiscountKernel::survival_gamma(1.0, 0.2);
    AnchorDistribution nu;
    MlpPolicy init{MlpPolicy::Architecture{}, InputNormalization{}};

    Fixture() {
        lp.dim = 2;
        problem = make_case1_lq(lp);
        nu = AnchorDistribution::box(Vec::Zero(2), 1.0);
        MlpPolicy::Architecture a;
        a.state_dim = 2;
        a.control_dim = 2;
        a.hidden = {8, 8};
        init = MlpPolicy::init(a, {}, 4);
    }
    TrainConfig cfg(int iters) const {
        TrainConfig c;
        c.iterations = iters;
        c.batch = 32;
        c.steps = 8;
        c.learning_rate = 1e-2;
        c.seed = 9;
        return c;
    }
};

}  // namespace

TEST_CASE("anchor sampling respects the support") {
    const AnchorDistribution nu = AnchorDistribution::box(Vec::Constant(3, 1.0), 0.5);
    Vec x(3);
    double t0 = 0.0;
    for (int i = 0; i < 200; ++i) {
        nu.sample(1, 0, i, 2.0, 8, t0, x);
        CHECK(t0 >= 0.0);
        CHECK(t0 <= 2.0 - 2.0 / 8);
        CHECK(x.minCoeff() >= 0.5);
        CHECK(x.maxCoeff() <= 1.5);
    }
    double t1 = 0.0;
    Vec y(3);
    nu.sample(1, 0, 7, 2.0, 8, t0, x);
    nu.sample(1, 0, 7, 2.0, 8, t1, y);
    CHECK(t0 == t1);
    CHECK(x == y);
    AnchorDistribution fixed = AnchorDistribution::log_wealth(-0.5, 0.5);
    fixed.sample(1, 0, 3, 1.0, 8, t0, y.head(1));
    CHECK(t0 == 0.0);
}

TEST_CASE("Adam's first step has magnitude lr per coordinate") {
    Adam adam(3, 0.9, 0.999, 1e-12);
    Vec theta = Vec::Zero(3);
    Vec g(3);
    g << 2.0, -0.01, 5.0;
    adam.step(theta, g, 0.1);
    CHECK(theta[0] == doctest::Approx(0.1));
    CHECK(theta[1] == doctest::Approx(-0.1));
    CHECK(theta[2] == doctest::Approx(0.1));
}

TEST_CASE("zero iterations return the initial policy") {
    Fixture f;
    const TrainResult r = warm_start(*f.problem, f.kernel, f.init, f.nu, f.cfg(0));
    CHECK((r.policy.params() - f.init.params()).norm() == 0.0);
    CHECK(r.trace.empty());
}

TEST_CASE("training is deterministic across worker counts and improves the return") {
    Fixture f;
    set_worker_count(1);
    const TrainResult a = warm_start(*f.problem, f.kernel, f.init, f.nu, f.cfg(60));
    set_worker_count(3);
    const TrainResult b = warm_start(*f.problem, f.kernel, f.init, f.nu, f.cfg(60));
    set_worker_count(1);
    CHECK((a.policy.params() - b.policy.params()).norm() == 0.0);
    REQUIRE(a.trace.size() == 60);
    double first = 0, last = 0;
    for (int i = 0; i < 10; ++i) {
        first += a.trace[i].mean_return;
        last += a.trace[50 + i].mean_return;
    }
    CHECK(last > first);
    for (const auto& row : a.trace) CHECK(row.grad_norm >= 0.0);
}

TEST_CASE("gradient estimate is the exact derivative of the sampled surrogate") {
    Fixture f;
    const GradientEstimate g = surrogate_gradient(*f.problem, f.kernel, f.init, f.nu, 16, 6, 3, true);
    const Vec fd_grad = fd::gradient(
        [&](const Vec& th) {
            MlpPolicy p = f.init;
            p.set_params(th);
            return surrogate_gradient(*f.problem, f.kernel, p, f.nu, 16, 6, 3, true).mean_return;
        },
        f.init.params(), 1e-5);
    CHECK(fd::rel_err(g.mean, fd_grad) < 1e-5);
    CHECK(g.std_error.minCoeff() >= 0.0);
    CHECK(g.paths == 16);
}

TEST_CASE("Richardson and control-variate variants train") {
    Fixture f;
    TrainConfig c = f.cfg(20);
    c.richardson = true;
    c.control_variate = true;
    c.schedule = TrainConfig::Schedule::Cosine;
    const TrainResult r = warm_start(*f.problem, f.kernel, f.init, f.nu, c);
    CHECK(r.trace.size() == 20);
    CHECK(r.policy.params().allFinite());
    CHECK((r.policy.params() - f.init.params()).norm() > 0.0);
}

TEST_CASE("observer sees every iteration") {
    Fixture f;
    int calls = 0;
    warm_start(*f.problem, f.kernel, f.init, f.nu, f.cfg(5), [&](int it, const MlpPolicy&) { CHECK(it == calls++); });
    CHECK(calls == 5);
}

TEST_CASE("one-step deterministic LQ training matches a brute-force scan") {
    LqTargetParams lp;
    lp.dim = 1;
    lp.noise = 0.0;
    const auto problem = make_case1_lq(lp);
    const DiscountKernel kernel = DiscountKernel::exponential(0.5);
    const AnchorDistribution nu = AnchorDistribution::box(Vec::Constant(1, 0.5), 0.1, AnchorDistribution::Time::Fixed);

    MlpPolicy::Architecture a;
    a.state_dim = 1;
    a.control_dim = 1;
    a.hidden = {4};
    a.state_input = false;
    TrainConfig cfg;
    cfg.iterations = 2000;
    cfg.batch = 256;
    cfg.steps = 1;
    cfg.learning_rate = 1e-2;
    cfg.schedule = TrainConfig::Schedule::Cosine;
    cfg.seed = 3;
    const TrainResult r = warm_start(*problem, kernel, MlpPolicy::init(a, {}, 2), nu, cfg);
    const double trained = r.policy.act(0.0, Vec::Zero(1))[0];

    // The return is quadratic in (x0, u), so its mean over x0 is exact under midpoint quadrature.
    auto mean_return = [&](double u) {
        MlpPolicy::Architecture c = a;
        c.hidden = {1};
        MlpPolicy constant = MlpPolicy::init(c, {}, 0);
        Vec theta = Vec::Zero(constant.param_count());
        theta[theta.size() - 1] = u;
        constant.set_params(theta);
        double s = 0.0;
        const int n = 64;
        for (int i = 0; i < n; ++i) {
            const double x0 = 0.4 + 0.2 * (i + 0.5) / n;
            const Trajectory tr =
                simulate(*problem, constant, kernel, Anchor{0.0, Vec::Constant(1, x0)}, 1.0, 1, NoiseStream(0, 0));
            s += anchored_return(tr, kernel, 0.0);
        }
        return s / n;
    };
    double best = 0.0, best_j = -1e300;
    for (int i = 0; i <= 20000; ++i) {
        const double u = -2.0 + 4.0 * i / 20000;
        const double j = mean_return(u);
        if (j > best_j) best_j = j, best = u;
    }
    INFO("trained " << trained << " scan " << best);
    CHECK(std::abs(trained - best) <= 1e-3);
}
