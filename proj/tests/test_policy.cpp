#include <doctest.h>

#include <sstream>

#include "fd.hpp"
#include "pgdpo/errors.hpp"
#include "pgdpo/policy.hpp"

using namespace pgdpo;

namespace {

MlpPolicy small_policy(bool softplus, std::uint64_t seed = 5) {
    MlpPolicy::Architecture a;
    a.state_dim = 3;
    a.control_dim = 2;
    a.hidden = {7, 6};
    if (softplus) a.heads = {OutputHead::Identity, OutputHead::Softplus};
    InputNormalization n;
    n.time_scale = 2.0;
    n.center = Vec::Constant(3, 0.1);
    n.scale = Vec::Constant(3, 0.7);
    return MlpPolicy::init(a, n, seed);
}

}  // namespace

TEST_CASE("initialisation is deterministic and layout matches the widths") {
    const MlpPolicy a = small_policy(false), b = small_policy(false), c = small_policy(false, 6);
    CHECK((a.params() - b.params()).norm() == 0.0);
    CHECK((a.params() - c.params()).norm() > 0.0);
    CHECK(a.widths() == std::vector<int>{4, 7, 6, 2});
    CHECK(a.param_count() == 4 * 7 + 7 + 7 * 6 + 6 + 6 * 2 + 2);
}

TEST_CASE("vector-Jacobian products match finite differences") {
    for (bool softplus : {false, true}) {
        const MlpPolicy p = small_policy(softplus);
        const double t = 0.4;
        Vec x(3);
        x << 0.3, -0.2, 0.5;
        Vec gvec(2);
        gvec << 0.7, -1.3;

        const Mat jx = p.state_jacobian(t, x);
        const Mat fdx = fd::jacobian([&](const Vec& y) { return p.act(t, y); }, x);
        CHECK(fd::rel_err(jx, fdx) < 1e-7);

        Mat cache(p.cache_rows(), 1), u(2, 1);
        Vec tv = Vec::Constant(1, t);
        p.act_batch(tv, x, u, cache);
        Vec psum = Vec::Zero(p.param_count());
        Mat sg = Mat::Zero(3, 1);
        p.vjp_batch(tv, x, cache, gvec, &sg, &psum, nullptr);
        const Vec fdp = fd::gradient(
            [&](const Vec& th) {
                MlpPolicy q = p;
                q.set_params(th);
                return gvec.dot(q.act(t, x));
            },
            p.params());
        CHECK(fd::rel_err(psum, fdp) < 1e-7);
        CHECK(fd::rel_err(sg, jx.transpose() * gvec) < 1e-12);
    }
}

TEST_CASE("batched parameter columns sum to the parameter total") {
    const MlpPolicy p = small_policy(true);
    const int B = 5;
    Vec t = Vec::LinSpaced(B, 0.0, 0.9);
    Mat x = Mat::Random(3, B), u(2, B), cache(p.cache_rows(), B), g = Mat::Random(2, B);
    p.act_batch(t, x, u, cache);
    Vec sum = Vec::Zero(p.param_count());
    Mat cols = Mat::Zero(p.param_count(), B);
    p.vjp_batch(t, x, cache, g, nullptr, &sum, &cols);
    CHECK((cols.rowwise().sum() - sum).norm() <= 1e-12 * (1 + sum.norm()));
    for (int i = 0; i < B; ++i) CHECK((u.col(i) - p.act(t[i], x.col(i))).norm() <= 1e-14);
}

TEST_CASE("softplus head stays positive") {
    const MlpPolicy p = small_policy(true);
    for (double s : {-50.0, -5.0, 0.0, 5.0, 50.0}) CHECK(p.act(0.5, Vec::Constant(3, s))[1] > 0.0);
    CHECK(head_name(parse_head("softplus")) == "softplus");
    CHECK_THROWS_AS(parse_head("relu"), ConstructionError);
}

TEST_CASE("checkpoint round trip is bitwise") {
    const MlpPolicy p = small_policy(true);
    std::stringstream ss;
    p.save(ss);
    const MlpPolicy q = MlpPolicy::load(ss);
    CHECK((q.params() - p.params()).norm() == 0.0);
    CHECK(q.widths() == p.widths());
    CHECK(q.seed() == p.seed());
    Vec x = Vec::Constant(3, 0.2);
    CHECK((q.act(0.3, x) - p.act(0.3, x)).norm() == 0.0);
    std::stringstream bad("not a checkpoint\n");
    CHECK_THROWS(MlpPolicy::load(bad));
}

TEST_CASE("open-loop network ignores the state") {
    MlpPolicy::Architecture a;
    a.state_dim = 2;
    a.control_dim = 1;
    a.hidden = {4};
    a.state_input = false;
    const MlpPolicy p = MlpPolicy::init(a, {}, 1);
    CHECK(p.is_open_loop());
    CHECK(p.act(0.3, Vec::Constant(2, 1.0))[0] == p.act(0.3, Vec::Constant(2, -3.0))[0]);
    CHECK(p.state_jacobian(0.3, Vec::Zero(2)).norm() == 0.0);
}

TEST_CASE("constant policy") {
    const ConstantPolicy c(2, Vec::Constant(3, 0.25));
    CHECK(c.act(0.1, Vec::Zero(2)) == Vec::Constant(3, 0.25));
    CHECK(c.param_count() == 0);
}
