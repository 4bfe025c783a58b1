#include <doctest.h>

#include <string>
#include <utility>
#include <vector>

#include "pgdpo/config.hpp"
#include "pgdpo/errors.hpp"

using namespace pgdpo;

TEST_CASE("empty object gives the case-1 defaults") {
    const RunConfig c = parse_config("{}");
    CHECK(c.case_id == 1);
    CHECK(c.lq.dim == 5);
    CHECK(c.kernel.kind() == KernelKind::SurvivalGamma);
    CHECK(c.hidden == std::vector<int>{128, 128});
    CHECK(c.stage1.iterations == 500);
    CHECK(c.stage1.batch == 256);
    CHECK(c.stage1.steps == 64);
    CHECK(c.stage1.learning_rate == 1e-3);
    CHECK(c.stage2.paths == 256);
    CHECK(c.stage2.steps == 16);
    CHECK(c.grid.times == 16);
    CHECK(c.grid.points == 32);
    CHECK(c.heads.size() == 5);
    CHECK(c.methods == std::vector<std::string>{"dpo", "pgdpo"});
}

TEST_CASE("case 2 resolves the market, heads and kernel") {
    const RunConfig c = parse_config(R"({"problem": {"case": 2, "assets": 3}})");
    CHECK(c.assets == 3);
    CHECK(c.control_dim() == 4);
    CHECK(c.state_dim() == 1);
    CHECK(c.kernel.kind() == KernelKind::Hyperbolic);
    CHECK(c.heads.back() == OutputHead::Softplus);
    CHECK(c.merton.covariance.rows() == 3);
    CHECK(c.anchor_time == AnchorDistribution::Time::Fixed);

    const RunConfig e = parse_config(
        R"({"problem": {"case": 3, "excess_return": [0.05], "covariance": [[0.04]]},
            "kernel": {"kind": "time_varying_hyperbolic", "profile": "exponential", "k0": 2.0, "decay": 1.0}})");
    CHECK(e.market_explicit);
    CHECK(e.assets == 1);
    CHECK(e.kernel.kind() == KernelKind::TimeVaryingHyperbolic);
}

TEST_CASE("hash ignores formatting but not content") {
    const auto a = parse_config(R"({"stage1": {"iterations": 3}})");
    const auto b = parse_config("{ \"stage1\" :\n { \"iterations\" : 3 } }");
    const auto c = parse_config(R"({"stage1": {"iterations": 4}})");
    CHECK(a.hash == b.hash);
    CHECK(a.hash != c.hash);
}

TEST_CASE("broken configs are rejected with a field path") {
    const std::vector<std::pair<std::string, std::string>> corpus{
        {R"({"problem": {"case": 4}})", "problem.case"},
        {R"({"problem": {"dim": 0}})", "problem.dim"},
        {R"({"problem": {"control_weight": 0}})", "problem.control_weight"},
        {R"({"problem": {"dim": 3, "target": [1, 2]}})", "problem.target"},
        {R"({"problem": {"horizon": -1}})", "problem.horizon"},
        {R"({"problem": {"case": 2, "covariance": [[1]]}})", "problem.excess_return"},
        {R"({"problem": {"case": 2, "excess_return": [0.1, 0.1], "covariance": [[1, 2], [2, 1]]}})",
         "problem.covariance"},
        {R"({"problem": {"case": 2, "excess_return": [0.1, 0.1], "covariance": [[1, 0]]}})", "problem.covariance"},
        {R"({"problem": {"case": 2, "assets": 4, "excess_return": [0.1], "covariance": [[1]]}})",
         "problem.excess_return"},
        {R"({"kernel": {"kind": "hyperbolic"}})", "kernel.kind"},
        {R"({"problem": {"case": 2}, "kernel": {"kind": "survival_gamma"}})", "kernel.kind"},
        {R"({"problem": {"case": 3}, "kernel": {"kind": "hyperbolic"}})", "kernel.kind"},
        {R"({"kernel": {"kind": "gamma"}})", "kernel.kind"},
        {R"({"kernel": {"kind": "survival_gamma", "beta0": -1}})", "kernel.kind"},
        {R"({"kernel": {"kind": "survival_gamma", "beta": 1}})", "kernel.beta"},
        {R"({"problem": {"case": 3}, "kernel": {"kind": "time_varying_hyperbolic", "profile": "cubic"}})",
         "kernel.profile"},
        {R"({"problem": {"case": 3}, "kernel": {"kind": "time_varying_hyperbolic", "k0": 0.5, "k1": -1}})",
         "kernel.profile"},
        {R"({"policy": {"hidden": [32, 0]}})", "policy.hidden[1]"},
        {R"({"policy": {"heads": ["identity"]}})", "policy.heads"},
        {R"({"problem": {"case": 2, "assets": 1}, "policy": {"heads": ["identity", "identity"]}})",
         "policy.heads[1]"},
        {R"({"policy": {"heads": ["identity", "identity", "identity", "identity", "relu"]}})", "policy.heads[4]"},
        {R"({"stage1": {"batch": 255}})", "stage1.batch"},
        {R"({"stage1": {"learning_rate": 0}})", "stage1.learning_rate"},
        {R"({"stage1": {"iterations": 1.5}})", "stage1.iterations"},
        {R"({"stage1": {"schedule": "linear"}})", "stage1.schedule"},
        {R"({"stage1": {"control_variate": true, "antithetic": false, "batch": 5}})", "stage1.control_variate"},
        {R"({"stage2": {"paths": 15}})", "stage2.paths"},
        {R"({"stage2": {"armijo": 0.7}})", "stage2.armijo"},
        {R"({"grid": {"halfwidth": 2.0}})", "grid.halfwidth"},
        {R"({"problem": {"case": 2}, "grid": {"lo": -1.0}})", "grid.lo"},
        {R"({"seeds": []})", "seeds"},
        {R"({"seeds": [-1]})", "seeds[0]"},
        {R"({"methods": ["ppo"]})", "methods[0]"},
        {R"({"bridge": {"dts": [0.001]}})", "bridge.dts[0]"},
        {R"({"bridge": {"prefix_times": [0.99]}})", "bridge.prefix_times[0]"},
        {R"({"bridge": {"x0": [1, 2]}})", "bridge.x0"},
        {R"({"anchor": {"time": "sometimes"}})", "anchor.time"},
        {R"({"runtime": {"configs": [[255, 16]]}})", "runtime.configs[0]"},
        {R"({"project": {"queries": [{"t": 0.1, "x": [0]}]}})", "project.queries[0].x"},
        {R"({"stage1": {"iterations": 10}, "extra": 1})", "extra"},
        {R"({"problem": 3})", "problem"},
        {R"({"stage1": {"lr": 0.1}})", "stage1.lr"},
        {R"({"problem": {"case": 1})", "<root>"},
        {R"([1, 2])", "<root>"},
    };
    for (const auto& [text, field] : corpus) {
        CAPTURE(text);
        std::string got = "<accepted>";
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            got = e.field();
        }
        CHECK(got == field);
    }
    CHECK(corpus.size() >= 20);
}

TEST_CASE("kernel blocks parse on their own") {
    CHECK(parse_kernel(R"({"kind": "hyperbolic", "kappa": 2})").kind() == KernelKind::Hyperbolic);
    CHECK(parse_kernel(R"({"kind": "exponential", "rate": 0.1})")(0.0, 1.0) == doctest::Approx(std::exp(-0.1)));
    CHECK_THROWS_AS(parse_kernel("{"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
