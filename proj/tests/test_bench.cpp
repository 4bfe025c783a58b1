#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pgdpo/bench.hpp"
#include "pgdpo/errors.hpp"

using namespace pgdpo;
namespace fs = std::filesystem;

namespace {

const char* tiny_case1 = R"({
  "problem": {"case": 1, "dim": 2},
  "policy": {"hidden": [8]},
  "stage1": {"iterations": 15, "batch": 32, "steps": 8, "learning_rate": 0.01},
  "stage2": {"paths": 32, "steps": 8},
  "grid": {"times": 4, "points": 5},
  "residual": {"every": 5, "stride_t": 2, "stride_x": 2},
  "seeds": [1, 2]
})";

const char* tiny_case2 = R"({
  "problem": {"case": 2, "assets": 2},
  "policy": {"hidden": [8]},
  "stage1": {"iterations": 10, "batch": 32, "steps": 8, "learning_rate": 0.01},
  "stage2": {"paths": 32, "steps": 8},
  "grid": {"times": 3, "points": 4},
  "sweep": {"dims": [1, 2]},
  "seeds": [3]
})";

int count_rows(const std::string& path) {
    std::ifstream is(path);
    std::string line;
    int n = -2;  // comment and header
    while (std::getline(is, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("grid error trivial cases") {
    const auto blocks = control_blocks(2, 3);
    Mat ref = Mat::Random(3, 10);
    std::vector<char> ok(10, 0);
    GridError e = grid_error(ref, ref, ok, blocks);
    CHECK(e.block("pi").l1 == 0.0);
    CHECK(e.block("c").linf == 0.0);
    Mat cand = ref;
    cand.row(2).array() += 0.1;
    e = grid_error(cand, ref, ok, blocks);
    CHECK(e.block("c").l1 == doctest::Approx(0.1));
    CHECK(e.block("c").linf == doctest::Approx(0.1));
    CHECK(e.block("pi").l1 == 0.0);
    ok[3] = 1;
    cand(0, 3) = 1e9;
    e = grid_error(cand, ref, ok, blocks);
    CHECK(e.failures == 1);
    CHECK(e.block("pi").linf == 0.0);
    CHECK_THROWS_AS(e.block("u"), ContractError);
    CHECK_THROWS_AS(grid_error(cand, ref.leftCols(9), ok, blocks), ContractError);
}

TEST_CASE("L1 never exceeds Linf") {
    const auto blocks = control_blocks(1, 4);
    const Mat a = Mat::Random(4, 50), b = Mat::Random(4, 50);
    const GridError e = grid_error(a, b, std::vector<char>(50, 0), blocks);
    CHECK(e.block("u").l1 <= e.block("u").linf);
}

TEST_CASE("evaluation grids stay inside the anchor support") {
    RunConfig c = parse_config(R"({"problem": {"dim": 3, "target": [1, 0, -1]}, "anchor": {"halfwidth": 0.5},
                                   "grid": {"times": 4, "points": 6, "axis_slices": true}})");
    const EvalGrid g = EvalGrid::build(c);
    CHECK(g.size() == 4 * 6 * 4);
    CHECK(g.slices == 4);
    for (const auto& q : g.queries) {
        CHECK(q.t < 1.0);
        CHECK((q.x - c.lq.target).cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
    }
    const EvalGrid s = g.subgrid(2, 3);
    CHECK(s.size() == 2 * 2);
    CHECK_THROWS_AS(g.subgrid(0, 1), ContractError);

    const RunConfig m = parse_config(R"({"problem": {"case": 2}, "grid": {"times": 2, "points": 3}})");
    const EvalGrid gm = EvalGrid::build(m);
    CHECK(gm.size() == 6);
    CHECK(gm.queries[0].x[0] == doctest::Approx(-0.5));
    CHECK(gm.queries[2].x[0] == doctest::Approx(0.5));
    CHECK(gm.queries[3].t == doctest::Approx(0.5));
}

TEST_CASE("statistics helpers") {
    auto [m, s] = mean_std({1.0, 2.0, 3.0});
    CHECK(m == doctest::Approx(2.0));
    CHECK(s == doctest::Approx(1.0));
    CHECK(mean_std({4.0}).second == 0.0);
    CHECK(loglog_slope({1, 2, 4}, {3, 6, 12}) == doctest::Approx(1.0));
    CHECK(loglog_slope({1, 10}, {1, 100}) == doctest::Approx(2.0));
}

TEST_CASE("bridge checks need strict and resolved decreases") {
    std::vector<BridgeResult> rs(3);
    const double dts[3] = {1.0 / 32, 1.0 / 64, 1.0 / 128};
    const double vals[3] = {0.3, 0.2, 0.1};
    for (int i = 0; i < 3; ++i) {
        rs[i].prefix_time = 0.5;
        rs[i].dt = dts[i];
        rs[i].rho_over_dt = vals[i];
        rs[i].std_error = 0.01;
    }
    auto c = check_bridge(rs);
    REQUIRE(c.size() == 1);
    CHECK(c[0].decreasing);
    CHECK(c[0].resolved);
    rs[2].std_error = 0.5;
    c = check_bridge(rs);
    CHECK(c[0].decreasing);
    CHECK_FALSE(c[0].resolved);
    rs[2].rho_over_dt = 0.25;
    CHECK_FALSE(check_bridge(rs)[0].decreasing);
}

TEST_CASE("case run writes the documented layout and is reproducible") {
    const CaseSetup setup = CaseSetup::from(parse_config(tiny_case1));
    const std::string out = "bench_out";
    fs::remove_all(out);
    const BenchReport r = run_case(setup, out);
    CHECK(r.failed_seeds == 0);
    REQUIRE(r.runs.size() == 2);
    for (const char* f : {"policy.bin", "trace.csv", "projection.csv", "errors.csv", "residual.csv"})
        CHECK(fs::exists(fs::path(out) / "case1" / "1" / f));
    CHECK(fs::exists(fs::path(out) / "case1" / "summary.csv"));
    CHECK(fs::exists(fs::path(out) / "case1" / "summary.txt"));
    CHECK(count_rows(out + "/case1/1/projection.csv") == 20);
    CHECK(count_rows(out + "/case1/1/trace.csv") == 15);
    for (const auto& run : r.runs) {
        CHECK(run.stationarity.max_grad_inf <= 1e-8);
        CHECK(run.stationarity.h_decreases == 0);
        CHECK(run.dpo.block("u").l1 <= run.dpo.block("u").linf);
    }
    const SeedRun again = run_seed(setup, 1, "");
    CHECK(again.pgdpo.block("u").l1 == r.runs[0].pgdpo.block("u").l1);
    CHECK(r.find("pgdpo", "u")->seeds == 2);
    fs::remove_all(out);
}

TEST_CASE("dpo-only runs score the trained policy directly") {
    RunConfig c = parse_config(tiny_case1);
    c.methods = {"dpo"};
    const CaseSetup setup = CaseSetup::from(c);
    const SeedRun run = run_seed(setup, 1, "");
    CHECK_FALSE(run.has_pgdpo);
    const TrainResult tr = warm_start(*setup.problem, setup.kernel, setup.initial_policy(1), setup.anchors,
                                      setup.train_config(1));
    const EvalGrid g = EvalGrid::build(c);
    Mat u(2, g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u.col(i) = tr.policy.act(g.queries[i].t, g.queries[i].x);
    const GridError e = grid_error(u, setup.reference_controls(g.queries), std::vector<char>(g.size(), 0), setup.blocks);
    CHECK(e.block("u").l1 == run.dpo.block("u").l1);
}

TEST_CASE("residual curve, sweep and runtime outputs") {
    const CaseSetup s1 = CaseSetup::from(parse_config(tiny_case1));
    const ResidualCurve curve = residual_curve(s1, 1, "curve_test.csv");
    CHECK(curve.iterations == std::vector<int>{0, 5, 10, 15});
    CHECK(curve.projected < curve.warmup_final);
    CHECK(count_rows("curve_test.csv") == 6);
    const ResidualCurve again = residual_curve(s1, 1, "");
    CHECK(again.warmup == curve.warmup);
    fs::remove("curve_test.csv");

    const RuntimeReport none = runtime_scaling(s1, s1.initial_policy(1), {{32, 4}}, 0, 1, "rt_test.csv");
    CHECK(none.rows.empty());
    CHECK(count_rows("rt_test.csv") == 0);
    const RuntimeReport some = runtime_scaling(s1, s1.initial_policy(1), {{32, 4}, {64, 8}}, 2, 1, "rt_test.csv");
    CHECK(some.rows.size() == 2);
    CHECK(count_rows("rt_test.csv") == 2);
    fs::remove("rt_test.csv");

    const RunConfig c2 = parse_config(tiny_case2);
    const auto rows = dimension_sweep(c2, "sweep_out");
    CHECK(rows.size() == 2 * 2 * 2);
    CHECK(fs::exists("sweep_out/sweep.csv"));
    const BenchReport direct = run_case(CaseSetup::from(c2), "");
    for (const auto& r : rows)
        if (r.dim == 2 && r.stats.method == "pgdpo" && r.stats.block == "c")
            CHECK(r.stats.l1_mean == direct.find("pgdpo", "c")->l1_mean);
    fs::remove_all("sweep_out");
    CHECK_THROWS_AS(dimension_sweep(parse_config(tiny_case1), ""), ConfigError);
}
