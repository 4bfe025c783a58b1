#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pgdpo/adjoint.hpp"
#include "pgdpo/config.hpp"
#include "pgdpo/kernels.hpp"
#include "pgdpo/linalg.hpp"
#include "pgdpo/policy.hpp"
#include "pgdpo/problems.hpp"
#include "pgdpo/stage1.hpp"
#include "pgdpo/stage2.hpp"

namespace pgdpo {

/// Contiguous group of control coordinates reported separately ("u", or "pi" and "c").
struct ControlBlock {
    std::string name;
    int begin = 0;
    int size = 0;
};

std::vector<ControlBlock> control_blocks(int case_id, int control_dim);

/// Evaluation queries: `times` uniform times in [0, T) crossed with `points`
/// states.  Case 1 uses a seeded random 1-D slice through the target box
/// (plus optional axis slices); cases 2-3 use a uniform log-wealth range.
struct EvalGrid {
    std::vector<Query> queries;
    std::vector<double> time_points;
    int points = 0;           // states per slice
    int slices = 1;
    double cell_measure = 0;  // dt * dx used by the weighted L1
    Vec direction;            // case 1 slice direction

    static EvalGrid build(const RunConfig& cfg);
    /// Every `stride_t`-th time and `stride_x`-th point of the first slice.
    EvalGrid subgrid(int stride_t, int stride_x) const;
    std::size_t size() const noexcept { return queries.size(); }
};

struct BlockError {
    std::string block;
    double l1 = 0.0;
    double linf = 0.0;
};

struct GridError {
    std::vector<BlockError> blocks;
    std::vector<char> failed;  // per query
    int failures = 0;

    const BlockError& block(const std::string& name) const;
};

/// Per-block L1 (mean over successful points of the coordinate-summed absolute
/// error, or its dt dx weighted sum when cell_measure > 0) and L-infinity.
/// Columns of `candidate` and `reference` are grid points.
GridError grid_error(CMatRef candidate, CMatRef reference, const std::vector<char>& failed,
                     const std::vector<ControlBlock>& blocks, double cell_measure = 0.0);

/// Problem, kernel, reference and network layout resolved from a RunConfig.
struct CaseSetup {
    RunConfig config;
    std::shared_ptr<const ControlProblem> problem;
    DiscountKernel kernel = DiscountKernel::exponential(0.0);
    MlpPolicy::Architecture arch;
    InputNormalization norm;
    AnchorDistribution anchors;
    std::shared_ptr<const FeedbackPolicy> reference;
    std::vector<ControlBlock> blocks;

    static CaseSetup from(const RunConfig& cfg);
    MlpPolicy initial_policy(std::uint64_t seed) const;
    TrainConfig train_config(std::uint64_t seed) const;
    /// Reference controls at the queries, one column per query.
    Mat reference_controls(const std::vector<Query>& queries) const;
};

struct StationarityStats {
    double max_grad_inf = 0.0;  // over interior queries
    int h_decreases = 0;        // queries with H(u_proj) < H(u_warm)
    int unconverged = 0;
    int stalled = 0;
    double residual_warm = 0.0;
    double residual_projected = 0.0;
};

struct SeedRun {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    bool has_dpo = false;
    bool has_pgdpo = false;
    GridError dpo;
    GridError pgdpo;
    StationarityStats stationarity;
    std::vector<ProjectionResult> projection;
    std::vector<TraceRow> trace;
    double train_seconds = 0.0;
    double project_seconds = 0.0;
};

/// Stage 1, then Stage 2 on the grid when pgdpo is requested, then errors
/// against the reference.  With a non-empty `out_dir` writes policy.bin,
/// trace.csv, projection.csv, errors.csv and residual.csv there.
SeedRun run_seed(const CaseSetup& setup, std::uint64_t seed, const std::string& out_dir);

struct MethodSummary {
    std::string method;
    std::string block;
    double l1_mean = 0.0;
    double l1_std = 0.0;
    double linf_mean = 0.0;
    double linf_std = 0.0;
    int seeds = 0;
};

struct BenchReport {
    std::vector<SeedRun> runs;
    std::vector<MethodSummary> summary;
    int failed_seeds = 0;

    const MethodSummary* find(const std::string& method, const std::string& block) const;
};

/// Base seed of the Stage-2 Monte Carlo for a run seed; query i uses mix_seed(base, i).
std::uint64_t projection_seed(std::uint64_t seed);

/// Projection rows with state, controls, costates and solver diagnostics;
/// rows flagged in `failed` carry NaN controls and error = 1.
void write_projection_csv(const std::string& path, const std::vector<ProjectionResult>& results,
                          const std::vector<char>& failed, int d, int m, std::uint64_t hash,
                          std::uint64_t seed);

/// Sample mean and standard deviation (n - 1 denominator; zero for n < 2).
std::pair<double, double> mean_std(const std::vector<double>& v);

/// All configured seeds; writes <out>/<case>/<seed>/... and <out>/<case>/summary.{csv,txt}
/// when `out` is non-empty.  Per-seed failures are recorded, not thrown.
BenchReport run_case(const CaseSetup& setup, const std::string& out);

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Acceptance thresholds for a completed bench report.
std::vector<CheckLine> check_case(const CaseSetup& setup, const BenchReport& report);

struct ResidualCurve {
    std::vector<int> iterations;
    std::vector<double> warmup;  // R of the policy at each checkpoint
    double warmup_final = 0.0;
    double projected = 0.0;
};

/// Residual of the Stage-1 policy on the strided sub-grid every `every`
/// iterations (and at 0 and K0), then of the projected controls.
ResidualCurve residual_curve(const CaseSetup& setup, std::uint64_t seed, const std::string& out_csv);

struct SweepRow {
    int dim = 0;
    MethodSummary stats;
};

/// Case-2 runs over asset counts with per-dimension generated markets.
std::vector<SweepRow> dimension_sweep(const RunConfig& cfg, const std::string& out);

struct RuntimeRow {
    int paths = 0;
    int steps = 0;
    double seconds_per_query = 0.0;  // median
};

struct RuntimeReport {
    std::vector<RuntimeRow> rows;
    double slope = 0.0;  // log-log slope of time against paths * steps
};

/// Median wall time of one projection call per (M_MC, N') after a discarded
/// warm-up call.  Zero repetitions give no rows.
RuntimeReport runtime_scaling(const CaseSetup& setup, const FeedbackPolicy& policy,
                              const std::vector<std::pair<int, int>>& configs, int repetitions,
                              std::uint64_t seed, const std::string& out_csv);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Bridge diagnostic on the configured prefix times and step sizes.
std::vector<BridgeResult> run_bridge(const CaseSetup& setup, const FeedbackPolicy& policy,
                                     std::uint64_t seed, const std::string& out_csv);

struct BridgeCheck {
    double prefix_time = 0.0;
    bool decreasing = false;        // rho/dt strictly decreasing as dt halves
    bool resolved = false;          // every decrease exceeds the reported SEs
};

/// Groups bridge results by prefix time, ordered by decreasing dt.
std::vector<BridgeCheck> check_bridge(const std::vector<BridgeResult>& results);

}  // namespace pgdpo
