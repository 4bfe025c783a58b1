#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgdpo/kernels.hpp"
#include "pgdpo/linalg.hpp"
#include "pgdpo/policy.hpp"
#include "pgdpo/problems.hpp"
#include "pgdpo/stage1.hpp"
#include "pgdpo/stage2.hpp"

namespace pgdpo {

struct GridSpec {
    int times = 16;
    int points = 32;
    double halfwidth = 1.0;  // case 1 box half-width around the target
    double lo = -0.5;        // cases 2-3 log-wealth range
    double hi = 0.5;
    std::uint64_t slice_seed = 11;
    bool axis_slices = false;
    bool weighted = false;   // dt dx weighted L1 instead of the plain mean
};

struct BridgeSpec {
    double t0 = 0.0;
    Vec x0;  // empty: target + 0.5
    double fine_step = 1.0 / 1024.0;
    int inner = 4096;
    bool antithetic = true;
    std::vector<double> prefix_times{0.25, 0.5, 0.75};
    std::vector<double> dts{1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0};
};

struct ResidualSpec {
    int every = 50;     // Stage-1 iterations between checkpoints
    int stride_t = 4;   // sub-grid strides over the evaluation grid
    int stride_x = 4;
};

struct SweepSpec {
    std::vector<int> dims{5, 10, 25};
};

struct RuntimeSpec {
    std::vector<std::pair<int, int>> configs{{256, 16}, {1024, 50}, {4096, 100}};
    int repetitions = 5;
};

/// Fully validated run configuration.
struct RunConfig {
    int case_id = 1;
    LqTargetParams lq;
    MertonParams merton;
    int assets = 5;
    std::uint64_t market_seed = 2024;
    bool market_explicit = false;

    DiscountKernel kernel = DiscountKernel::survival_gamma(1.0, 0.2);

    std::vector<int> hidden{128, 128};
    std::vector<OutputHead> heads;  // resolved: one per control

    AnchorDistribution::Time anchor_time = AnchorDistribution::Time::Uniform;
    double anchor_t0 = 0.0;
    double anchor_halfwidth = 1.0;
    double anchor_lo = -0.5;
    double anchor_hi = 0.5;

    TrainConfig stage1;
    ProjectionConfig stage2;
    GridSpec grid;
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::string> methods{"dpo", "pgdpo"};
    std::string out_dir = "runs";
    bool trajectory_dump = false;
    BridgeSpec bridge;
    ResidualSpec residual;
    SweepSpec sweep;
    RuntimeSpec runtime;
    std::vector<Query> queries;  // explicit projection queries (may be empty)

    std::uint64_t hash = 0;  // FNV-1a of the canonical JSON text

    int state_dim() const { return case_id == 1 ? lq.dim : 1; }
    int control_dim() const { return case_id == 1 ? lq.dim : assets + 1; }
    double horizon() const { return case_id == 1 ? lq.horizon : merton.horizon; }
    std::string case_name() const { return "case" + std::to_string(case_id); }
};

/// Parses and validates; throws ConfigError whose field() is the dotted path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Kernel from a JSON object text such as {"kind": "hyperbolic", "kappa": 1}.
DiscountKernel parse_kernel(const std::string& json_text);

}  // namespace pgdpo
