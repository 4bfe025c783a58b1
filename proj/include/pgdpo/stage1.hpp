#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pgdpo/kernels.hpp"
#include "pgdpo/linalg.hpp"
#include "pgdpo/policy.hpp"
#include "pgdpo/problems.hpp"

namespace pgdpo {

/// Random anchors (t0, x0): t0 fixed or uniform on [0, T - T/N]; x0 uniform on a box.
struct AnchorDistribution {
    enum class Time { Fixed, Uniform };

    Time time = Time::Uniform;
    double fixed_t0 = 0.0;
    Vec lo, hi;

    /// Uniform t0, box target +/- halfwidth.
    static AnchorDistribution box(CVecRef center, double halfwidth, Time time = Time::Uniform);
    /// Fixed t0 = 0, scalar log-wealth uniform on [lo, hi].
    static AnchorDistribution log_wealth(double lo, double hi);

    /// Anchor `index` of draw `batch` under `seed`; pure function of its arguments.
    void sample(std::uint64_t seed, std::uint64_t batch, std::uint64_t index, double horizon,
                int steps, double& t0, VecRef x0) const;
    int dim() const { return static_cast<int>(lo.size()); }
};

struct TrainConfig {
    enum class Schedule { Constant, Cosine };

    int iterations = 500;   // K0
    int batch = 256;        // M
    int steps = 64;         // N per rollout
    double learning_rate = 1e-3;
    Schedule schedule = Schedule::Constant;
    double clip = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    bool antithetic = true;
    bool richardson = false;
    bool control_variate = false;
    double cv_decay = 0.98;
    double cv_clip = 10.0;
    std::uint64_t seed = 0;
};

struct TraceRow {
    int iteration = 0;
    double mean_return = 0.0;
    double grad_norm = 0.0;
    int skips = 0;
};

struct TrainResult {
    MlpPolicy policy;
    std::vector<TraceRow> trace;
    int skips = 0;
};

/// Adam for ascent on a flat parameter vector.
class Adam {
public:
    Adam(int size, double beta1, double beta2, double eps);
    /// theta += lr * mhat / (sqrt(vhat) + eps) for the ascent direction `grad`.
    void step(Vec& theta, const Vec& grad, double lr);

private:
    Vec m_, v_;
    double b1_, b2_, eps_;
    long t_ = 0;
};

struct GradientEstimate {
    Vec mean;
    Vec std_error;
    double mean_return = 0.0;
    int paths = 0;
};

/// Batch mean and standard error of dJ/dtheta over i.i.d. anchors and noises.
GradientEstimate surrogate_gradient(const ControlProblem& problem, const DiscountKernel& kernel,
                                    const MlpPolicy& policy, const AnchorDistribution& nu,
                                    int paths, int steps, std::uint64_t seed, bool antithetic);

/// Called after every iteration with the updated policy.
using TrainObserver = std::function<void(int iteration, const MlpPolicy& policy)>;

/// Stochastic gradient ascent on the random-anchor surrogate.  Iterations with a
/// diverged rollout are skipped; more than 10% skips raise TrainingAborted.
TrainResult warm_start(const ControlProblem& problem, const DiscountKernel& kernel,
                       const MlpPolicy& initial, const AnchorDistribution& nu,
                       const TrainConfig& cfg, const TrainObserver& observer = {});

}  // namespace pgdpo
