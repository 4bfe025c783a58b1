#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgdpo/kernels.hpp"
#include "pgdpo/linalg.hpp"
#include "pgdpo/noise.hpp"
#include "pgdpo/policy.hpp"
#include "pgdpo/problems.hpp"

namespace pgdpo {

/// Initial time and state of an anchored rollout.
struct Anchor {
    double t0 = 0.0;
    Vec x0;
};

/// What a rollout records.  `Returns` keeps states, controls, noise and
/// rewards; `Full` additionally keeps every partial the reverse pass consumes.
enum class TapeLevel { Returns, Full };

/// Euler-Maruyama tape for B paths sharing the step count N.  Path i has its
/// own anchor (t0[i], x[0].col(i)) and step dt[i]; its grid is t0[i] + k dt[i].
///
/// Per-path partial blocks are stored side by side: bx[k] is d x (d B) with
/// path i in columns [i d, (i + 1) d); sx[k] and su[k] hold q blocks per path
/// (noise column j of path i at block i q + j) and are left empty when the
/// problem declares the corresponding dependence absent.
struct Trajectory {
    int steps = 0;
    TapeLevel level = TapeLevel::Returns;
    Vec t0, dt;
    std::vector<long> path_ids;
    double horizon = 1.0;

    std::vector<Mat> x;   // N + 1 of d x B
    std::vector<Mat> u;   // N of m x B
    std::vector<Mat> dw;  // N of q x B
    Mat discount;         // (N + 1) x B: D(t0, t_k), last row D(t0, T)
    Mat running;          // N x B: l(t_k, X_k, u_k)
    Mat reward;           // N x B: D(t0, t_k) l_k dt
    Vec terminal;         // D(t0, T) g(X_N)
    Vec returns;          // anchored return per path

    // Full tape only.
    std::vector<Mat> cache;
    std::vector<Mat> bx, bu, sx, su, lx, lu;
    Mat terminal_grad;  // grad g(X_N), d x B

    int paths() const noexcept { return static_cast<int>(t0.size()); }
    double time(int k, int path) const { return t0[path] + k * dt[path]; }
};

/// One path, anchor (t0, x0), step dt, N steps.  Requires t0 + N dt = T within 1e-9.
Trajectory simulate(const ControlProblem& problem, const FeedbackPolicy& policy,
                    const DiscountKernel& kernel, const Anchor& anchor, double dt, int steps,
                    const NoiseStream& noise, TapeLevel level = TapeLevel::Full);

/// Batch form: path i starts at (t0[i], x0.col(i)) with dt[i] = (T - t0[i]) / steps.
Trajectory simulate_paths(const ControlProblem& problem, const FeedbackPolicy& policy,
                          const DiscountKernel& kernel, CVecRef t0, CMatRef x0, int steps,
                          const std::vector<NoiseStream>& noise, TapeLevel level);

/// Anchored discrete return of one path, recomputed with the tape's arithmetic.
double anchored_return(const Trajectory& traj, const DiscountKernel& kernel, double t0,
                       int path = 0);

struct BatchRollout {
    std::vector<Trajectory> chunks;  // consecutive path ranges of at most `chunk_size` paths
    Vec returns;                     // per path, in path order
    double mean_return = 0.0;
};

/// Paths per parallel task; fixed so results do not depend on the worker count.
inline constexpr int chunk_size = 128;

/// M paths from a common anchor using batch_stream(seed, j, antithetic).
BatchRollout simulate_batch(const ControlProblem& problem, const FeedbackPolicy& policy,
                            const DiscountKernel& kernel, const Anchor& anchor, int steps,
                            int paths, std::uint64_t seed, bool antithetic,
                            TapeLevel level = TapeLevel::Returns);

/// Debug dump: path, k, t, X_1..X_d, u_1..u_m, reward_k (the k = N row holds the
/// terminal state with blank controls and the discounted terminal reward).
void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          std::uint64_t config_hash, std::uint64_t seed);

}  // namespace pgdpo
