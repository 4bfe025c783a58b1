#include "pgdpo/stage1.hpp"

#include <cmath>
#include <numbers>

#include "pgdpo/adjoint.hpp"
#include "pgdpo/errors.hpp"
#include "pgdpo/noise.hpp"
#include "pgdpo/parallel.hpp"
#include "pgdpo/rollout.hpp"

namespace pgdpo {

AnchorDistribution AnchorDistribution::box(CVecRef center, double halfwidth, Time time) {
    if (!(halfwidth >= 0.0)) throw ConstructionError("anchor box half-width must be >= 0");
    AnchorDistribution nu;
    nu.time = time;
    nu.lo = center.array() - halfwidth;
    nu.hi = center.array() + halfwidth;
    return nu;
}

AnchorDistribution AnchorDistribution::log_wealth(double lo, double hi) {
    if (!(lo <= hi)) throw ConstructionError("log-wealth anchor range must satisfy lo <= hi");
    AnchorDistribution nu;
    nu.time = Time::Fixed;
    nu.fixed_t0 = 0.0;
    nu.lo = Vec::Constant(1, lo);
    nu.hi = Vec::Constant(1, hi);
    return nu;
}

void AnchorDistribution::sample(std::uint64_t seed, std::uint64_t batch, std::uint64_t index,
                                double horizon, int steps, double& t0, VecRef x0) const {
    CounterRng rng(mix_seed(seed, batch), StreamTag::Anchors);
    const auto a = static_cast<std::uint32_t>(index);
    if (time == Time::Fixed) {
        t0 = fixed_t0;
    } else {
        t0 = (horizon - horizon / steps) * rng.uniform(a, 0, 0);
    }
    for (Eigen::Index j = 0; j < lo.size(); ++j)
        x0[j] = lo[j] + (hi[j] - lo[j]) * rng.uniform(a, static_cast<std::uint32_t>(j + 1), 0);
}

Adam::Adam(int size, double beta1, double beta2, double eps)
    : m_(Vec::Zero(size)), v_(Vec::Zero(size)), b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::step(Vec& theta, const Vec& grad, double lr) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    theta.array() += lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

namespace {

struct BatchGradient {
    Vec sum;          // summed over paths
    Mat per_path;     // P x M when requested
    Vec returns;      // per path
};

BatchGradient batch_gradient(const ControlProblem& problem, const DiscountKernel& kernel,
                             const MlpPolicy& policy, const AnchorDistribution& nu, int paths,
                             int steps, std::uint64_t seed, std::uint64_t batch, bool antithetic,
                             int substeps, bool per_path) {
    if (nu.dim() != problem.state_dim()) throw ContractError("anchor dimension mismatch");
    const int p = policy.param_count();
    const int nchunks = (paths + chunk_size - 1) / chunk_size;
    const std::uint64_t noise_seed = mix_seed(seed, batch);
    std::vector<Vec> sums(nchunks);
    BatchGradient out;
    out.returns.resize(paths);
    if (per_path) out.per_path.resize(p, paths);
    ReverseOptions ro;
    ro.keep_all = false;
    ro.param_per_path = per_path;
    parallel_for(static_cast<std::size_t>(nchunks), [&](std::size_t c) {
        const int lo = static_cast<int>(c) * chunk_size;
        const int n = std::min(chunk_size, paths - lo);
        Vec t0(n);
        Mat x0(problem.state_dim(), n);
        std::vector<NoiseStream> noise;
        noise.reserve(n);
        for (int j = 0; j < n; ++j) {
            const int path = lo + j;
            const std::uint64_t idx = antithetic ? path / 2 : path;
            nu.sample(seed, batch, idx, problem.horizon(), steps, t0[j], x0.col(j));
            noise.push_back(batch_stream(noise_seed, path, antithetic, substeps));
        }
        Trajectory tr = simulate_paths(problem, policy, kernel, t0, x0, steps, noise, TapeLevel::Full);
        PathwiseAdjoint adj = reverse_pass(tr, policy, ro);
        sums[c] = adj.param_grad;
        out.returns.segment(lo, n) = tr.returns;
        if (per_path) out.per_path.middleCols(lo, n) = adj.param_grad_paths;
    });
    out.sum = Vec::Zero(p);
    for (const auto& s : sums) out.sum += s;
    return out;
}

BatchGradient estimator(const ControlProblem& problem, const DiscountKernel& kernel,
                        const MlpPolicy& policy, const AnchorDistribution& nu, const TrainConfig& cfg,
                        std::uint64_t batch, bool per_path) {
    if (!cfg.richardson)
        return batch_gradient(problem, kernel, policy, nu, cfg.batch, cfg.steps, cfg.seed, batch,
                              cfg.antithetic, 1, per_path);
    // Richardson: 2 g(dt / 2) - g(dt) on one Brownian path.
    BatchGradient fine = batch_gradient(problem, kernel, policy, nu, cfg.batch, 2 * cfg.steps,
                                        cfg.seed, batch, cfg.antithetic, 1, per_path);
    BatchGradient coarse = batch_gradient(problem, kernel, policy, nu, cfg.batch, cfg.steps,
                                          cfg.seed, batch, cfg.antithetic, 2, per_path);
    fine.sum = 2.0 * fine.sum - coarse.sum;
    if (per_path) fine.per_path = 2.0 * fine.per_path - coarse.per_path;
    fine.returns = 2.0 * fine.returns - coarse.returns;
    return fine;
}

}  // namespace

GradientEstimate surrogate_gradient(const ControlProblem& problem, const DiscountKernel& kernel,
                                    const MlpPolicy& policy, const AnchorDistribution& nu,
                                    int paths, int steps, std::uint64_t seed, bool antithetic) {
    if (paths < 2) throw DomainError("surrogate gradient needs M >= 2");
    if (antithetic && paths % 2 != 0) throw DomainError("antithetic batches need an even M");
    BatchGradient bg = batch_gradient(problem, kernel, policy, nu, paths, steps, seed, 0, antithetic,
                                      1, true);
    GradientEstimate est;
    column_mean_and_error(bg.per_path, antithetic, est.mean, est.std_error);
    est.mean_return = pairwise_sum(bg.returns.data(), static_cast<std::size_t>(paths)) / paths;
    est.paths = paths;
    return est;
}

TrainResult warm_start(const ControlProblem& problem, const DiscountKernel& kernel,
                       const MlpPolicy& initial, const AnchorDistribution& nu,
                       const TrainConfig& cfg, const TrainObserver& observer) {
    if (cfg.iterations < 0 || cfg.batch < 1 || cfg.steps < 1)
        throw DomainError("K0 >= 0, M >= 1 and N >= 1 required");
    if (cfg.antithetic && cfg.batch % 2 != 0) throw DomainError("antithetic batches need an even M");
    if (cfg.control_variate && !cfg.antithetic)
        throw DomainError("the control variate pairs antithetic paths");
    if (initial.state_dim() != problem.state_dim() || initial.control_dim() != problem.control_dim())
        throw ContractError("policy architecture does not match the problem");

    TrainResult res{initial, {}, 0};
    const int p = initial.param_count();
    Adam adam(p, cfg.beta1, cfg.beta2, cfg.adam_eps);
    Vec theta = initial.params();
    Vec cv_cov = Vec::Zero(p), cv_var = Vec::Zero(p), cv_beta = Vec::Zero(p);
    res.trace.reserve(cfg.iterations);

    for (int it = 0; it < cfg.iterations; ++it) {
        TraceRow row;
        row.iteration = it;
        BatchGradient bg;
        bool ok = true;
        try {
            bg = estimator(problem, kernel, res.policy, nu, cfg, static_cast<std::uint64_t>(it),
                           cfg.control_variate);
        } catch (const SimulationDiverged&) {
            ok = false;
        } catch (const NumericError&) {
            ok = false;
        }
        if (!ok) {
            ++res.skips;
            if (res.skips * 10 > cfg.iterations)
                throw TrainingAborted("more than 10% of Stage-1 iterations diverged");
            row.mean_return = std::nan("");
            row.skips = res.skips;
            res.trace.push_back(row);
            if (observer) observer(it, res.policy);
            continue;
        }
        Vec grad;
        if (cfg.control_variate) {
            const int pairs = cfg.batch / 2;
            Mat mean_part(p, pairs), diff_part(p, pairs);
            for (int i = 0; i < pairs; ++i) {
                mean_part.col(i) = 0.5 * (bg.per_path.col(2 * i) + bg.per_path.col(2 * i + 1));
                diff_part.col(i) = 0.5 * (bg.per_path.col(2 * i) - bg.per_path.col(2 * i + 1));
            }
            Vec pm = pairwise_column_sum(mean_part) / pairs;
            Vec hm = pairwise_column_sum(diff_part) / pairs;
            grad = pm - cv_beta.cwiseProduct(hm);
            // Coefficient for the next batch from this batch's moments.
            Mat pc = mean_part.colwise() - pm;
            Mat hc = diff_part.colwise() - hm;
            Vec cov = pairwise_column_sum(pc.cwiseProduct(hc)) / pairs;
            Vec var = pairwise_column_sum(hc.cwiseAbs2()) / pairs;
            cv_cov = cfg.cv_decay * cv_cov + (1.0 - cfg.cv_decay) * cov;
            cv_var = cfg.cv_decay * cv_var + (1.0 - cfg.cv_decay) * var;
            for (int i = 0; i < p; ++i)
                cv_beta[i] = cv_var[i] > 0.0 ? std::clamp(cv_cov[i] / cv_var[i], -cfg.cv_clip, cfg.cv_clip)
                                             : 0.0;
        } else {
            grad = bg.sum / static_cast<double>(cfg.batch);
        }
        row.mean_return = pairwise_sum(bg.returns.data(), bg.returns.size()) / cfg.batch;
        row.grad_norm = grad.norm();
        row.skips = res.skips;
        if (cfg.clip > 0.0 && row.grad_norm > cfg.clip) grad *= cfg.clip / row.grad_norm;
        double lr = cfg.learning_rate;
        if (cfg.schedule == TrainConfig::Schedule::Cosine)
            lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * it / std::max(1, cfg.iterations)));
        adam.step(theta, grad, lr);
        res.policy.set_params(theta);
        res.trace.push_back(row);
        if (observer) observer(it, res.policy);
    }
    return res;
}

}  // namespace pgdpo
