#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgdpo/linalg.hpp"

namespace pgdpo {

/// Deterministic feedback control u(t, x), evaluated on batches of paths
/// stored column-wise.  Implementations are read-only during evaluation.
class FeedbackPolicy {
public:
    virtual ~FeedbackPolicy() = default;

    virtual int state_dim() const = 0;
    virtual int control_dim() const = 0;
    virtual int param_count() const { return 0; }
    /// Rows of per-path scratch that `act_batch` records for `vjp_batch`.
    virtual int cache_rows() const { return 0; }
    /// True when u does not depend on x.
    virtual bool is_open_loop() const = 0;

    /// U(:, i) = u(t[i], X(:, i)).  `cache` must have cache_rows() rows (may be
    /// empty when cache_rows() is 0).
    virtual void act_batch(CVecRef t, CMatRef x, MatRef u, MatRef cache) const = 0;

    /// Reverse pass for cotangents G (m x B) at the points of a previous
    /// `act_batch` call.  Optional outputs (null to skip):
    ///   state_grad  d x B, receives += (du/dx)' G per column
    ///   param_sum   length P, receives += sum over columns of (du/dtheta)' G
    ///   param_cols  P x B, receives += (du/dtheta)' G per column
    virtual void vjp_batch(CVecRef t, CMatRef x, CMatRef cache, CMatRef g, Mat* state_grad,
                           Vec* param_sum, Mat* param_cols) const = 0;

    Vec act(double t, CVecRef x) const;
    /// Exact m x d Jacobian du/dx.
    Mat state_jacobian(double t, CVecRef x) const;
};

enum class OutputHead { Identity, Softplus };

std::string head_name(OutputHead head);
OutputHead parse_head(const std::string& name);

/// Affine input map: time enters as t / time_scale, state as (x - center) / scale.
struct InputNormalization {
    double time_scale = 1.0;
    Vec center;  // empty means zeros
    Vec scale;   // empty means ones
};

/// Feed-forward tanh network with per-output head transforms.
///
/// Parameter layout: for each layer, W (column-major, out x in) then b.
/// With `state_input` false the network sees only time and is open-loop.
class MlpPolicy final : public FeedbackPolicy {
public:
    struct Architecture {
        int state_dim = 1;
        int control_dim = 1;
        std::vector<int> hidden{128, 128};
        std::vector<OutputHead> heads;  // empty means all identity
        bool state_input = true;
    };

    MlpPolicy(Architecture arch, InputNormalization norm);

    /// Glorot-uniform weights, zero biases.
    static MlpPolicy init(Architecture arch, InputNormalization norm, std::uint64_t seed);

    int state_dim() const override { return arch_.state_dim; }
    int control_dim() const override { return arch_.control_dim; }
    int param_count() const override { return static_cast<int>(theta_.size()); }
    int cache_rows() const override { return cache_rows_; }
    bool is_open_loop() const override { return !arch_.state_input; }

    void act_batch(CVecRef t, CMatRef x, MatRef u, MatRef cache) const override;
    void vjp_batch(CVecRef t, CMatRef x, CMatRef cache, CMatRef g, Mat* state_grad,
                   Vec* param_sum, Mat* param_cols) const override;

    const Vec& params() const noexcept { return theta_; }
    void set_params(const Vec& theta);
    const Architecture& architecture() const noexcept { return arch_; }
    const InputNormalization& normalization() const noexcept { return norm_; }
    /// Layer widths including input and output.
    const std::vector<int>& widths() const noexcept { return widths_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Checkpoint: one JSON header line, then P little-endian doubles.
    void save(std::ostream& os) const;
    void save(const std::string& path) const;
    static MlpPolicy load(std::istream& is);
    static MlpPolicy load(const std::string& path);

private:
    void input_layer(CVecRef t, CMatRef x, Mat& a0) const;

    Architecture arch_;
    InputNormalization norm_;
    std::vector<int> widths_;
    std::vector<int> offsets_;  // start of each layer's W in theta
    Vec theta_;
    Vec inv_scale_;
    int cache_rows_ = 0;
    std::uint64_t seed_ = 0;
};

/// Open-loop constant control.
class ConstantPolicy final : public FeedbackPolicy {
public:
    ConstantPolicy(int state_dim, Vec value) : d_(state_dim), value_(std::move(value)) {}

    int state_dim() const override { return d_; }
    int control_dim() const override { return static_cast<int>(value_.size()); }
    bool is_open_loop() const override { return true; }
    void act_batch(CVecRef t, CMatRef x, MatRef u, MatRef cache) const override;
    void vjp_batch(CVecRef, CMatRef, CMatRef, CMatRef, Mat*, Vec*, Mat*) const override {}

private:
    int d_;
    Vec value_;
};

}  // namespace pgdpo
