#include "pgdpo/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "pgdpo/errors.hpp"
#include "pgdpo/noise.hpp"

namespace pgdpo {

namespace {

// tanh through the vectorized exponential.
template <typename Derived>
void tanh_inplace(Eigen::MatrixBase<Derived>& z) {
    z = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

Vec FeedbackPolicy::act(double t, CVecRef x) const {
    Vec tv = Vec::Constant(1, t);
    Mat u(control_dim(), 1);
    Mat cache(cache_rows(), 1);
    act_batch(tv, x, u, cache);
    return u.col(0);
}

Mat FeedbackPolicy::state_jacobian(double t, CVecRef x) const {
    const int m = control_dim();
    const int d = state_dim();
    Vec tv = Vec::Constant(1, t);
    Mat u(m, 1);
    Mat cache(cache_rows(), 1);
    act_batch(tv, x, u, cache);
    Mat jac(m, d);
    if (is_open_loop()) {
        jac.setZero();
        return jac;
    }
    // One reverse sweep per output row.
    Mat tb = Mat::Constant(1, m, t);
    Mat xb = x.replicate(1, m);
    Mat cb = cache.replicate(1, m);
    Mat g = Mat::Identity(m, m);
    Mat sg = Mat::Zero(d, m);
    vjp_batch(tb.row(0).transpose(), xb, cb, g, &sg, nullptr, nullptr);
    jac = sg.transpose();
    return jac;
}

std::string head_name(OutputHead head) {
    return head == OutputHead::Softplus ? "softplus" : "identity";
}

OutputHead parse_head(const std::string& name) {
    if (name == "identity") return OutputHead::Identity;
    if (name == "softplus") return OutputHead::Softplus;
    throw ConstructionError("unknown output head '" + name + "'");
}

MlpPolicy::MlpPolicy(Architecture arch, InputNormalization norm)
    : arch_(std::move(arch)), norm_(std::move(norm)) {
    const int d = arch_.state_dim;
    const int m = arch_.control_dim;
    if (d < 1 || m < 1) throw ConstructionError("policy dimensions must be positive");
    for (int h : arch_.hidden)
        if (h < 1) throw ConstructionError("hidden widths must be positive");
    if (arch_.heads.empty()) arch_.heads.assign(m, OutputHead::Identity);
    if (static_cast<int>(arch_.heads.size()) != m)
        throw ConstructionError("one output head per control coordinate required");
    if (!(norm_.time_scale > 0.0)) throw ConstructionError("time scale must be positive");
    if (norm_.center.size() == 0) norm_.center = Vec::Zero(d);
    if (norm_.scale.size() == 0) norm_.scale = Vec::Ones(d);
    if (norm_.center.size() != d || norm_.scale.size() != d)
        throw ConstructionError("normalization size must match state dimension");
    if ((norm_.scale.array() <= 0.0).any()) throw ConstructionError("state scales must be positive");
    inv_scale_ = norm_.scale.cwiseInverse();

    widths_.clear();
    widths_.push_back(arch_.state_input ? 1 + d : 1);
    for (int h : arch_.hidden) widths_.push_back(h);
    widths_.push_back(m);
    int p = 0;
    offsets_.clear();
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        offsets_.push_back(p);
        p += widths_[l + 1] * widths_[l] + widths_[l + 1];
    }
    theta_ = Vec::Zero(p);
    cache_rows_ = m;
    for (int h : arch_.hidden) cache_rows_ += h;
}

MlpPolicy MlpPolicy::init(Architecture arch, InputNormalization norm, std::uint64_t seed) {
    MlpPolicy pol(std::move(arch), std::move(norm));
    pol.seed_ = seed;
    CounterRng rng(seed, StreamTag::Init);
    for (std::size_t l = 0; l + 1 < pol.widths_.size(); ++l) {
        const int in = pol.widths_[l];
        const int out = pol.widths_[l + 1];
        const double limit = std::sqrt(6.0 / (in + out));
        const int off = pol.offsets_[l];
        for (int i = 0; i < in * out; ++i) {
            const double u = rng.uniform(static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(i), 0);
            pol.theta_[off + i] = limit * (2.0 * u - 1.0);
        }
    }
    return pol;
}

void MlpPolicy::set_params(const Vec& theta) {
    if (theta.size() != theta_.size()) throw ContractError("parameter vector has wrong length");
    theta_ = theta;
}

void MlpPolicy::input_layer(CVecRef t, CMatRef x, Mat& a0) const {
    const auto b = x.cols();
    a0.resize(widths_[0], b);
    a0.row(0) = t.transpose() / norm_.time_scale;
    if (arch_.state_input)
        a0.bottomRows(arch_.state_dim) =
            inv_scale_.asDiagonal() * (x.colwise() - norm_.center);
}

void MlpPolicy::act_batch(CVecRef t, CMatRef x, MatRef u, MatRef cache) const {
    const auto b = x.cols();
    const int layers = static_cast<int>(widths_.size()) - 1;
    Mat a;
    input_layer(t, x, a);
    int row = 0;
    for (int l = 0; l < layers; ++l) {
        const int in = widths_[l];
        const int out = widths_[l + 1];
        Eigen::Map<const Mat> w(theta_.data() + offsets_[l], out, in);
        Eigen::Map<const Vec> bias(theta_.data() + offsets_[l] + out * in, out);
        Mat z = w * a;
        z.colwise() += bias;
        if (l + 1 < layers) tanh_inplace(z);
        if (!z.allFinite()) throw NumericError("non-finite activation", l);
        cache.middleRows(row, out) = z;
        row += out;
        a = std::move(z);
    }
    for (int i = 0; i < arch_.control_dim; ++i) {
        if (arch_.heads[i] == OutputHead::Softplus) {
            for (Eigen::Index j = 0; j < b; ++j) u(i, j) = softplus(a(i, j));
        } else {
            u.row(i) = a.row(i);
        }
    }
}

void MlpPolicy::vjp_batch(CVecRef t, CMatRef x, CMatRef cache, CMatRef g, Mat* state_grad,
                          Vec* param_sum, Mat* param_cols) const {
    const auto b = x.cols();
    const int layers = static_cast<int>(widths_.size()) - 1;
    const int m = arch_.control_dim;
    const bool want_state = state_grad != nullptr && arch_.state_input;
    if (!want_state && param_sum == nullptr && param_cols == nullptr) return;

    std::vector<int> row_of(layers);
    int row = 0;
    for (int l = 0; l < layers; ++l) {
        row_of[l] = row;
        row += widths_[l + 1];
    }

    Mat delta(m, b);
    auto raw = cache.middleRows(row_of[layers - 1], m);
    for (int i = 0; i < m; ++i) {
        if (arch_.heads[i] == OutputHead::Softplus) {
            for (Eigen::Index j = 0; j < b; ++j) delta(i, j) = g(i, j) * sigmoid(raw(i, j));
        } else {
            delta.row(i) = g.row(i);
        }
    }

    Mat a0;
    input_layer(t, x, a0);
    for (int l = layers - 1; l >= 0; --l) {
        const int in = widths_[l];
        const int out = widths_[l + 1];
        const int off = offsets_[l];
        Eigen::Map<const Mat> w(theta_.data() + off, out, in);
        const Mat a_in = (l == 0) ? a0 : Mat(cache.middleRows(row_of[l - 1], in));
        if (param_sum != nullptr) {
            Eigen::Map<Mat> gw(param_sum->data() + off, out, in);
            gw.noalias() += delta * a_in.transpose();
            param_sum->segment(off + out * in, out) += delta.rowwise().sum();
        }
        if (param_cols != nullptr) {
            for (int c = 0; c < in; ++c)
                param_cols->middleRows(off + c * out, out).array() +=
                    delta.array().rowwise() * a_in.row(c).array();
            param_cols->middleRows(off + out * in, out) += delta;
        }
        if (l == 0) {
            if (want_state) {
                Mat back = w.rightCols(arch_.state_dim).transpose() * delta;
                *state_grad += inv_scale_.asDiagonal() * back;
            }
            break;
        }
        Mat prev = w.transpose() * delta;
        prev.array() *= 1.0 - a_in.array().square();
        delta = std::move(prev);
    }
}

void MlpPolicy::save(std::ostream& os) const {
    nlohmann::json h;
    h["format"] = "pgdpo-mlp-v1";
    h["widths"] = widths_;
    std::vector<std::string> heads;
    for (auto hd : arch_.heads) heads.push_back(head_name(hd));
    h["heads"] = heads;
    h["state_input"] = arch_.state_input;
    h["time_scale"] = norm_.time_scale;
    h["center"] = std::vector<double>(norm_.center.data(), norm_.center.data() + norm_.center.size());
    h["scale"] = std::vector<double>(norm_.scale.data(), norm_.scale.data() + norm_.scale.size());
    h["seed"] = seed_;
    h["param_count"] = theta_.size();
    os << h.dump() << '\n';
    for (Eigen::Index i = 0; i < theta_.size(); ++i) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(theta_[i]);
        unsigned char bytes[8];
        for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
        os.write(reinterpret_cast<const char*>(bytes), 8);
    }
    if (!os) throw std::runtime_error("failed to write policy checkpoint");
}

void MlpPolicy::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    save(os);
}

MlpPolicy MlpPolicy::load(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConstructionError("checkpoint header missing");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ConstructionError(std::string("checkpoint header is not JSON: ") + e.what());
    }
    try {
        auto widths = h.at("widths").get<std::vector<int>>();
        if (widths.size() < 2) throw ConstructionError("checkpoint needs at least two widths");
        Architecture arch;
        arch.state_input = h.at("state_input").get<bool>();
        arch.control_dim = widths.back();
        auto center = h.at("center").get<std::vector<double>>();
        arch.state_dim = static_cast<int>(center.size());
        arch.hidden.assign(widths.begin() + 1, widths.end() - 1);
        for (const auto& s : h.at("heads").get<std::vector<std::string>>())
            arch.heads.push_back(parse_head(s));
        InputNormalization norm;
        norm.time_scale = h.at("time_scale").get<double>();
        auto scale = h.at("scale").get<std::vector<double>>();
        norm.center = Eigen::Map<const Vec>(center.data(), static_cast<Eigen::Index>(center.size()));
        norm.scale = Eigen::Map<const Vec>(scale.data(), static_cast<Eigen::Index>(scale.size()));
        MlpPolicy pol(std::move(arch), std::move(norm));
        if (pol.widths_ != widths) throw ConstructionError("checkpoint widths inconsistent");
        pol.seed_ = h.at("seed").get<std::uint64_t>();
        const auto p = h.at("param_count").get<long>();
        if (p != pol.theta_.size()) throw ConstructionError("checkpoint parameter count mismatch");
        for (long i = 0; i < p; ++i) {
            unsigned char bytes[8];
            if (!is.read(reinterpret_cast<char*>(bytes), 8))
                throw ConstructionError("checkpoint truncated");
            std::uint64_t bits = 0;
            for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
            pol.theta_[i] = std::bit_cast<double>(bits);
        }
        return pol;
    } catch (const nlohmann::json::exception& e) {
        throw ConstructionError(std::string("malformed checkpoint header: ") + e.what());
    }
}

MlpPolicy MlpPolicy::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConstructionError("cannot open checkpoint '" + path + "'");
    return load(is);
}

void ConstantPolicy::act_batch(CVecRef, CMatRef x, MatRef u, MatRef) const {
    u = value_.replicate(1, x.cols());
}

}  // namespace pgdpo
