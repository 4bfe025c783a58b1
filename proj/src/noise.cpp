#include "pgdpo/noise.hpp"

#include <cmath>
#include <numbers>

namespace pgdpo {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::uint64_t key) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
    auto r = philox4x32({c, b, a, tag_}, seed_);
    return to_unit(r[0], r[1]);
}

std::array<double, 2> CounterRng::normal_pair(std::uint32_t a, std::uint32_t b,
                                              std::uint32_t c) const {
    auto r = philox4x32({c, b, a, tag_}, seed_);
    double u1 = to_unit(r[0], r[1]);
    double u2 = to_unit(r[2], r[3]);
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

double NoiseStream::standard_normal(std::uint64_t step, int coord) const {
    auto pair = rng_.normal_pair(static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(step),
                                 static_cast<std::uint32_t>(coord / 2));
    return pair[coord % 2];
}

void NoiseStream::increments(std::uint64_t step, double dt, VecRef out) const {
    const int q = static_cast<int>(out.size());
    out.setZero();
    const bool shared = step * static_cast<std::uint64_t>(substeps_) < prefix_steps_;
    const std::uint64_t path = shared ? prefix_path_ : path_;
    for (int s = 0; s < substeps_; ++s) {
        const std::uint64_t base = step * static_cast<std::uint64_t>(substeps_) + s;
        for (int j = 0; j < q; j += 2) {
            auto pair = rng_.normal_pair(static_cast<std::uint32_t>(path),
                                         static_cast<std::uint32_t>(base),
                                         static_cast<std::uint32_t>(j / 2));
            out[j] += pair[0];
            if (j + 1 < q) out[j + 1] += pair[1];
        }
    }
    out *= (shared ? 1.0 : sign_) * std::sqrt(dt / substeps_);
}

NoiseStream batch_stream(std::uint64_t seed, std::uint64_t path, bool antithetic, int substeps) {
    if (!antithetic) return NoiseStream(seed, path, false, substeps);
    return NoiseStream(seed, path / 2, (path % 2) == 1, substeps);
}

}  // namespace pgdpo
