#pragma once

#include <array>
#include <cstdint>

#include "pgdpo/linalg.hpp"

namespace pgdpo {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::uint64_t key);

/// Stateless splitmix64 finalizer; used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Streams sharing a base seed but never overlapping.
enum class StreamTag : std::uint32_t {
    Brownian = 1,
    Anchors = 2,
    Init = 3,
    Market = 4,
    Grid = 5,
};

/// Counter-based random source: every draw is a pure function of
/// (seed, tag, a, b, c), independent of call order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, StreamTag tag) : seed_(seed), tag_(static_cast<std::uint32_t>(tag)) {}

    /// Uniform in (0, 1).
    double uniform(std::uint32_t a, std::uint32_t b, std::uint32_t c) const;
    /// Two independent standard normals from one block.
    std::array<double, 2> normal_pair(std::uint32_t a, std::uint32_t b, std::uint32_t c) const;
    double normal(std::uint32_t a, std::uint32_t b, std::uint32_t c) const {
        return normal_pair(a, b, c)[0];
    }

private:
    std::uint64_t seed_;
    std::uint32_t tag_;
};

/// Brownian increments for one path, keyed by (seed, path, step, coordinate).
///
/// `substeps > 1` builds each increment as the sum of that many base
/// increments, so a coarse rollout sees exactly the Brownian path of a
/// rollout refined by the same factor.  The antithetic flag negates the stream.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t path, bool antithetic = false, int substeps = 1)
        : rng_(seed, StreamTag::Brownian), path_(path), sign_(antithetic ? -1.0 : 1.0),
          substeps_(substeps) {}

    /// Standard normal for base step `step` and coordinate `coord`.
    double standard_normal(std::uint64_t step, int coord) const;

    /// Fill `out` with the increments of step `step` for a step of length dt.
    void increments(std::uint64_t step, double dt, VecRef out) const;

    /// Copy whose first `steps` base steps are taken from the plain stream of
    /// `prefix_path` (sign +1); later steps are unchanged.  Used to branch many
    /// continuations off one shared prefix.
    NoiseStream with_shared_prefix(std::uint64_t prefix_path, std::uint64_t steps) const {
        NoiseStream s = *this;
        s.prefix_path_ = prefix_path;
        s.prefix_steps_ = steps;
        return s;
    }

    std::uint64_t path() const noexcept { return path_; }
    bool antithetic() const noexcept { return sign_ < 0.0; }
    int substeps() const noexcept { return substeps_; }

private:
    CounterRng rng_;
    std::uint64_t path_;
    double sign_;
    int substeps_;
    std::uint64_t prefix_path_ = 0;
    std::uint64_t prefix_steps_ = 0;
};

/// Path j of a batch: plain streams use index j; antithetic batches pair
/// (2i, 2i+1) on base index i with opposite signs.
NoiseStream batch_stream(std::uint64_t seed, std::uint64_t path, bool antithetic, int substeps = 1);

}  // namespace pgdpo
