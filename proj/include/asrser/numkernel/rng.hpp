// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random stream. Every draw is a pure function of
// (seed, stream, counter), so results are identical across platforms and
// standard libraries:
//
//   key      = mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03))
//   draw(i)  = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
//
// where mix64 is the SplitMix64 finalizer. uniform() takes the top 53 bits;
// normal() uses the Box-Muller cosine branch on two consecutive uniforms.

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace asrser::nk {

std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a; used to derive streams from names.
std::uint64_t fnv1a64(std::string_view text) noexcept;

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint64_t next() noexcept;
    /// Uniform in [0, 1).
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept;
    double normal() noexcept;
    /// Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Independent stream keyed off this generator's seed.
    CounterRng fork(std::uint64_t stream) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, CounterRng& rng);

}  // namespace asrser::nk
