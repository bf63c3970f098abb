// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/numkernel/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace asrser::nk {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t fnv1a64(std::string_view text) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL)))
{
}

std::uint64_t CounterRng::next() noexcept
{
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

double CounterRng::normal() noexcept
{
    // 1 - u keeps the log argument in (0, 1].
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept
{
    std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    for (;;) {
        std::uint64_t x = next();
        if (x < limit) return x % n;
    }
}

CounterRng CounterRng::fork(std::uint64_t stream) const noexcept
{
    return CounterRng(mix64(key_ ^ 0xA0761D6478BD642FULL), stream);
}

std::vector<std::size_t> permutation(std::size_t n, CounterRng& rng)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace asrser::nk
