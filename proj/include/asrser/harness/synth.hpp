// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic corpora with a controllable word error rate. References draw
// from class-conditioned keyword blocks plus a shared neutral vocabulary;
// audio frames scatter around a per-class mean; every ASR channel corrupts
// the reference independently at its own rate.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asrser/harness/corpus.hpp"
#include "asrser/numkernel/rng.hpp"

namespace asrser::harness {

enum class SynthTask { emotion4, sentiment, vad };

struct ErrorShares {
    double substitute = 1.0 / 3.0;
    double del = 1.0 / 3.0;
    double insert = 1.0 / 3.0;
};

struct SynthChannel {
    std::string name;
    double rate = 0.0;
};

struct SynthConfig {
    std::size_t n = 500;
    SynthTask task = SynthTask::emotion4;
    std::size_t vocab_size = 400;
    std::size_t min_len = 6;
    std::size_t max_len = 14;
    /// Probability that a reference token comes from the class keywords.
    double keyword_rate = 0.5;
    /// Fraction of the vocabulary reserved for keywords, split evenly
    /// across latent classes.
    double keyword_share = 0.05;
    std::vector<SynthChannel> channels;
    ErrorShares shares;
    std::size_t audio_dim = 16;
    std::size_t min_frames = 4;
    std::size_t max_frames = 10;
    /// Norm-ish scale of the per-class audio means and of the frame noise.
    double audio_separation = 1.0;
    double audio_noise = 4.5;
    /// Fraction of utterances tagged "test"; the rest are "train".
    double test_fraction = 0.2;
    /// Also store hashed text features for every transcript.
    std::size_t text_feature_dim = 0;
    std::uint64_t text_feature_seed = 0;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument for empty/invalid sizes or rates outside [0, 1].
    void validate() const;
};

/// `count` channels named asr00, asr01, ... all at `rate`.
std::vector<SynthChannel> uniform_channels(std::size_t count, double rate);

/// Corrupts one transcript: per reference token, with probability
/// rate * share substitute it, delete it, or keep it and insert a random
/// token after it.
TokenSeq corrupt(const TokenSeq& ref, double rate, const ErrorShares& shares, std::size_t vocab_size,
                 nk::CounterRng& rng);

std::string vocab_token(std::size_t index);

Corpus synth_corpus(const SynthConfig& config);

}  // namespace asrser::harness
