// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/harness/synth.hpp"

#include <cmath>

#include <fmt/core.h>

#include "asrser/numkernel/rng.hpp"

namespace asrser::harness {

namespace {

std::size_t latent_classes(SynthTask task)
{
    switch (task) {
    case SynthTask::emotion4: return 4;
    case SynthTask::sentiment: return 7;
    case SynthTask::vad: return 4;
    }
    return 4;
}

Label make_label(SynthTask task, std::size_t c, nk::CounterRng& rng)
{
    Label label;
    switch (task) {
    case SynthTask::emotion4:
        label.kind = LabelKind::categorical;
        label.cls = c;
        break;
    case SynthTask::sentiment:
        label.kind = LabelKind::score;
        label.score = std::clamp(static_cast<double>(c) - 3.0 + rng.uniform(-0.45, 0.45), -3.0, 3.0);
        break;
    case SynthTask::vad: {
        label.kind = LabelKind::vad;
        const double v = 2.5 + 2.0 * static_cast<double>(c & 1U) + rng.uniform(-0.8, 0.8);
        const double a = 2.5 + 2.0 * static_cast<double>(c >> 1U) + rng.uniform(-0.8, 0.8);
        const double d = 0.5 * (v + a) + rng.uniform(-0.8, 0.8);
        label.vad = {std::clamp(v, 1.0, 7.0), std::clamp(a, 1.0, 7.0), std::clamp(d, 1.0, 7.0)};
        break;
    }
    }
    return label;
}

}  // namespace

void SynthConfig::validate() const
{
    if (n == 0) throw std::invalid_argument("synth: n must be positive");
    if (min_len == 0 || max_len < min_len) throw std::invalid_argument("synth: invalid sentence length range");
    if (min_frames == 0 || max_frames < min_frames) throw std::invalid_argument("synth: invalid frame count range");
    if (audio_dim == 0) throw std::invalid_argument("synth: audio_dim must be positive");
    const std::size_t classes = latent_classes(task);
    const auto keywords = static_cast<std::size_t>(keyword_share * static_cast<double>(vocab_size)) / classes;
    if (keywords == 0 || keywords * classes >= vocab_size) {
        throw std::invalid_argument("synth: vocabulary too small for the keyword blocks");
    }
    if (!(keyword_rate >= 0.0 && keyword_rate <= 1.0)) throw std::invalid_argument("synth: keyword_rate outside [0, 1]");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw std::invalid_argument("synth: test_fraction outside [0, 1)");
    const double total = shares.substitute + shares.del + shares.insert;
    if (!(shares.substitute >= 0 && shares.del >= 0 && shares.insert >= 0) || std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("synth: error shares must be non-negative and sum to 1");
    }
    for (const auto& ch : channels) {
        if (!(ch.rate >= 0.0 && ch.rate <= 1.0)) {
            throw std::invalid_argument(fmt::format("synth: corruption rate {} of channel '{}' outside [0, 1]", ch.rate, ch.name));
        }
        if (ch.name.empty()) throw std::invalid_argument("synth: channel without a name");
    }
}

std::vector<SynthChannel> uniform_channels(std::size_t count, double rate)
{
    std::vector<SynthChannel> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back({fmt::format("asr{:02}", i), rate});
    return out;
}

std::string vocab_token(std::size_t index) { return fmt::format("w{:04}", index); }

TokenSeq corrupt(const TokenSeq& ref, double rate, const ErrorShares& shares, std::size_t vocab_size,
                 nk::CounterRng& rng)
{
    TokenSeq out;
    const double p_sub = rate * shares.substitute;
    const double p_del = p_sub + rate * shares.del;
    for (const auto& tok : ref) {
        const double u = rng.uniform();
        if (u < p_sub) {
            std::string replacement = tok;
            while (replacement == tok) replacement = vocab_token(rng.below(vocab_size));
            out.push_back(std::move(replacement));
        } else if (u < p_del) {
            continue;
        } else if (u < rate) {
            out.push_back(tok);
            out.push_back(vocab_token(rng.below(vocab_size)));
        } else {
            out.push_back(tok);
        }
    }
    return out;
}

Corpus synth_corpus(const SynthConfig& config)
{
    config.validate();
    const std::size_t classes = latent_classes(config.task);
    const auto per_class =
        static_cast<std::size_t>(config.keyword_share * static_cast<double>(config.vocab_size)) / classes;
    const std::size_t neutral_begin = per_class * classes;
    const std::size_t neutral = config.vocab_size - neutral_begin;

    nk::CounterRng means_rng(config.seed, nk::fnv1a64("synth/audio-means"));
    std::vector<std::vector<double>> means(classes, std::vector<double>(config.audio_dim));
    const double mean_scale = config.audio_separation / std::sqrt(static_cast<double>(config.audio_dim)) * 3.0;
    for (auto& m : means)
        for (auto& x : m) x = means_rng.normal() * mean_scale;

    std::optional<HashedTextEncoder> encoder;
    if (config.text_feature_dim > 0) encoder.emplace(config.text_feature_dim, config.text_feature_seed);

    Corpus corpus;
    corpus.utterances.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        nk::CounterRng rng(config.seed, nk::mix64(i) ^ nk::fnv1a64("synth/utterance"));
        Utterance u;
        u.id = fmt::format("syn{:05}", i);
        const std::size_t c = rng.below(classes);
        u.label = make_label(config.task, c, rng);
        u.split = rng.uniform() < config.test_fraction ? "test" : "train";

        const std::size_t len = config.min_len + rng.below(config.max_len - config.min_len + 1);
        for (std::size_t k = 0; k < len; ++k) {
            if (rng.uniform() < config.keyword_rate) {
                u.reference.push_back(vocab_token(c * per_class + rng.below(per_class)));
            } else {
                u.reference.push_back(vocab_token(neutral_begin + rng.below(neutral)));
            }
        }

        const std::size_t frames = config.min_frames + rng.below(config.max_frames - config.min_frames + 1);
        nk::Tensor audio({frames, config.audio_dim});
        for (std::size_t r = 0; r < frames; ++r)
            for (std::size_t d = 0; d < config.audio_dim; ++d)
                audio.at(r, d) = means[c][d] + config.audio_noise * rng.normal();
        u.audio_features = std::move(audio);

        for (std::size_t ch = 0; ch < config.channels.size(); ++ch) {
            nk::CounterRng ch_rng = rng.fork(nk::fnv1a64(config.channels[ch].name));
            u.hypotheses.push_back({config.channels[ch].name, corrupt(u.reference, config.channels[ch].rate,
                                                                      config.shares, config.vocab_size, ch_rng)});
        }
        if (encoder) {
            u.text_features.emplace(kGroundTruthKey, encoder->encode(u.reference));
            for (const auto& h : u.hypotheses) u.text_features.emplace(h.source, encoder->encode(h.tokens));
        }
        corpus.utterances.push_back(std::move(u));
    }
    return corpus;
}

}  // namespace asrser::harness
