// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark orchestration. A run is a pure function of (corpus, config,
// seed): every cell trains its own model from the same seed, so cells may
// run on several threads without changing any result. The config keys are
// documented in docs/config.md.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asrser/correction/correction.hpp"
#include "asrser/fusion/fusion.hpp"
#include "asrser/harness/corpus.hpp"
#include "asrser/trainer/trainer.hpp"

namespace asrser::harness {

/// Per-corpus bundle of task, reported metrics, training recipe and
/// evaluation scheme.
struct Profile {
    std::string name;
    LabelKind label_kind = LabelKind::categorical;
    trainer::TaskSpec task;
    std::vector<std::string> metrics;
    double lr = 5e-4;
    std::size_t epochs = 100;
    /// k-fold cross-validation when true; otherwise the corpus "split" field.
    bool kfold = true;
    std::size_t folds = 5;
};

/// "iemocap-like", "mosi-like" or "podcast-like".
const Profile& profile(const std::string& name);
const std::vector<Profile>& profiles();

/// True for metrics where lower values are better (MAE).
bool lower_is_better(const std::string& metric);

struct TextEncoderConfig {
    std::size_t dim = 768;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    Profile profile;
    std::string corpus_tag;
    std::vector<fusion::Technique> techniques;
    /// Hypothesis sources to evaluate; empty means all, in corpus order.
    std::vector<std::string> sources;
    std::size_t model_dim = 128;
    std::size_t heads = 8;
    std::size_t misa_dim = 64;
    double misa_similarity_weight = 0.1;
    double misa_difference_weight = 0.1;
    trainer::TrainConfig train;
    std::size_t folds = 5;
    /// Evaluate only the first N folds of the k-fold partition; 0 = all.
    std::size_t folds_to_run = 0;
    correction::BackendConfig corrector;
    std::optional<TextEncoderConfig> text_encoder;
    std::size_t threads = 1;
    std::uint64_t seed = 0;
};

/// Parses the JSON config document; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Config populated from a profile's defaults.
ExperimentConfig default_config(const std::string& profile_name);

struct ResultRow {
    std::string corpus;
    std::string technique;
    std::string source;
    /// Absent for aggregate rows such as "maximum diff".
    std::optional<double> wer;
    std::vector<std::pair<std::string, double>> metrics;
    std::uint64_t seed = 0;

    /// Throws std::out_of_range for an unknown metric.
    double metric(const std::string& name) const;
    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline const std::string kTextOnly = "text-only";
inline const std::string kMaximumDiff = "maximum diff";

/// One text-only row per evaluated source, then the ground-truth row.
std::vector<ResultRow> run_text_only(const Corpus& corpus, const ExperimentConfig& config);

/// For each technique: one row per source, the ground-truth row, and a
/// "maximum diff" row holding max over sources of the ground-truth
/// advantage (sign flipped for lower-is-better metrics).
std::vector<ResultRow> run_fusion(const Corpus& corpus, const ExperimentConfig& config);

/// Best single source (lowest WER, text-only), ground truth (text-only),
/// and corrected transcripts with modality-gated fusion.
std::vector<ResultRow> run_framework(const Corpus& corpus, const ExperimentConfig& config);

struct SingleRun {
    ResultRow row;
    trainer::ModelSpec spec;
    trainer::TrainResult result;
};

/// Trains one configuration on the first fold (or the train split) and
/// scores it on the matching test part. `source` is a hypothesis source or
/// kGroundTruth; `technique` is ignored unless `mode` is fused.
SingleRun run_single(const Corpus& corpus, const ExperimentConfig& config, trainer::InputMode mode,
                     fusion::Technique technique, const std::string& source);

/// Pooled WER of one source over the corpus.
double source_wer(const Corpus& corpus, const std::string& source);

}  // namespace asrser::harness
