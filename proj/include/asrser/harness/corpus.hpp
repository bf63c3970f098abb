// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Corpus files: JSON Lines, one utterance per line. The schema is
// documented in docs/corpus-format.md.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asrser/correction/correction.hpp"
#include "asrser/metrics/metrics.hpp"
#include "asrser/numkernel/tensor.hpp"

namespace asrser::harness {

using metrics::TokenSeq;

/// Names accepted for string class labels, in index order.
inline const std::vector<std::string> kEmotionClasses{"angry", "happy", "neutral", "sad"};

/// Source name under which ground-truth text features are stored.
inline const std::string kGroundTruth = "ground truth";
inline const std::string kGroundTruthKey = "ground_truth";

enum class LabelKind { categorical, score, vad };

struct Label {
    LabelKind kind = LabelKind::categorical;
    std::size_t cls = 0;
    double score = 0.0;
    std::array<double, 3> vad{};

    friend bool operator==(const Label&, const Label&) = default;
};

struct Utterance {
    std::string id;
    TokenSeq reference;
    std::vector<correction::Hypothesis> hypotheses;
    Label label;
    std::string split;  // "" when the corpus has no official split
    std::optional<nk::Tensor> audio_features;
    /// Keyed by source name, or kGroundTruthKey for the reference.
    std::map<std::string, nk::Tensor> text_features;

    const correction::Hypothesis& hypothesis(const std::string& source) const;
    correction::HypothesisSet hypothesis_set() const;
};

struct Corpus {
    std::vector<Utterance> utterances;

    /// Hypothesis sources in file order (taken from the first utterance).
    std::vector<std::string> sources() const;
    /// Labels of all utterances share one kind; hypothesis sources agree
    /// in name and order; feature widths agree. Throws SchemaError.
    void validate() const;
};

/// Malformed line or field; the message carries the line number.
class CorpusError : public std::runtime_error {
public:
    CorpusError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct LoadResult {
    Corpus corpus;
    /// Utterances skipped because their reference normalized to nothing.
    std::size_t dropped_blank = 0;
};

LoadResult load_dataset(const std::string& path);
/// Parses one line; `line_number` is used in error messages.
std::optional<Utterance> parse_utterance(const std::string& line, std::size_t line_number);

void save_dataset(const std::string& path, const Corpus& corpus);
std::string serialize_utterance(const Utterance& u);

/// Deterministic token embedding: every token maps to a fixed Gaussian
/// vector drawn from a stream named by the token. An empty transcript
/// encodes as one zero row.
class HashedTextEncoder {
public:
    HashedTextEncoder(std::size_t dim, std::uint64_t seed);
    nk::Tensor encode(const TokenSeq& tokens) const;
    std::size_t dim() const noexcept { return dim_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

}  // namespace asrser::harness
