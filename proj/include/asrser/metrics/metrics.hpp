// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Transcript normalization, word alignment and WER, and the emotion
// metrics (Acc2/Acc4/Acc7, MAE, CCC).

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace asrser::metrics {

/// Lowercase, punctuation-free word tokens.
using TokenSeq = std::vector<std::string>;

/// Lowercases ASCII letters, drops ASCII punctuation and splits on
/// whitespace. Bytes outside ASCII pass through unchanged.
TokenSeq normalize_text(std::string_view raw);
std::string join(const TokenSeq& tokens);

class EmptyReference : public std::invalid_argument {
public:
    EmptyReference() : std::invalid_argument("alignment needs a non-empty reference") {}
};

enum class EditKind { match, substitute, del, insert };

struct EditOp {
    EditKind kind = EditKind::match;
    std::size_t ref_index = 0;  // meaningless for insert
    std::size_t hyp_index = 0;  // meaningless for del
    /// Hypothesis token produced by the op (empty for del).
    std::string token;
};

struct Alignment {
    std::vector<EditOp> ops;
    std::size_t matches = 0;
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t ref_length = 0;

    std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
    std::size_t hyp_length() const noexcept { return matches + substitutions + insertions; }
};

/// Unit-cost minimal alignment. On ties the backtrace (from the end)
/// prefers match, then substitution, deletion, insertion.
Alignment levenshtein_align(const TokenSeq& ref, const TokenSeq& hyp);

/// Applies the ops to the reference; yields the hypothesis for any
/// alignment produced by levenshtein_align.
TokenSeq replay(const TokenSeq& ref, const Alignment& a);

/// (S + D + I) / N. May exceed 1.
double wer(const Alignment& a);
double wer(const TokenSeq& ref, const TokenSeq& hyp);

/// Pooled corpus WER: total errors over total reference words.
class WerAccumulator {
public:
    void add(const Alignment& a);
    std::size_t errors() const noexcept { return errors_; }
    std::size_t ref_words() const noexcept { return ref_words_; }
    std::size_t utterances() const noexcept { return utterances_; }
    /// Throws std::logic_error when nothing was added.
    double value() const;

private:
    std::size_t errors_ = 0;
    std::size_t ref_words_ = 0;
    std::size_t utterances_ = 0;
};

enum class AccuracyScheme { acc2, acc4, acc7 };

/// Positive iff x > 0.
int acc2_class(double x);
/// Rounded half away from zero, clamped to [-3, 3].
int acc7_class(double x);

/// Acc4 compares the values exactly (they are class indices); Acc2 and
/// Acc7 ground both sides first. Throws std::invalid_argument on empty or
/// mismatched input.
double accuracy(std::span<const double> preds, std::span<const double> labels, AccuracyScheme scheme);
double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> labels);

double mae(std::span<const double> preds, std::span<const double> labels);

/// Lin's concordance correlation with population moments; 0 when the
/// denominator vanishes. Needs at least two points.
double ccc(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation; tied values get their average rank. 0 when
/// either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace asrser::metrics
