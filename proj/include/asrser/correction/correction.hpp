// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// N-best combination. Hypotheses from several ASR sources are merged into a
// confusion network and reduced by voting, or handed to an external
// corrector (child process or HTTP service) that returns one transcript.
// See docs/corrector-protocol.md for the wire format.

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asrser/metrics/metrics.hpp"

namespace asrser::correction {

using metrics::TokenSeq;

struct Hypothesis {
    std::string source;
    TokenSeq tokens;
};

/// Hypotheses of one utterance, in configured source order.
struct HypothesisSet {
    std::string id;
    std::vector<Hypothesis> hypotheses;

    /// Throws std::invalid_argument on an empty set or duplicate sources.
    void validate() const;
    std::vector<TokenSeq> token_lists() const;
};

/// Each slot holds one choice per merged hypothesis; nullopt is NULL.
struct ConfusionNetwork {
    std::vector<std::vector<std::optional<std::string>>> slots;
    std::size_t hypotheses = 0;
};

/// Candidate and vote count of one slot, in order of first appearance.
struct SlotVote {
    std::optional<std::string> token;
    std::size_t votes = 0;
    std::size_t first_hypothesis = 0;
};

/// Seeds the network with the first hypothesis and merges the rest in
/// order. Each merge is a minimal-cost alignment against the slots: a token
/// already present in a slot costs 0, a NULL where the slot already has one
/// costs 0, anything else costs 1.
ConfusionNetwork build_confusion_network(std::span<const TokenSeq> hyps);

std::vector<SlotVote> slot_votes(const ConfusionNetwork& net, std::size_t slot);

/// Plurality token per slot (NULL included); ties go to the earliest
/// hypothesis holding a tied candidate.
TokenSeq vote_consensus(const ConfusionNetwork& net);
TokenSeq consensus(std::span<const TokenSeq> hyps);

/// Backend failure for one utterance.
class CorrectionError : public std::runtime_error {
public:
    CorrectionError(std::string utterance_id, const std::string& what);
    const std::string& utterance_id() const noexcept { return id_; }

private:
    std::string id_;
};

enum class BackendKind { builtin_consensus, external_process, external_http };

struct BackendConfig {
    BackendKind kind = BackendKind::builtin_consensus;
    /// Shell command for external-process; falls back to $ASRSER_CORRECTOR_CMD.
    std::string command;
    /// http://host[:port]/path for external-http; falls back to $ASRSER_CORRECTOR_URL.
    std::string url;
    int timeout_ms = 10000;
    /// Use vote_consensus for utterances the backend failed on.
    bool fallback = true;
    /// Requests outstanding at once.
    std::size_t in_flight = 8;
};

BackendKind parse_backend_kind(const std::string& name);
std::string backend_kind_name(BackendKind kind);

class Corrector {
public:
    virtual ~Corrector() = default;
    /// One normalized transcript per input, in input order.
    virtual std::vector<TokenSeq> correct(std::span<const HypothesisSet> batch) = 0;
    TokenSeq correct(const HypothesisSet& one);
    virtual std::string name() const = 0;
};

/// Validates the config (positive timeout and in-flight limit, endpoint
/// present) and builds the backend.
std::unique_ptr<Corrector> make_corrector(BackendConfig config);

/// Wire helpers, exposed for tests and the CLI.
std::string encode_request(const HypothesisSet& hyps);
/// Parses {"id", "corrected"}; throws std::invalid_argument when malformed.
std::pair<std::string, std::string> decode_response(const std::string& body);

struct SourceWer {
    std::string source;
    double wer = 0.0;
};

struct CorrectionReport {
    std::vector<SourceWer> per_source;
    double corrected_wer = 0.0;
    std::string best_source;
    double best_wer = 0.0;
    std::vector<TokenSeq> corrected;
};

/// Pooled WER of every source and of the corrector's output. All sets must
/// list the same sources in the same order.
CorrectionReport evaluate_correction(std::span<const TokenSeq> references, std::span<const HypothesisSet> hyps,
                                     Corrector& corrector);

}  // namespace asrser::correction
