// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bimodal fusion operators. Every operator takes an audio sequence A[la, d]
// and a text sequence T[lt, d] that already share the model dimension d,
// and produces one fixed-size vector for the backbone. Late fusion is the
// exception: it combines the outputs of two independently trained
// backbones.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "asrser/attention/attention.hpp"
#include "asrser/numkernel/params.hpp"
#include "asrser/numkernel/tape.hpp"

namespace asrser::fusion {

enum class Technique { early, late, cross_attention, tensor, nl_gate, misa, modality_gated };

std::string_view technique_name(Technique t);
/// Accepts the names produced by technique_name(); throws std::invalid_argument otherwise.
Technique parse_technique(std::string_view name);

/// Documented output width of each operator. Late fusion returns the
/// backbone output width, so it has no fixed formula here.
std::size_t output_dim(Technique t, std::size_t model_dim, std::size_t misa_dim);

struct Provenance {
    Technique technique = Technique::early;
    std::size_t model_dim = 0;
    std::size_t out_dim = 0;
    /// Modality-gated fusion only: 0 = audio dominant, 1 = text dominant.
    std::optional<std::size_t> branch;
};

struct FusedVector {
    nk::Var values;
    Provenance provenance;
};

// ---- early / late / tensor -------------------------------------------------

/// concat(mean_pool(A), mean_pool(T)), length 2d.
FusedVector early_fusion(nk::Var audio, nk::Var text);

/// Elementwise mean of the two backbones' outputs.
nk::Var late_fusion(nk::Var audio_out, nk::Var text_out);
nk::Tensor late_fusion(const nk::Tensor& audio_out, const nk::Tensor& text_out);

/// Flattened [a; 1] (x) [t; 1] of the pooled vectors, length (d + 1)^2.
FusedVector tensor_fusion(nk::Var audio, nk::Var text);

// ---- cross-attention ---------------------------------------------------------

/// concat(mean_pool(CrossAttn(A, T)), mean_pool(CrossAttn(T, A))) with one
/// shared attention block, length 2d.
FusedVector cross_attention_fusion(nk::Var audio, nk::Var text, const attn::MHAWeights& weights);

// ---- NL-gate -----------------------------------------------------------------

struct NlGateWeights {
    attn::MHAWeights audio_query;
    attn::MHAWeights text_query;
    nk::Var gate_w_audio;  // [d, d]
    nk::Var gate_b_audio;  // [d]
    nk::Var gate_w_text;
    nk::Var gate_b_text;
};

class NlGateParams {
public:
    NlGateParams(std::string prefix, std::size_t model_dim, std::size_t heads = attn::kDefaultHeads);
    void init(nk::ParameterSet& params, std::uint64_t seed) const;
    NlGateWeights bind(nk::Binding& binding) const;

private:
    std::string prefix_;
    std::size_t model_dim_;
    attn::MHAParams audio_query_;
    attn::MHAParams text_query_;
};

/// G_A = sigmoid(CrossAttn(A, T) Wg_A + b_A) * A and symmetrically for T;
/// output concat(mean_pool(G_A), mean_pool(G_T)), length 2d.
FusedVector nl_gate_fusion(nk::Var audio, nk::Var text, const NlGateWeights& weights);

// ---- MISA --------------------------------------------------------------------

struct MisaWeights {
    nk::Var shared;     // [d, d']
    nk::Var private_a;  // [d, d']
    nk::Var private_t;  // [d, d']
};

class MisaParams {
public:
    MisaParams(std::string prefix, std::size_t model_dim, std::size_t misa_dim);
    void init(nk::ParameterSet& params, std::uint64_t seed) const;
    MisaWeights bind(nk::Binding& binding) const;

private:
    std::string prefix_;
    std::size_t model_dim_;
    std::size_t misa_dim_;
};

struct MisaOutput {
    FusedVector fused;
    /// ||P_s a - P_s t||^2
    nk::Var similarity_loss;
    /// (P_s a . P_a a)^2 + (P_s t . P_t t)^2
    nk::Var difference_loss;
};

/// concat(P_s a, P_s t, P_a a, P_t t) on the pooled vectors, length 4d'.
MisaOutput misa_fusion(nk::Var audio, nk::Var text, const MisaWeights& weights);

// ---- modality-gated fusion ---------------------------------------------------

struct ModalityGateWeights {
    nk::Var w1;  // [2] gate logits (audio, text)
    nk::Var w2;  // [3] concatenation logits (audio, text, fused)
    attn::MHAWeights cross_audio_query;
    attn::MHAWeights cross_text_query;
    attn::MHAWeights self;
};

class ModalityGateParams {
public:
    ModalityGateParams(std::string prefix, std::size_t model_dim, std::size_t heads = attn::kDefaultHeads);

    /// W1 = [1, 1], W2 = [1, 1, 1]; attention blocks uniform.
    void init(nk::ParameterSet& params, std::uint64_t seed) const;
    /// Throws std::invalid_argument for wrong gate shapes or non-finite values.
    void validate(const nk::ParameterSet& params) const;
    ModalityGateWeights bind(nk::Binding& binding) const;

    std::string w1_name() const { return prefix_ + ".w1"; }
    std::string w2_name() const { return prefix_ + ".w2"; }

private:
    std::string prefix_;
    std::size_t model_dim_;
    attn::MHAParams cross_audio_query_;
    attn::MHAParams cross_text_query_;
    attn::MHAParams self_;
};

/// argmax of softmax(w1); ties go to the lowest index (audio).
std::size_t gate_branch(const nk::Tensor& w1_logits);

struct GateOptions {
    /// Pins the branch, e.g. to keep it fixed under finite differences.
    std::optional<std::size_t> force_branch;
};

struct GateTrace {
    nk::Tensor w1_softmax;
    nk::Tensor w2_softmax;
    std::size_t branch = 0;
    std::size_t hidden_length = 0;       // rows of H
    std::size_t concat_length = 0;       // rows of H'
};

/// Modality-gated fusion, length d. The dominant modality stays raw and the
/// other one is replaced by cross-attention with the dominant one as query:
///   g == 0: A' = w1_A A,                  T' = w1_T CrossAttn(A, T)
///   g == 1: A' = w1_A CrossAttn(T, A),    T' = w1_T T
///   H  = SelfAttn([A'; T'])
///   H' = [w2_A A; w2_T T; w2_AT H]        (sequence-axis concatenation)
/// and the result is mean_pool(H').
FusedVector modality_gated_fusion(nk::Var audio, nk::Var text, const ModalityGateWeights& weights,
                                  const GateOptions& options = {}, GateTrace* trace = nullptr);

}  // namespace asrser::fusion
