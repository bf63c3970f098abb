// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scaled dot-product and multihead attention over [length, dim] sequences.
// Projections are right-multiplied (x * W) and carry no bias; there is no
// masking and no positional encoding.

#pragma once

#include <cstdint>
#include <string>

#include "asrser/numkernel/params.hpp"
#include "asrser/numkernel/tape.hpp"

namespace asrser::attn {

inline constexpr std::size_t kDefaultHeads = 8;

struct AttentionResult {
    nk::Var output;   // [lq, dv]
    nk::Var weights;  // [lq, lk], rows on the simplex
};

/// softmax(Q K^T / sqrt(dk)) V.
AttentionResult scaled_dot_attention(nk::Var q, nk::Var k, nk::Var v);

/// Projection matrices of one attention block, bound to a tape.
struct MHAWeights {
    std::size_t heads = kDefaultHeads;
    nk::Var w_q;
    nk::Var w_k;
    nk::Var w_v;
    nk::Var w_o;
};

/// Layout of one attention block inside a ParameterSet: four d x d
/// matrices named <prefix>.w_q, .w_k, .w_v, .w_o.
class MHAParams {
public:
    /// Throws nk::DimensionError unless heads > 0 and model_dim % heads == 0.
    MHAParams(std::string prefix, std::size_t model_dim, std::size_t heads = kDefaultHeads);

    void init(nk::ParameterSet& params, std::uint64_t seed) const;
    /// Checks shapes and finiteness of the registered matrices.
    void validate(const nk::ParameterSet& params) const;
    MHAWeights bind(nk::Binding& binding) const;

    const std::string& prefix() const noexcept { return prefix_; }
    std::size_t model_dim() const noexcept { return model_dim_; }
    std::size_t heads() const noexcept { return heads_; }
    std::string name(const char* matrix) const { return prefix_ + "." + matrix; }

private:
    std::string prefix_;
    std::size_t model_dim_;
    std::size_t heads_;
};

/// Project, split into heads, attend per head, concatenate, project out.
/// Output length equals the query length.
nk::Var multihead(nk::Var query_seq, nk::Var kv_seq, const MHAWeights& weights);

/// Query from `a`, keys and values from `b`.
nk::Var cross_attn(nk::Var a, nk::Var b, const MHAWeights& weights);

nk::Var self_attn(nk::Var x, const MHAWeights& weights);

}  // namespace asrser::attn
