// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/attention/attention.hpp"

#include <cmath>
#include <vector>

#include "asrser/numkernel/ops.hpp"

namespace asrser::attn {

using nk::DimensionError;
using nk::Var;

AttentionResult scaled_dot_attention(Var q, Var k, Var v)
{
    const auto& qs = q.shape();
    const auto& ks = k.shape();
    const auto& vs = v.shape();
    if (qs.size() != 2 || ks.size() != 2 || vs.size() != 2 || qs[1] != ks[1] || ks[0] != vs[0]) {
        throw DimensionError("scaled_dot_attention: incompatible Q " + nk::to_string(qs) + ", K " + nk::to_string(ks) +
                             ", V " + nk::to_string(vs));
    }
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(qs[1]));
    Var scores = nk::scale(inv_sqrt_dk, nk::matmul(q, nk::transpose(k)));
    Var weights = nk::softmax(scores, 1);
    return {nk::matmul(weights, v), weights};
}

MHAParams::MHAParams(std::string prefix, std::size_t model_dim, std::size_t heads)
    : prefix_(std::move(prefix)), model_dim_(model_dim), heads_(heads)
{
    if (heads_ == 0 || model_dim_ == 0 || model_dim_ % heads_ != 0) {
        throw DimensionError("multihead attention: model dim " + std::to_string(model_dim_) +
                             " is not divisible by head count " + std::to_string(heads_));
    }
}

void MHAParams::init(nk::ParameterSet& params, std::uint64_t seed) const
{
    for (const char* m : {"w_q", "w_k", "w_v", "w_o"}) {
        params.add_uniform(name(m), {model_dim_, model_dim_}, model_dim_, seed);
    }
}

void MHAParams::validate(const nk::ParameterSet& params) const
{
    for (const char* m : {"w_q", "w_k", "w_v", "w_o"}) {
        const auto& t = params.at(name(m));
        if (t.shape() != nk::Shape{model_dim_, model_dim_}) {
            throw DimensionError(name(m) + " has shape " + nk::to_string(t.shape()) + ", expected [" +
                                 std::to_string(model_dim_) + "," + std::to_string(model_dim_) + "]");
        }
        if (!t.all_finite()) throw std::invalid_argument(name(m) + " contains non-finite values");
    }
}

MHAWeights MHAParams::bind(nk::Binding& binding) const
{
    return {heads_, binding(name("w_q")), binding(name("w_k")), binding(name("w_v")), binding(name("w_o"))};
}

Var multihead(Var query_seq, Var kv_seq, const MHAWeights& w)
{
    const auto& qs = query_seq.shape();
    const auto& ks = kv_seq.shape();
    const auto& ws = w.w_q.shape();
    if (qs.size() != 2 || ks.size() != 2 || ws.size() != 2 || ws[0] != ws[1] || qs[1] != ws[0] || ks[1] != ws[0]) {
        throw DimensionError("multihead: query " + nk::to_string(qs) + " / key-value " + nk::to_string(ks) +
                             " do not match projection " + nk::to_string(ws));
    }
    const std::size_t d = ws[0];
    if (w.heads == 0 || d % w.heads != 0) {
        throw DimensionError("multihead: model dim " + std::to_string(d) + " not divisible by " +
                             std::to_string(w.heads) + " heads");
    }
    const std::size_t head_dim = d / w.heads;

    Var q = nk::matmul(query_seq, w.w_q);
    Var k = nk::matmul(kv_seq, w.w_k);
    Var v = nk::matmul(kv_seq, w.w_v);

    std::vector<Var> heads;
    heads.reserve(w.heads);
    for (std::size_t h = 0; h < w.heads; ++h) {
        const std::size_t lo = h * head_dim, hi = lo + head_dim;
        heads.push_back(scaled_dot_attention(nk::slice(q, 1, lo, hi), nk::slice(k, 1, lo, hi),
                                             nk::slice(v, 1, lo, hi))
                            .output);
    }
    Var merged = w.heads == 1 ? heads.front() : nk::concat(std::span<const Var>(heads), 1);
    return nk::matmul(merged, w.w_o);
}

Var cross_attn(Var a, Var b, const MHAWeights& weights) { return multihead(a, b, weights); }

Var self_attn(Var x, const MHAWeights& weights) { return multihead(x, x, weights); }

}  // namespace asrser::attn
