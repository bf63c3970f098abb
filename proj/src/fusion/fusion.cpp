// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/fusion/fusion.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "asrser/numkernel/ops.hpp"

namespace asrser::fusion {

using nk::DimensionError;
using nk::Tensor;
using nk::Var;

namespace {

constexpr std::array<std::pair<Technique, std::string_view>, 7> kNames{{
    {Technique::early, "early"},
    {Technique::late, "late"},
    {Technique::cross_attention, "cross-attention"},
    {Technique::tensor, "tensor"},
    {Technique::nl_gate, "nl-gate"},
    {Technique::misa, "misa"},
    {Technique::modality_gated, "modality-gated"},
}};

/// Both inputs must be [len, d] with the same d; returns d.
std::size_t shared_dim(Var audio, Var text, std::string_view op)
{
    const auto& a = audio.shape();
    const auto& t = text.shape();
    if (a.size() != 2 || t.size() != 2 || a[1] != t[1]) {
        throw DimensionError(std::string(op) + ": audio " + nk::to_string(a) + " and text " + nk::to_string(t) +
                             " do not share a model dimension");
    }
    return a[1];
}

Var row(Var v) { return nk::reshape(v, {1, v.value().size()}); }

Var flat(Var v) { return nk::reshape(v, {v.value().size()}); }

}  // namespace

std::string_view technique_name(Technique t)
{
    for (const auto& [tech, name] : kNames) {
        if (tech == t) return name;
    }
    return "unknown";
}

Technique parse_technique(std::string_view name)
{
    for (const auto& [tech, n] : kNames) {
        if (n == name) return tech;
    }
    throw std::invalid_argument("unknown fusion technique '" + std::string(name) + "'");
}

std::size_t output_dim(Technique t, std::size_t model_dim, std::size_t misa_dim)
{
    switch (t) {
    case Technique::early:
    case Technique::cross_attention:
    case Technique::nl_gate:
        return 2 * model_dim;
    case Technique::tensor:
        return (model_dim + 1) * (model_dim + 1);
    case Technique::misa:
        return 4 * misa_dim;
    case Technique::modality_gated:
        return model_dim;
    case Technique::late:
        break;
    }
    throw std::invalid_argument("late fusion has no fixed fused-vector width");
}

FusedVector early_fusion(Var audio, Var text)
{
    const auto d = shared_dim(audio, text, "early_fusion");
    Var out = nk::concat({nk::mean_pool(audio), nk::mean_pool(text)}, 0);
    return {out, {Technique::early, d, 2 * d, std::nullopt}};
}

Var late_fusion(Var audio_out, Var text_out)
{
    if (audio_out.shape() != text_out.shape()) {
        throw DimensionError("late_fusion: output shapes " + nk::to_string(audio_out.shape()) + " and " +
                             nk::to_string(text_out.shape()) + " differ");
    }
    return nk::scale(0.5, nk::add(audio_out, text_out));
}

Tensor late_fusion(const Tensor& audio_out, const Tensor& text_out)
{
    if (audio_out.shape() != text_out.shape()) {
        throw DimensionError("late_fusion: output shapes " + nk::to_string(audio_out.shape()) + " and " +
                             nk::to_string(text_out.shape()) + " differ");
    }
    return nk::scale(0.5, nk::add(audio_out, text_out));
}

FusedVector tensor_fusion(Var audio, Var text)
{
    const auto d = shared_dim(audio, text, "tensor_fusion");
    Var out = nk::outer_augmented(nk::mean_pool(audio), nk::mean_pool(text));
    return {out, {Technique::tensor, d, (d + 1) * (d + 1), std::nullopt}};
}

FusedVector cross_attention_fusion(Var audio, Var text, const attn::MHAWeights& weights)
{
    const auto d = shared_dim(audio, text, "cross_attention_fusion");
    Var a_to_t = attn::cross_attn(audio, text, weights);
    Var t_to_a = attn::cross_attn(text, audio, weights);
    Var out = nk::concat({nk::mean_pool(a_to_t), nk::mean_pool(t_to_a)}, 0);
    return {out, {Technique::cross_attention, d, 2 * d, std::nullopt}};
}

// ---- NL-gate -----------------------------------------------------------------

NlGateParams::NlGateParams(std::string prefix, std::size_t model_dim, std::size_t heads)
    : prefix_(std::move(prefix)),
      model_dim_(model_dim),
      audio_query_(prefix_ + ".attn_a", model_dim, heads),
      text_query_(prefix_ + ".attn_t", model_dim, heads)
{
}

void NlGateParams::init(nk::ParameterSet& params, std::uint64_t seed) const
{
    audio_query_.init(params, seed);
    text_query_.init(params, seed);
    for (const char* side : {"a", "t"}) {
        params.add_uniform(prefix_ + ".gate_w_" + side, {model_dim_, model_dim_}, model_dim_, seed);
        params.add_uniform(prefix_ + ".gate_b_" + side, {model_dim_}, model_dim_, seed);
    }
}

NlGateWeights NlGateParams::bind(nk::Binding& binding) const
{
    return {audio_query_.bind(binding),           text_query_.bind(binding),
            binding(prefix_ + ".gate_w_a"),       binding(prefix_ + ".gate_b_a"),
            binding(prefix_ + ".gate_w_t"),       binding(prefix_ + ".gate_b_t")};
}

FusedVector nl_gate_fusion(Var audio, Var text, const NlGateWeights& w)
{
    const auto d = shared_dim(audio, text, "nl_gate_fusion");
    auto gated = [](Var x, Var attended, Var gate_w, Var gate_b) {
        Var gate = nk::sigmoid(nk::add_rowwise(nk::matmul(attended, gate_w), gate_b));
        return nk::mul(gate, x);
    };
    Var ga = gated(audio, attn::cross_attn(audio, text, w.audio_query), w.gate_w_audio, w.gate_b_audio);
    Var gt = gated(text, attn::cross_attn(text, audio, w.text_query), w.gate_w_text, w.gate_b_text);
    Var out = nk::concat({nk::mean_pool(ga), nk::mean_pool(gt)}, 0);
    return {out, {Technique::nl_gate, d, 2 * d, std::nullopt}};
}

// ---- MISA --------------------------------------------------------------------

MisaParams::MisaParams(std::string prefix, std::size_t model_dim, std::size_t misa_dim)
    : prefix_(std::move(prefix)), model_dim_(model_dim), misa_dim_(misa_dim)
{
    if (misa_dim_ == 0) throw DimensionError("misa: projection dim must be positive");
}

void MisaParams::init(nk::ParameterSet& params, std::uint64_t seed) const
{
    for (const char* p : {"shared", "private_a", "private_t"}) {
        params.add_uniform(prefix_ + "." + p, {model_dim_, misa_dim_}, model_dim_, seed);
    }
}

MisaWeights MisaParams::bind(nk::Binding& binding) const
{
    return {binding(prefix_ + ".shared"), binding(prefix_ + ".private_a"), binding(prefix_ + ".private_t")};
}

MisaOutput misa_fusion(Var audio, Var text, const MisaWeights& w)
{
    const auto d = shared_dim(audio, text, "misa_fusion");
    if (w.shared.shape().size() != 2 || w.shared.shape()[0] != d) {
        throw DimensionError("misa_fusion: projection " + nk::to_string(w.shared.shape()) +
                             " does not accept model dim " + std::to_string(d));
    }
    const std::size_t dp = w.shared.shape()[1];
    Var a = row(nk::mean_pool(audio));
    Var t = row(nk::mean_pool(text));
    Var shared_a = flat(nk::matmul(a, w.shared));
    Var shared_t = flat(nk::matmul(t, w.shared));
    Var private_a = flat(nk::matmul(a, w.private_a));
    Var private_t = flat(nk::matmul(t, w.private_t));

    Var diff = nk::sub(shared_a, shared_t);
    Var similarity = nk::dot(diff, diff);
    Var overlap_a = nk::dot(shared_a, private_a);
    Var overlap_t = nk::dot(shared_t, private_t);
    Var difference = nk::add(nk::mul(overlap_a, overlap_a), nk::mul(overlap_t, overlap_t));

    Var out = nk::concat({shared_a, shared_t, private_a, private_t}, 0);
    return {{out, {Technique::misa, d, 4 * dp, std::nullopt}}, similarity, difference};
}

// ---- modality-gated fusion ---------------------------------------------------

ModalityGateParams::ModalityGateParams(std::string prefix, std::size_t model_dim, std::size_t heads)
    : prefix_(std::move(prefix)),
      model_dim_(model_dim),
      cross_audio_query_(prefix_ + ".cross_a", model_dim, heads),
      cross_text_query_(prefix_ + ".cross_t", model_dim, heads),
      self_(prefix_ + ".self", model_dim, heads)
{
}

void ModalityGateParams::init(nk::ParameterSet& params, std::uint64_t seed) const
{
    params.add(w1_name(), Tensor::vector({1.0, 1.0}));
    params.add(w2_name(), Tensor::vector({1.0, 1.0, 1.0}));
    cross_audio_query_.init(params, seed);
    cross_text_query_.init(params, seed);
    self_.init(params, seed);
}

void ModalityGateParams::validate(const nk::ParameterSet& params) const
{
    const auto& w1 = params.at(w1_name());
    const auto& w2 = params.at(w2_name());
    if (w1.shape() != nk::Shape{2}) throw std::invalid_argument(w1_name() + " must hold 2 gate logits");
    if (w2.shape() != nk::Shape{3}) throw std::invalid_argument(w2_name() + " must hold 3 concatenation logits");
    if (!w1.all_finite() || !w2.all_finite()) throw std::invalid_argument("modality gate logits must be finite");
    cross_audio_query_.validate(params);
    cross_text_query_.validate(params);
    self_.validate(params);
}

ModalityGateWeights ModalityGateParams::bind(nk::Binding& binding) const
{
    return {binding(w1_name()), binding(w2_name()), cross_audio_query_.bind(binding), cross_text_query_.bind(binding),
            self_.bind(binding)};
}

std::size_t gate_branch(const Tensor& w1_logits)
{
    Tensor probs = nk::softmax(w1_logits, 0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return best;
}

FusedVector modality_gated_fusion(Var audio, Var text, const ModalityGateWeights& w, const GateOptions& options,
                                  GateTrace* trace)
{
    const auto d = shared_dim(audio, text, "modality_gated_fusion");
    if (w.w1.shape() != nk::Shape{2} || w.w2.shape() != nk::Shape{3}) {
        throw std::invalid_argument("modality_gated_fusion: gate logits must have shapes [2] and [3]");
    }
    if (!w.w1.value().all_finite() || !w.w2.value().all_finite()) {
        throw std::invalid_argument("modality_gated_fusion: gate logits must be finite");
    }

    Var w1 = nk::softmax(w.w1, 0);
    Var w2 = nk::softmax(w.w2, 0);
    Var w1_a = nk::slice(w1, 0, 0, 1);
    Var w1_t = nk::slice(w1, 0, 1, 2);
    Var w2_a = nk::slice(w2, 0, 0, 1);
    Var w2_t = nk::slice(w2, 0, 1, 2);
    Var w2_at = nk::slice(w2, 0, 2, 3);

    std::size_t branch = gate_branch(w.w1.value());
    if (options.force_branch) {
        if (*options.force_branch > 1) throw std::invalid_argument("modality_gated_fusion: branch must be 0 or 1");
        branch = *options.force_branch;
    }

    Var audio_mod;
    Var text_mod;
    if (branch == 0) {
        audio_mod = nk::scale(w1_a, audio);
        text_mod = nk::scale(w1_t, attn::cross_attn(audio, text, w.cross_audio_query));
    } else {
        audio_mod = nk::scale(w1_a, attn::cross_attn(text, audio, w.cross_text_query));
        text_mod = nk::scale(w1_t, text);
    }
    Var hidden = attn::self_attn(nk::concat({audio_mod, text_mod}, 0), w.self);
    Var weighted = nk::concat({nk::scale(w2_a, audio), nk::scale(w2_t, text), nk::scale(w2_at, hidden)}, 0);

    if (trace != nullptr) {
        trace->w1_softmax = w1.value();
        trace->w2_softmax = w2.value();
        trace->branch = branch;
        trace->hidden_length = hidden.shape()[0];
        trace->concat_length = weighted.shape()[0];
    }
    return {nk::mean_pool(weighted), {Technique::modality_gated, d, d, branch}};
}

}  // namespace asrser::fusion
