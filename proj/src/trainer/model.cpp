// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "asrser/numkernel/ops.hpp"
#include "asrser/trainer/trainer.hpp"

namespace asrser::trainer {

namespace {

using nk::Tensor;
using nk::Var;

const std::string kProjAudio = "proj.audio";
const std::string kProjText = "proj.text";

// Pooled rows of one modality stacked into [B, dim].
Tensor pooled_matrix(std::span<const Example* const> batch, bool audio)
{
    const Tensor& first = audio ? batch.front()->audio : batch.front()->text;
    const std::size_t dim = first.dim(1);
    Tensor out({batch.size(), dim});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Tensor& seq = audio ? batch[b]->audio : batch[b]->text;
        if (seq.rank() != 2 || seq.dim(1) != dim) {
            throw nk::DimensionError(fmt::format("example feature shape {} does not match width {}",
                                                 nk::to_string(seq.shape()), dim));
        }
        Tensor pooled = nk::mean_pool(seq);
        std::copy(pooled.data().begin(), pooled.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * dim));
    }
    return out;
}

}  // namespace

BackboneLayout::BackboneLayout(std::string prefix, std::size_t in_dim, std::size_t outputs)
    : prefix_(std::move(prefix)), in_dim_(in_dim), outputs_(outputs)
{
    if (in_dim == 0 || outputs == 0) throw nk::DimensionError("backbone dimensions must be positive");
}

void BackboneLayout::init(nk::ParameterSet& params, std::uint64_t seed) const
{
    params.add_uniform(prefix_ + ".dense1.w", {in_dim_, kHidden1}, in_dim_, seed);
    params.add_uniform(prefix_ + ".dense1.b", {kHidden1}, in_dim_, seed);
    params.add_uniform(prefix_ + ".dense2.w", {kHidden1, kHidden2}, kHidden1, seed);
    params.add_uniform(prefix_ + ".dense2.b", {kHidden2}, kHidden1, seed);
    params.add_uniform(prefix_ + ".head.w", {kHidden2, outputs_}, kHidden2, seed);
    params.add_uniform(prefix_ + ".head.b", {outputs_}, kHidden2, seed);
}

BackboneWeights BackboneLayout::bind(nk::Binding& b) const
{
    return {b(prefix_ + ".dense1.w"), b(prefix_ + ".dense1.b"), b(prefix_ + ".dense2.w"),
            b(prefix_ + ".dense2.b"), b(prefix_ + ".head.w"),   b(prefix_ + ".head.b")};
}

std::size_t BackboneLayout::parameter_count(std::size_t in_dim, std::size_t outputs)
{
    return in_dim * kHidden1 + kHidden1 + kHidden1 * kHidden2 + kHidden2 + kHidden2 * outputs + outputs;
}

Var backbone_forward(Var x, const BackboneWeights& w)
{
    if (x.value().rank() == 1) x = nk::reshape(x, {1, x.value().size()});
    Var h1 = nk::relu(nk::add_rowwise(nk::matmul(x, w.w1), w.b1));
    Var h2 = nk::relu(nk::add_rowwise(nk::matmul(h1, w.w2), w.b2));
    return nk::add_rowwise(nk::matmul(h2, w.w_head), w.b_head);
}

Var task_loss(Var outputs, const LabelBatch& labels, const TaskSpec& task)
{
    const auto& shape = outputs.shape();
    if (shape.size() != 2 || shape[1] != task.outputs) {
        throw nk::DimensionError(fmt::format("task_loss: outputs {} do not match {} task outputs",
                                             nk::to_string(shape), task.outputs));
    }
    if (task.kind == TaskKind::classification) {
        if (labels.classes.size() != shape[0]) {
            throw nk::DimensionError(
                fmt::format("task_loss: {} labels for {} outputs", labels.classes.size(), shape[0]));
        }
        return nk::softmax_cross_entropy(outputs, labels.classes);
    }
    return nk::mse(outputs, labels.targets);
}

LabelBatch make_labels(const TaskSpec& task, std::span<const Example* const> batch)
{
    LabelBatch labels;
    if (task.kind == TaskKind::classification) {
        for (const Example* e : batch) labels.classes.push_back(e->label_class);
        return labels;
    }
    labels.targets = Tensor({batch.size(), task.outputs});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b]->target.size() != task.outputs) {
            throw std::invalid_argument(
                fmt::format("regression target has {} values, task expects {}", batch[b]->target.size(), task.outputs));
        }
        for (std::size_t k = 0; k < task.outputs; ++k) labels.targets.at(b, k) = batch[b]->target[k];
    }
    return labels;
}

std::vector<std::size_t> argmax_rows(const Tensor& outputs)
{
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < outputs.dim(0); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < outputs.dim(1); ++c) {
            if (outputs.at(r, c) > outputs.at(r, best)) best = c;
        }
        out.push_back(best);
    }
    return out;
}

std::string describe(const ModelSpec& spec)
{
    switch (spec.mode) {
    case InputMode::text_only: return "text-only";
    case InputMode::audio_only: return "audio-only";
    case InputMode::fused: return std::string(fusion::technique_name(spec.technique));
    }
    return "?";
}

SerModel::SerModel(ModelSpec spec) : spec_(spec)
{
    if (spec_.task.outputs == 0) throw std::invalid_argument("task needs at least one output");
    if (spec_.mode == InputMode::fused && spec_.technique != fusion::Technique::late &&
        spec_.model_dim % spec_.heads != 0) {
        throw nk::DimensionError(
            fmt::format("model dim {} is not divisible by {} heads", spec_.model_dim, spec_.heads));
    }
}

std::size_t SerModel::backbone_in_dim() const
{
    switch (spec_.mode) {
    case InputMode::text_only: return spec_.text_dim;
    case InputMode::audio_only: return spec_.audio_dim;
    case InputMode::fused:
        if (spec_.technique == fusion::Technique::late) return spec_.audio_dim;
        return fusion::output_dim(spec_.technique, spec_.model_dim, spec_.misa_dim);
    }
    return 0;
}

nk::ParameterSet SerModel::init(std::uint64_t seed) const
{
    nk::ParameterSet params;
    const std::size_t k = spec_.task.outputs;
    if (spec_.mode != InputMode::fused) {
        BackboneLayout("backbone", backbone_in_dim(), k).init(params, seed);
        return params;
    }
    if (spec_.technique == fusion::Technique::late) {
        BackboneLayout("audio_backbone", spec_.audio_dim, k).init(params, seed);
        BackboneLayout("text_backbone", spec_.text_dim, k).init(params, seed);
        return params;
    }
    const std::size_t d = spec_.model_dim;
    params.add_uniform(kProjAudio, {spec_.audio_dim, d}, spec_.audio_dim, seed);
    params.add_uniform(kProjText, {spec_.text_dim, d}, spec_.text_dim, seed);
    switch (spec_.technique) {
    case fusion::Technique::cross_attention: attn::MHAParams(gate_prefix(), d, spec_.heads).init(params, seed); break;
    case fusion::Technique::nl_gate: fusion::NlGateParams(gate_prefix(), d, spec_.heads).init(params, seed); break;
    case fusion::Technique::misa: fusion::MisaParams(gate_prefix(), d, spec_.misa_dim).init(params, seed); break;
    case fusion::Technique::modality_gated:
        fusion::ModalityGateParams(gate_prefix(), d, spec_.heads).init(params, seed);
        break;
    default: break;
    }
    BackboneLayout("backbone", backbone_in_dim(), k).init(params, seed);
    return params;
}

ForwardResult SerModel::forward(nk::Binding& b, std::span<const Example* const> batch, const LabelBatch* labels,
                                const fusion::GateOptions& gate) const
{
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    nk::Tape& tape = b.tape();
    const std::size_t k = spec_.task.outputs;
    ForwardResult result;

    if (spec_.mode != InputMode::fused) {
        const bool audio = spec_.mode == InputMode::audio_only;
        BackboneLayout layout("backbone", backbone_in_dim(), k);
        result.outputs = backbone_forward(tape.constant(pooled_matrix(batch, audio)), layout.bind(b));
        if (labels) result.loss = task_loss(result.outputs, *labels, spec_.task);
        return result;
    }

    if (spec_.technique == fusion::Technique::late) {
        Var out_a = backbone_forward(tape.constant(pooled_matrix(batch, true)),
                                     BackboneLayout("audio_backbone", spec_.audio_dim, k).bind(b));
        Var out_t = backbone_forward(tape.constant(pooled_matrix(batch, false)),
                                     BackboneLayout("text_backbone", spec_.text_dim, k).bind(b));
        result.outputs = fusion::late_fusion(out_a, out_t);
        if (labels) {
            result.loss = nk::add(task_loss(out_a, *labels, spec_.task), task_loss(out_t, *labels, spec_.task));
        }
        return result;
    }

    const std::size_t d = spec_.model_dim;
    Var proj_a = b(kProjAudio);
    Var proj_t = b(kProjText);
    std::optional<attn::MHAWeights> cross;
    std::optional<fusion::NlGateWeights> nl;
    std::optional<fusion::MisaWeights> misa;
    std::optional<fusion::ModalityGateWeights> mgf;
    switch (spec_.technique) {
    case fusion::Technique::cross_attention: cross = attn::MHAParams(gate_prefix(), d, spec_.heads).bind(b); break;
    case fusion::Technique::nl_gate: nl = fusion::NlGateParams(gate_prefix(), d, spec_.heads).bind(b); break;
    case fusion::Technique::misa: misa = fusion::MisaParams(gate_prefix(), d, spec_.misa_dim).bind(b); break;
    case fusion::Technique::modality_gated:
        mgf = fusion::ModalityGateParams(gate_prefix(), d, spec_.heads).bind(b);
        break;
    default: break;
    }

    std::vector<Var> rows;
    std::vector<Var> aux;
    rows.reserve(batch.size());
    for (const Example* e : batch) {
        Var a = nk::matmul(tape.constant(e->audio), proj_a);
        Var t = nk::matmul(tape.constant(e->text), proj_t);
        fusion::FusedVector fused;
        switch (spec_.technique) {
        case fusion::Technique::early: fused = fusion::early_fusion(a, t); break;
        case fusion::Technique::tensor: fused = fusion::tensor_fusion(a, t); break;
        case fusion::Technique::cross_attention: fused = fusion::cross_attention_fusion(a, t, *cross); break;
        case fusion::Technique::nl_gate: fused = fusion::nl_gate_fusion(a, t, *nl); break;
        case fusion::Technique::misa: {
            auto out = fusion::misa_fusion(a, t, *misa);
            fused = out.fused;
            aux.push_back(nk::add(nk::scale(spec_.misa_similarity_weight, out.similarity_loss),
                                  nk::scale(spec_.misa_difference_weight, out.difference_loss)));
            break;
        }
        case fusion::Technique::modality_gated: {
            fusion::GateTrace trace;
            fused = fusion::modality_gated_fusion(a, t, *mgf, gate, &trace);
            result.gate_traces.push_back(std::move(trace));
            break;
        }
        case fusion::Technique::late: break;
        }
        rows.push_back(nk::reshape(fused.values, {1, fused.values.value().size()}));
    }
    Var x = rows.size() == 1 ? rows.front() : nk::concat(rows, 0);
    result.outputs = backbone_forward(x, BackboneLayout("backbone", backbone_in_dim(), k).bind(b));
    if (labels) {
        Var loss = task_loss(result.outputs, *labels, spec_.task);
        if (!aux.empty()) {
            Var total = aux.size() == 1 ? aux.front() : nk::sum(nk::concat(aux, 0));
            loss = nk::add(loss, nk::scale(1.0 / static_cast<double>(aux.size()), total));
        }
        result.loss = loss;
    }
    return result;
}

Tensor SerModel::predict(const nk::ParameterSet& params, std::span<const Example> examples) const
{
    constexpr std::size_t kChunk = 256;
    Tensor out({std::max<std::size_t>(examples.size(), 1), spec_.task.outputs});
    if (examples.empty()) throw std::invalid_argument("predict: no examples");
    std::vector<const Example*> chunk;
    for (std::size_t begin = 0; begin < examples.size(); begin += kChunk) {
        chunk.clear();
        for (std::size_t i = begin; i < std::min(examples.size(), begin + kChunk); ++i) chunk.push_back(&examples[i]);
        nk::Tape tape;
        nk::Binding b(tape, params);
        const Tensor& y = forward(b, chunk).outputs.value();
        std::copy(y.data().begin(), y.data().end(),
                  out.data().begin() + static_cast<std::ptrdiff_t>(begin * spec_.task.outputs));
    }
    return out;
}

}  // namespace asrser::trainer
