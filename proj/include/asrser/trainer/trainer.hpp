// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Backbone SER model, losses, AdamW, k-fold splitting and the training
// loop. A model reads one audio sequence [la, audio_dim] and one text
// sequence [lt, text_dim] per example; depending on its input mode it uses
// the pooled text, the pooled audio, or projects both to the model
// dimension and fuses them before the backbone.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asrser/fusion/fusion.hpp"
#include "asrser/numkernel/params.hpp"
#include "asrser/numkernel/tape.hpp"

namespace asrser::trainer {

inline constexpr std::size_t kHidden1 = 128;
inline constexpr std::size_t kHidden2 = 16;

enum class TaskKind { classification, regression };

struct TaskSpec {
    TaskKind kind = TaskKind::classification;
    /// Number of classes, or number of regressed dimensions.
    std::size_t outputs = 4;
};

// ---- backbone ----------------------------------------------------------------

struct BackboneWeights {
    nk::Var w1, b1, w2, b2, w_head, b_head;
};

/// dense(in -> 128) -> ReLU -> dense(128 -> 16) -> ReLU -> dense(16 -> outputs).
class BackboneLayout {
public:
    BackboneLayout(std::string prefix, std::size_t in_dim, std::size_t outputs);

    void init(nk::ParameterSet& params, std::uint64_t seed) const;
    BackboneWeights bind(nk::Binding& binding) const;
    std::size_t in_dim() const noexcept { return in_dim_; }
    std::size_t outputs() const noexcept { return outputs_; }

    static std::size_t parameter_count(std::size_t in_dim, std::size_t outputs);

private:
    std::string prefix_;
    std::size_t in_dim_;
    std::size_t outputs_;
};

/// x is [B, in_dim] or [in_dim]; result [B, outputs] (raw logits or scores).
nk::Var backbone_forward(nk::Var x, const BackboneWeights& w);

/// Labels of a batch: class indices for classification, a [B, m] target
/// matrix for regression.
struct LabelBatch {
    std::vector<std::size_t> classes;
    nk::Tensor targets;
};

/// Mean softmax cross-entropy, or mean over the batch of the squared error
/// summed over output dimensions.
nk::Var task_loss(nk::Var outputs, const LabelBatch& labels, const TaskSpec& task);

// ---- optimizer ---------------------------------------------------------------

struct AdamWConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5;
};

/// Decoupled weight decay: w -= lr * wd * w, then the bias-corrected Adam
/// update from the raw gradient.
class AdamW {
public:
    explicit AdamW(AdamWConfig config);

    /// Parameters without a gradient entry are left alone.
    void step(nk::ParameterSet& params, const nk::GradientMap& grads);
    std::size_t steps() const noexcept { return t_; }
    const AdamWConfig& config() const noexcept { return config_; }

private:
    struct Moments {
        nk::Tensor m, v;
    };
    AdamWConfig config_;
    std::size_t t_ = 0;
    std::map<std::string, Moments> moments_;
};

// ---- data --------------------------------------------------------------------

struct Example {
    nk::Tensor audio;  // [la, audio_dim]
    nk::Tensor text;   // [lt, text_dim]
    std::size_t label_class = 0;
    std::vector<double> target;
};

struct Dataset {
    TaskSpec task;
    std::vector<Example> examples;

    /// Throws std::invalid_argument on empty data, inconsistent feature
    /// widths, or labels that do not fit the task.
    void validate() const;
    Dataset subset(std::span<const std::size_t> indices) const;
};

/// k disjoint folds covering 0..n-1, sizes differing by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

// ---- model -------------------------------------------------------------------

enum class InputMode { text_only, audio_only, fused };

struct ModelSpec {
    InputMode mode = InputMode::text_only;
    fusion::Technique technique = fusion::Technique::modality_gated;
    TaskSpec task;
    std::size_t text_dim = 768;
    std::size_t audio_dim = 768;
    std::size_t model_dim = 128;
    std::size_t heads = 8;
    std::size_t misa_dim = 64;
    double misa_similarity_weight = 0.1;
    double misa_difference_weight = 0.1;
};

std::string describe(const ModelSpec& spec);

struct ForwardResult {
    /// [B, outputs]. For late fusion, the mean of both backbones.
    nk::Var outputs;
    /// Loss including auxiliary terms (late fusion: both backbones' losses).
    std::optional<nk::Var> loss;
    /// Modality-gated fusion only, one per example.
    std::vector<fusion::GateTrace> gate_traces;
};

class SerModel {
public:
    explicit SerModel(ModelSpec spec);

    const ModelSpec& spec() const noexcept { return spec_; }
    nk::ParameterSet init(std::uint64_t seed) const;
    /// Input width of the (first) backbone.
    std::size_t backbone_in_dim() const;

    /// When `labels` is given the result carries the training loss.
    ForwardResult forward(nk::Binding& binding, std::span<const Example* const> batch,
                          const LabelBatch* labels = nullptr, const fusion::GateOptions& gate = {}) const;

    /// [n, outputs] predictions for every example, in order.
    nk::Tensor predict(const nk::ParameterSet& params, std::span<const Example> examples) const;

    std::string gate_prefix() const { return "fusion"; }

private:
    ModelSpec spec_;
};

LabelBatch make_labels(const TaskSpec& task, std::span<const Example* const> batch);

/// Class index per row (argmax, ties to the lowest index).
std::vector<std::size_t> argmax_rows(const nk::Tensor& outputs);

// ---- training ----------------------------------------------------------------

struct TrainConfig {
    double lr = 5e-4;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    double weight_decay = 1e-5;
};

struct EpochRecord {
    /// Example-weighted mean training loss over the epoch.
    double loss = 0.0;
    /// Accuracy (classification) or MAE (regression) of the outputs seen
    /// while training, i.e. before each batch's update.
    double metric = 0.0;
};

struct StepInfo {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double loss = 0.0;
    const nk::ParameterSet* params = nullptr;  // after the update
    std::span<const fusion::GateTrace> gate_traces;
};

using StepObserver = std::function<void(const StepInfo&)>;

struct TrainResult {
    nk::ParameterSet params;
    std::vector<EpochRecord> history;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mini-batch AdamW with a seeded permutation per epoch; the last partial
/// batch is kept. Throws TrainingDiverged on a non-finite loss.
TrainResult train(const SerModel& model, const Dataset& data, const TrainConfig& config,
                  const StepObserver& observer = {});

// ---- checkpoints -------------------------------------------------------------

/// "ASRSERCK1\n", one JSON header line, then raw little-endian doubles.
void save_checkpoint(const std::string& path, const nk::ParameterSet& params, const std::string& metadata_json);
struct Checkpoint {
    nk::ParameterSet params;
    std::string metadata_json;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace asrser::trainer
