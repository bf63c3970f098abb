// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <fstream>

#include <fmt/core.h>

#include "asrser/numkernel/rng.hpp"
#include "asrser/trainer/trainer.hpp"
#include "json.hpp"

namespace asrser::trainer {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kFoldStream = 0x464F4C44ULL;
constexpr const char* kCheckpointMagic = "ASRSERCK1";

}  // namespace

// ---- optimizer ---------------------------------------------------------------

AdamW::AdamW(AdamWConfig config) : config_(config)
{
    if (!(config_.lr >= 0.0) || !(config_.weight_decay >= 0.0) || !(config_.eps > 0.0) ||
        !(config_.beta1 >= 0.0 && config_.beta1 < 1.0) || !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
        throw std::invalid_argument("invalid AdamW hyperparameters");
    }
}

void AdamW::step(nk::ParameterSet& params, const nk::GradientMap& grads)
{
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (auto& [name, w] : params) {
        auto g = grads.find(name);
        if (g == grads.end()) continue;
        if (g->second.shape() != w.shape()) {
            throw nk::DimensionError(fmt::format("gradient for {} has shape {}, parameter {}", name,
                                                 nk::to_string(g->second.shape()), nk::to_string(w.shape())));
        }
        auto [it, fresh] = moments_.try_emplace(name, Moments{nk::Tensor(w.shape(), 0.0), nk::Tensor(w.shape(), 0.0)});
        auto m = it->second.m.data();
        auto v = it->second.v.data();
        auto wd = w.data();
        auto gd = g->second.data();
        for (std::size_t i = 0; i < wd.size(); ++i) {
            wd[i] -= config_.lr * config_.weight_decay * wd[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gd[i];
            v[i] = b2 * v[i] + (1.0 - b2) * gd[i] * gd[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            wd[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

// ---- data --------------------------------------------------------------------

void Dataset::validate() const
{
    if (examples.empty()) throw std::invalid_argument("dataset is empty");
    if (task.outputs == 0) throw std::invalid_argument("task needs at least one output");
    const auto& first = examples.front();
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        if (e.audio.rank() != 2 || e.text.rank() != 2) {
            throw std::invalid_argument(fmt::format("example {}: features must be [length, dim] matrices", i));
        }
        if (e.audio.dim(1) != first.audio.dim(1) || e.text.dim(1) != first.text.dim(1)) {
            throw std::invalid_argument(fmt::format("example {}: feature width differs from example 0", i));
        }
        if (task.kind == TaskKind::classification) {
            if (e.label_class >= task.outputs) {
                throw std::invalid_argument(
                    fmt::format("example {}: class {} outside 0..{}", i, e.label_class, task.outputs - 1));
            }
        } else {
            if (e.target.size() != task.outputs) {
                throw std::invalid_argument(
                    fmt::format("example {}: {} targets, task expects {}", i, e.target.size(), task.outputs));
            }
            for (double x : e.target) {
                if (!std::isfinite(x)) throw std::invalid_argument(fmt::format("example {}: non-finite target", i));
            }
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out{task, {}};
    out.examples.reserve(indices.size());
    for (std::size_t i : indices) out.examples.push_back(examples.at(i));
    return out;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed)
{
    if (k == 0 || n < k) throw std::invalid_argument(fmt::format("kfold_split: cannot split {} items into {} folds", n, k));
    nk::CounterRng rng(seed, kFoldStream);
    auto order = nk::permutation(n, rng);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                        order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return folds;
}

// ---- training ----------------------------------------------------------------

TrainResult train(const SerModel& model, const Dataset& data, const TrainConfig& config, const StepObserver& observer)
{
    data.validate();
    const auto& spec = model.spec();
    if (spec.task.kind != data.task.kind || spec.task.outputs != data.task.outputs) {
        throw std::invalid_argument("model task does not match dataset task");
    }
    const auto& first = data.examples.front();
    if (first.text.dim(1) != spec.text_dim || first.audio.dim(1) != spec.audio_dim) {
        throw nk::DimensionError(fmt::format("dataset feature widths (audio {}, text {}) differ from the model's ({}, {})",
                                             first.audio.dim(1), first.text.dim(1), spec.audio_dim, spec.text_dim));
    }
    if (config.batch_size == 0) throw std::invalid_argument("batch size must be positive");

    TrainResult result{model.init(config.seed), {}};
    AdamW opt({.lr = config.lr, .weight_decay = config.weight_decay});
    const nk::CounterRng shuffle(config.seed, kShuffleStream);
    const std::size_t n = data.examples.size();
    std::size_t step = 0;
    std::vector<const Example*> batch;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        nk::CounterRng epoch_rng = shuffle.fork(epoch);
        auto order = nk::permutation(n, epoch_rng);
        double loss_sum = 0.0, metric_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            batch.clear();
            for (std::size_t i = begin; i < std::min(n, begin + config.batch_size); ++i) {
                batch.push_back(&data.examples[order[i]]);
            }
            LabelBatch labels = make_labels(data.task, batch);
            nk::Tape tape;
            nk::Binding binding(tape, result.params);
            ForwardResult fr = model.forward(binding, batch, &labels);
            const double loss = fr.loss->value().item();
            if (!std::isfinite(loss)) {
                throw TrainingDiverged(fmt::format("non-finite loss {} at epoch {}, step {} ({})", loss, epoch, step,
                                                   describe(spec)));
            }
            const nk::Tensor& y = fr.outputs.value();
            if (data.task.kind == TaskKind::classification) {
                auto pred = argmax_rows(y);
                for (std::size_t b = 0; b < batch.size(); ++b) metric_sum += pred[b] == labels.classes[b] ? 1.0 : 0.0;
            } else {
                for (std::size_t b = 0; b < batch.size(); ++b) {
                    double err = 0.0;
                    for (std::size_t k = 0; k < data.task.outputs; ++k) err += std::abs(y.at(b, k) - labels.targets.at(b, k));
                    metric_sum += err / static_cast<double>(data.task.outputs);
                }
            }
            loss_sum += loss * static_cast<double>(batch.size());

            opt.step(result.params, binding.gradients(*fr.loss));
            if (observer) observer({epoch, step, loss, &result.params, fr.gate_traces});
            ++step;
        }
        result.history.push_back({loss_sum / static_cast<double>(n), metric_sum / static_cast<double>(n)});
    }
    return result;
}

// ---- checkpoints -------------------------------------------------------------

void save_checkpoint(const std::string& path, const nk::ParameterSet& params, const std::string& metadata_json)
{
    static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");
    nlohmann::ordered_json header;
    header["metadata"] = metadata_json.empty() ? nlohmann::ordered_json::object()
                                               : nlohmann::ordered_json::parse(metadata_json);
    auto& tensors = header["tensors"] = nlohmann::ordered_json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : params) {
        tensors.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.size();
    }
    header["count"] = offset;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out << kCheckpointMagic << '\n' << header.dump() << '\n';
    for (const auto& [name, t] : params) {
        auto d = t.data();
        out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    std::string magic, header_line;
    std::getline(in, magic);
    if (magic != kCheckpointMagic) throw std::runtime_error(path + ": not an asrser checkpoint");
    std::getline(in, header_line);
    auto header = nlohmann::ordered_json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.contains("tensors")) throw std::runtime_error(path + ": corrupt header");

    std::vector<double> blob(header.at("count").get<std::size_t>());
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(blob.size() * sizeof(double))) {
        throw std::runtime_error(path + ": truncated tensor data");
    }
    Checkpoint ck;
    ck.metadata_json = header.at("metadata").dump();
    for (const auto& entry : header.at("tensors")) {
        nk::Shape shape = entry.at("shape").get<nk::Shape>();
        std::size_t offset = entry.at("offset").get<std::size_t>();
        std::size_t count = nk::element_count(shape);
        if (offset + count > blob.size()) throw std::runtime_error(path + ": tensor extends past the data");
        ck.params.add(entry.at("name").get<std::string>(),
                      nk::Tensor(shape, std::vector<double>(blob.begin() + static_cast<std::ptrdiff_t>(offset),
                                                            blob.begin() + static_cast<std::ptrdiff_t>(offset + count))));
    }
    return ck;
}

}  // namespace asrser::trainer
