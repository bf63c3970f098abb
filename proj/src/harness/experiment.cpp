// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "asrser/metrics/metrics.hpp"
#include "json.hpp"

namespace asrser::harness {

namespace {

using json = nlohmann::json;
using trainer::Example;

const std::vector<fusion::Technique> kAllTechniques{
    fusion::Technique::early,   fusion::Technique::late, fusion::Technique::cross_attention,
    fusion::Technique::tensor,  fusion::Technique::nl_gate, fusion::Technique::misa,
    fusion::Technique::modality_gated};

// ---- config parsing ------------------------------------------------------------

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw std::invalid_argument(fmt::format("config: '{}' must be an object", where));
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw std::invalid_argument(fmt::format("config: unknown key '{}{}'", where.empty() ? "" : where + ".", key));
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(fmt::format("config: '{}{}' has the wrong type", where.empty() ? "" : where + ".", key));
    }
}

template <typename T>
T positive(T value, const char* what)
{
    if (!(value > T{})) throw std::invalid_argument(fmt::format("config: {} must be positive", what));
    return value;
}

// ---- evaluation ---------------------------------------------------------------

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

using Metrics = std::vector<std::pair<std::string, double>>;
using ExampleSet = std::shared_ptr<const std::vector<Example>>;

std::vector<double> score_fold(const Profile& p, const nk::Tensor& pred, const std::vector<Example>& data,
                               const std::vector<std::size_t>& test)
{
    std::vector<double> out;
    const std::size_t n = test.size();
    if (p.label_kind == LabelKind::categorical) {
        auto cls = trainer::argmax_rows(pred);
        std::vector<std::size_t> truth;
        for (std::size_t i : test) truth.push_back(data[i].label_class);
        out.push_back(metrics::accuracy(cls, truth));
    } else if (p.label_kind == LabelKind::score) {
        std::vector<double> yhat(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            yhat[i] = pred.at(i, 0);
            y[i] = data[test[i]].target[0];
        }
        out.push_back(metrics::accuracy(yhat, y, metrics::AccuracyScheme::acc2));
        out.push_back(metrics::accuracy(yhat, y, metrics::AccuracyScheme::acc7));
        out.push_back(metrics::mae(yhat, y));
    } else {
        double total = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            std::vector<double> yhat(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                yhat[i] = pred.at(i, k);
                y[i] = data[test[i]].target[k];
            }
            out.push_back(metrics::ccc(yhat, y));
            total += out.back();
        }
        out.push_back(total / 3.0);
    }
    return out;
}

class Runner {
public:
    Runner(const Corpus& corpus, const ExperimentConfig& config) : corpus_(corpus), config_(config)
    {
        corpus_.validate();
        const Profile& p = config_.profile;
        for (const auto& u : corpus_.utterances) check_label(u);
        if (config_.text_encoder) encoder_.emplace(config_.text_encoder->dim, config_.text_encoder->seed);

        const std::size_t n = corpus_.utterances.size();
        if (p.kfold) {
            auto parts = trainer::kfold_split(n, config_.folds, config_.seed);
            std::size_t run = config_.folds_to_run == 0 ? parts.size() : std::min(config_.folds_to_run, parts.size());
            for (std::size_t f = 0; f < run; ++f) {
                Fold fold;
                fold.test = parts[f];
                std::sort(fold.test.begin(), fold.test.end());
                for (std::size_t g = 0; g < parts.size(); ++g) {
                    if (g != f) fold.train.insert(fold.train.end(), parts[g].begin(), parts[g].end());
                }
                std::sort(fold.train.begin(), fold.train.end());
                folds_.push_back(std::move(fold));
            }
        } else {
            Fold fold;
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& s = corpus_.utterances[i].split;
                if (s == "test") {
                    fold.test.push_back(i);
                } else if (s == "train") {
                    fold.train.push_back(i);
                } else if (!s.empty() && s != "valid" && s != "dev") {
                    throw SchemaError(fmt::format("utterance {}: unknown split '{}'", corpus_.utterances[i].id, s));
                }
            }
            if (fold.train.empty() || fold.test.empty()) {
                throw SchemaError(fmt::format("profile {} needs utterances with split \"train\" and \"test\"", p.name));
            }
            folds_.push_back(std::move(fold));
        }

        for (const auto& s : config_.sources) {
            auto all = corpus_.sources();
            if (std::find(all.begin(), all.end(), s) == all.end()) {
                throw std::invalid_argument(fmt::format("config: source '{}' is not in the corpus", s));
            }
        }
    }

    std::vector<std::string> sources() const { return config_.sources.empty() ? corpus_.sources() : config_.sources; }

    // Examples whose text comes from `source` (a hypothesis source or ground truth).
    ExampleSet examples_for(const std::string& source) const
    {
        auto out = std::make_shared<std::vector<Example>>();
        out->reserve(corpus_.utterances.size());
        for (const auto& u : corpus_.utterances) {
            const bool gt = source == kGroundTruth;
            const TokenSeq& tokens = gt ? u.reference : u.hypothesis(source).tokens;
            out->push_back(make_example(u, text_features(u, gt ? kGroundTruthKey : source, tokens)));
        }
        return out;
    }

    ExampleSet examples_for(const std::vector<TokenSeq>& transcripts, const std::string& what) const
    {
        if (!encoder_) {
            throw std::invalid_argument(fmt::format("{} transcripts need a text_encoder in the config to be featurized", what));
        }
        auto out = std::make_shared<std::vector<Example>>();
        for (std::size_t i = 0; i < corpus_.utterances.size(); ++i) {
            out->push_back(make_example(corpus_.utterances[i], encoder_->encode(transcripts[i])));
        }
        return out;
    }

    trainer::ModelSpec spec(trainer::InputMode mode, fusion::Technique technique, const ExampleSet& data) const
    {
        trainer::ModelSpec s;
        s.mode = mode;
        s.technique = technique;
        s.task = config_.profile.task;
        s.text_dim = data->front().text.dim(1);
        s.audio_dim = data->front().audio.dim(1);
        s.model_dim = config_.model_dim;
        s.heads = config_.heads;
        s.misa_dim = config_.misa_dim;
        s.misa_similarity_weight = config_.misa_similarity_weight;
        s.misa_difference_weight = config_.misa_difference_weight;
        return s;
    }

    void require_audio() const
    {
        if (!corpus_.utterances.front().audio_features) {
            throw std::invalid_argument("fusion needs audio_features in the corpus");
        }
    }

    Metrics evaluate(const trainer::ModelSpec& spec, const ExampleSet& data) const
    {
        const Profile& p = config_.profile;
        trainer::SerModel model(spec);
        trainer::Dataset full{p.task, *data};
        trainer::TrainConfig tc = config_.train;
        tc.seed = config_.seed;

        std::vector<std::vector<double>> per_fold;
        for (const auto& fold : folds_) {
            auto result = trainer::train(model, full.subset(fold.train), tc);
            trainer::Dataset test = full.subset(fold.test);
            nk::Tensor pred = model.predict(result.params, test.examples);
            per_fold.push_back(score_fold(p, pred, *data, fold.test));
        }
        Metrics out;
        for (std::size_t m = 0; m < p.metrics.size(); ++m) {
            double total = 0.0;
            for (const auto& f : per_fold) total += f[m];
            out.emplace_back(p.metrics[m], total / static_cast<double>(per_fold.size()));
        }
        if (per_fold.size() > 1) {
            for (std::size_t f = 0; f < per_fold.size(); ++f) {
                for (std::size_t m = 0; m < p.metrics.size(); ++m) {
                    out.emplace_back(fmt::format("{}@fold{}", p.metrics[m], f + 1), per_fold[f][m]);
                }
            }
        }
        return out;
    }

    std::pair<Metrics, trainer::TrainResult> fit_first(const trainer::ModelSpec& spec, const ExampleSet& data) const
    {
        const Profile& p = config_.profile;
        trainer::SerModel model(spec);
        trainer::Dataset full{p.task, *data};
        trainer::TrainConfig tc = config_.train;
        tc.seed = config_.seed;
        const Fold& fold = folds_.front();
        auto result = trainer::train(model, full.subset(fold.train), tc);
        nk::Tensor pred = model.predict(result.params, full.subset(fold.test).examples);
        auto scores = score_fold(p, pred, *data, fold.test);
        Metrics out;
        for (std::size_t m = 0; m < p.metrics.size(); ++m) out.emplace_back(p.metrics[m], scores[m]);
        return {std::move(out), std::move(result)};
    }

    ResultRow row(const std::string& technique, const std::string& source, std::optional<double> wer,
                  Metrics metrics) const
    {
        return {config_.corpus_tag, technique, source, wer, std::move(metrics), config_.seed};
    }

    const Corpus& corpus() const { return corpus_; }
    const ExperimentConfig& config() const { return config_; }

private:
    void check_label(const Utterance& u) const
    {
        const Profile& p = config_.profile;
        if (u.label.kind != p.label_kind) {
            throw SchemaError(fmt::format("utterance {}: field 'label' does not fit profile {}", u.id, p.name));
        }
        switch (u.label.kind) {
        case LabelKind::categorical:
            if (u.label.cls >= p.task.outputs) {
                throw SchemaError(fmt::format("utterance {}: field 'label.class' {} outside 0..{}", u.id, u.label.cls,
                                              p.task.outputs - 1));
            }
            break;
        case LabelKind::score:
            if (u.label.score < -3.0 || u.label.score > 3.0) {
                throw SchemaError(fmt::format("utterance {}: field 'label.score' outside [-3, 3]", u.id));
            }
            break;
        case LabelKind::vad:
            for (double x : u.label.vad) {
                if (!(x >= 1.0 && x <= 7.0)) {
                    throw SchemaError(fmt::format("utterance {}: field 'label.vad' outside [1, 7]", u.id));
                }
            }
            break;
        }
    }

    nk::Tensor text_features(const Utterance& u, const std::string& key, const TokenSeq& tokens) const
    {
        if (encoder_) return encoder_->encode(tokens);
        auto it = u.text_features.find(key);
        if (it == u.text_features.end()) {
            throw SchemaError(fmt::format("utterance {}: no text features for '{}' and no text_encoder configured", u.id, key));
        }
        return it->second;
    }

    Example make_example(const Utterance& u, nk::Tensor text) const
    {
        Example e;
        e.audio = u.audio_features ? *u.audio_features : nk::Tensor({1, 1}, 0.0);
        e.text = std::move(text);
        switch (u.label.kind) {
        case LabelKind::categorical: e.label_class = u.label.cls; break;
        case LabelKind::score: e.target = {u.label.score}; break;
        case LabelKind::vad: e.target = {u.label.vad[0], u.label.vad[1], u.label.vad[2]}; break;
        }
        return e;
    }

    const Corpus& corpus_;
    const ExperimentConfig& config_;
    std::optional<HashedTextEncoder> encoder_;
    std::vector<Fold> folds_;
};

// Runs the cells on up to `threads` workers; results keep cell order.
std::vector<ResultRow> run_cells(const std::vector<std::function<ResultRow()>>& cells, std::size_t threads)
{
    std::vector<ResultRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                rows[i] = cells[i]();
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(threads, cells.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

}  // namespace

// ---- profiles ------------------------------------------------------------------

const std::vector<Profile>& profiles()
{
    static const std::vector<Profile> all{
        {"iemocap-like", LabelKind::categorical, {trainer::TaskKind::classification, 4}, {"Acc4"}, 5e-4, 100, true, 5},
        {"mosi-like", LabelKind::score, {trainer::TaskKind::regression, 1}, {"Acc2", "Acc7", "MAE"}, 5e-4, 100, false, 1},
        {"podcast-like", LabelKind::vad, {trainer::TaskKind::regression, 3}, {"CCC-V", "CCC-A", "CCC-D", "CCC"}, 1e-4, 30,
         false, 1},
    };
    return all;
}

const Profile& profile(const std::string& name)
{
    for (const auto& p : profiles()) {
        if (p.name == name) return p;
    }
    throw std::invalid_argument(fmt::format("unknown profile '{}' (expected iemocap-like, mosi-like or podcast-like)", name));
}

bool lower_is_better(const std::string& metric) { return metric.rfind("MAE", 0) == 0; }

ExperimentConfig default_config(const std::string& profile_name)
{
    ExperimentConfig c;
    c.profile = profile(profile_name);
    c.corpus_tag = c.profile.name;
    c.techniques = kAllTechniques;
    c.train.lr = c.profile.lr;
    c.train.epochs = c.profile.epochs;
    c.folds = c.profile.folds;
    return c;
}

ExperimentConfig parse_config(const std::string& text)
{
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument("config: malformed JSON");
    check_keys(doc, "", {"profile", "corpus_tag", "techniques", "sources", "model", "train", "evaluation", "corrector",
                         "text_encoder", "threads", "seed"});
    if (!doc.contains("profile") || !doc["profile"].is_string()) {
        throw std::invalid_argument("config: 'profile' (string) is required");
    }
    ExperimentConfig c = default_config(doc["profile"].get<std::string>());
    read(doc, "corpus_tag", c.corpus_tag, "");
    if (auto t = doc.find("techniques"); t != doc.end()) {
        std::vector<std::string> names;
        read(doc, "techniques", names, "");
        c.techniques.clear();
        for (const auto& n : names) c.techniques.push_back(fusion::parse_technique(n));
        if (c.techniques.empty()) throw std::invalid_argument("config: 'techniques' must not be empty");
    }
    read(doc, "sources", c.sources, "");
    read(doc, "threads", c.threads, "");
    read(doc, "seed", c.seed, "");
    positive(c.threads, "threads");

    if (auto m = doc.find("model"); m != doc.end()) {
        check_keys(*m, "model", {"model_dim", "heads", "misa_dim", "misa_similarity_weight", "misa_difference_weight"});
        read(*m, "model_dim", c.model_dim, "model");
        read(*m, "heads", c.heads, "model");
        read(*m, "misa_dim", c.misa_dim, "model");
        read(*m, "misa_similarity_weight", c.misa_similarity_weight, "model");
        read(*m, "misa_difference_weight", c.misa_difference_weight, "model");
    }
    positive(c.model_dim, "model.model_dim");
    positive(c.heads, "model.heads");
    positive(c.misa_dim, "model.misa_dim");
    if (c.model_dim % c.heads != 0) throw std::invalid_argument("config: model.model_dim must be divisible by model.heads");

    if (auto t = doc.find("train"); t != doc.end()) {
        check_keys(*t, "train", {"lr", "epochs", "batch_size", "weight_decay"});
        read(*t, "lr", c.train.lr, "train");
        read(*t, "epochs", c.train.epochs, "train");
        read(*t, "batch_size", c.train.batch_size, "train");
        read(*t, "weight_decay", c.train.weight_decay, "train");
    }
    positive(c.train.lr, "train.lr");
    positive(c.train.epochs, "train.epochs");
    positive(c.train.batch_size, "train.batch_size");
    if (!(c.train.weight_decay >= 0.0)) throw std::invalid_argument("config: train.weight_decay must be non-negative");

    if (auto e = doc.find("evaluation"); e != doc.end()) {
        check_keys(*e, "evaluation", {"folds", "folds_to_run"});
        if (!c.profile.kfold) {
            throw std::invalid_argument(
                fmt::format("config: profile {} evaluates on the corpus split; 'evaluation' does not apply", c.profile.name));
        }
        read(*e, "folds", c.folds, "evaluation");
        read(*e, "folds_to_run", c.folds_to_run, "evaluation");
        if (c.folds < 2) throw std::invalid_argument("config: evaluation.folds must be at least 2");
    }

    if (auto k = doc.find("corrector"); k != doc.end()) {
        check_keys(*k, "corrector", {"backend", "command", "url", "timeout_ms", "fallback", "in_flight"});
        std::string backend = correction::backend_kind_name(c.corrector.kind);
        read(*k, "backend", backend, "corrector");
        c.corrector.kind = correction::parse_backend_kind(backend);
        read(*k, "command", c.corrector.command, "corrector");
        read(*k, "url", c.corrector.url, "corrector");
        read(*k, "timeout_ms", c.corrector.timeout_ms, "corrector");
        read(*k, "fallback", c.corrector.fallback, "corrector");
        read(*k, "in_flight", c.corrector.in_flight, "corrector");
        positive(c.corrector.timeout_ms, "corrector.timeout_ms");
        positive(c.corrector.in_flight, "corrector.in_flight");
    }

    if (auto te = doc.find("text_encoder"); te != doc.end()) {
        check_keys(*te, "text_encoder", {"kind", "dim", "seed"});
        std::string kind = "hashed";
        read(*te, "kind", kind, "text_encoder");
        if (kind != "hashed") throw std::invalid_argument("config: text_encoder.kind must be \"hashed\"");
        TextEncoderConfig enc;
        read(*te, "dim", enc.dim, "text_encoder");
        read(*te, "seed", enc.seed, "text_encoder");
        positive(enc.dim, "text_encoder.dim");
        c.text_encoder = enc;
    }
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

double ResultRow::metric(const std::string& name) const
{
    for (const auto& [k, v] : metrics) {
        if (k == name) return v;
    }
    throw std::out_of_range(fmt::format("row {}/{} has no metric '{}'", technique, source, name));
}

double source_wer(const Corpus& corpus, const std::string& source)
{
    metrics::WerAccumulator acc;
    for (const auto& u : corpus.utterances) acc.add(metrics::levenshtein_align(u.reference, u.hypothesis(source).tokens));
    return acc.value();
}

// ---- runs ----------------------------------------------------------------------

std::vector<ResultRow> run_text_only(const Corpus& corpus, const ExperimentConfig& config)
{
    Runner runner(corpus, config);
    std::vector<std::function<ResultRow()>> cells;
    auto sources = runner.sources();
    sources.push_back(kGroundTruth);
    for (const auto& source : sources) {
        cells.emplace_back([&runner, &corpus, source] {
            auto data = runner.examples_for(source);
            auto spec = runner.spec(trainer::InputMode::text_only, fusion::Technique::early, data);
            double wer = source == kGroundTruth ? 0.0 : source_wer(corpus, source);
            return runner.row(kTextOnly, source, wer, runner.evaluate(spec, data));
        });
    }
    return run_cells(cells, config.threads);
}

std::vector<ResultRow> run_fusion(const Corpus& corpus, const ExperimentConfig& config)
{
    Runner runner(corpus, config);
    runner.require_audio();
    auto sources = runner.sources();
    sources.push_back(kGroundTruth);

    std::vector<ExampleSet> data;
    std::vector<double> wers;
    for (const auto& source : sources) {
        data.push_back(runner.examples_for(source));
        wers.push_back(source == kGroundTruth ? 0.0 : source_wer(corpus, source));
    }

    std::vector<std::function<ResultRow()>> cells;
    for (auto technique : config.techniques) {
        for (std::size_t s = 0; s < sources.size(); ++s) {
            cells.emplace_back([&, technique, s] {
                auto spec = runner.spec(trainer::InputMode::fused, technique, data[s]);
                return runner.row(std::string(fusion::technique_name(technique)), sources[s], wers[s],
                                  runner.evaluate(spec, data[s]));
            });
        }
    }
    auto cell_rows = run_cells(cells, config.threads);

    std::vector<ResultRow> rows;
    const std::size_t per = sources.size();
    for (std::size_t t = 0; t < config.techniques.size(); ++t) {
        const ResultRow& gt = cell_rows[t * per + per - 1];
        Metrics diff;
        for (const auto& name : config.profile.metrics) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s + 1 < per; ++s) {
                double gap = gt.metric(name) - cell_rows[t * per + s].metric(name);
                best = std::max(best, lower_is_better(name) ? -gap : gap);
            }
            diff.emplace_back(name, best);
        }
        for (std::size_t s = 0; s < per; ++s) rows.push_back(std::move(cell_rows[t * per + s]));
        if (per > 1) rows.push_back(runner.row(gt.technique, kMaximumDiff, std::nullopt, std::move(diff)));
    }
    return rows;
}

SingleRun run_single(const Corpus& corpus, const ExperimentConfig& config, trainer::InputMode mode,
                     fusion::Technique technique, const std::string& source)
{
    Runner runner(corpus, config);
    if (mode != trainer::InputMode::text_only) runner.require_audio();
    auto data = runner.examples_for(source);
    auto spec = runner.spec(mode, technique, data);
    auto [metrics, result] = runner.fit_first(spec, data);
    std::string name = mode == trainer::InputMode::fused       ? std::string(fusion::technique_name(technique))
                       : mode == trainer::InputMode::text_only ? kTextOnly
                                                               : "audio-only";
    std::optional<double> wer = source == kGroundTruth ? 0.0 : source_wer(corpus, source);
    return {runner.row(name, source, wer, std::move(metrics)), spec, std::move(result)};
}

std::vector<ResultRow> run_framework(const Corpus& corpus, const ExperimentConfig& config)
{
    Runner runner(corpus, config);
    runner.require_audio();
    auto sources = runner.sources();
    if (sources.empty()) throw std::invalid_argument("framework mode needs hypotheses");

    std::string best;
    double best_wer = 0.0;
    for (const auto& s : sources) {
        double w = source_wer(corpus, s);
        if (best.empty() || w < best_wer) {
            best = s;
            best_wer = w;
        }
    }

    std::vector<correction::HypothesisSet> sets;
    for (const auto& u : corpus.utterances) {
        correction::HypothesisSet set{u.id, {}};
        for (const auto& s : sources) set.hypotheses.push_back(u.hypothesis(s));
        sets.push_back(std::move(set));
    }
    auto corrector = correction::make_corrector(config.corrector);
    auto corrected = corrector->correct(sets);
    metrics::WerAccumulator acc;
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
        acc.add(metrics::levenshtein_align(corpus.utterances[i].reference, corrected[i]));
    }
    const double corrected_wer = acc.value();
    auto corrected_data = runner.examples_for(corrected, corrector->name());
    const std::string corrector_name = corrector->name();

    std::vector<std::function<ResultRow()>> cells;
    cells.emplace_back([&] {
        auto data = runner.examples_for(best);
        return runner.row(kTextOnly, best, best_wer,
                          runner.evaluate(runner.spec(trainer::InputMode::text_only, fusion::Technique::early, data), data));
    });
    cells.emplace_back([&] {
        auto data = runner.examples_for(kGroundTruth);
        return runner.row(kTextOnly, kGroundTruth, 0.0,
                          runner.evaluate(runner.spec(trainer::InputMode::text_only, fusion::Technique::early, data), data));
    });
    cells.emplace_back([&] {
        auto spec = runner.spec(trainer::InputMode::fused, fusion::Technique::modality_gated, corrected_data);
        return runner.row(std::string(fusion::technique_name(fusion::Technique::modality_gated)), corrector_name,
                          corrected_wer, runner.evaluate(spec, corrected_data));
    });
    return run_cells(cells, config.threads);
}

}  // namespace asrser::harness
