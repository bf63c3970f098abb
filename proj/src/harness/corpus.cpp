// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/harness/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/core.h>

#include "asrser/numkernel/rng.hpp"
#include "json.hpp"

namespace asrser::harness {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void field_error(std::size_t line, const std::string& field, const std::string& what)
{
    throw CorpusError(line, fmt::format("field '{}': {}", field, what));
}

nk::Tensor parse_matrix(const json& value, std::size_t line, const std::string& field)
{
    if (!value.is_array() || value.empty()) field_error(line, field, "expected a non-empty array of rows");
    const std::size_t rows = value.size();
    std::size_t cols = 0;
    std::vector<double> data;
    for (const auto& row : value) {
        if (!row.is_array() || row.empty()) field_error(line, field, "expected every row to be a non-empty array");
        if (cols == 0) cols = row.size();
        if (row.size() != cols) field_error(line, field, "rows differ in length");
        for (const auto& x : row) {
            if (!x.is_number()) field_error(line, field, "expected numbers");
            double v = x.get<double>();
            if (!std::isfinite(v)) field_error(line, field, "non-finite value");
            data.push_back(v);
        }
    }
    return nk::Tensor({rows, cols}, std::move(data));
}

json matrix_json(const nk::Tensor& t)
{
    json rows = json::array();
    for (std::size_t r = 0; r < t.dim(0); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < t.dim(1); ++c) row.push_back(t.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

const json& require(const json& doc, const char* field, std::size_t line)
{
    auto it = doc.find(field);
    if (it == doc.end()) field_error(line, field, "missing");
    return *it;
}

std::string require_string(const json& doc, const char* field, std::size_t line)
{
    const json& v = require(doc, field, line);
    if (!v.is_string()) field_error(line, field, "expected a string");
    return v.get<std::string>();
}

Label parse_label(const json& v, std::size_t line)
{
    if (!v.is_object() || v.size() != 1) field_error(line, "label", "expected an object with one of class/score/vad");
    Label label;
    if (auto c = v.find("class"); c != v.end()) {
        label.kind = LabelKind::categorical;
        if (c->is_number_unsigned()) {
            label.cls = c->get<std::size_t>();
        } else if (c->is_string()) {
            auto name = c->get<std::string>();
            auto it = std::find(kEmotionClasses.begin(), kEmotionClasses.end(), name);
            if (it == kEmotionClasses.end()) field_error(line, "label.class", "unknown class name '" + name + "'");
            label.cls = static_cast<std::size_t>(it - kEmotionClasses.begin());
        } else {
            field_error(line, "label.class", "expected a non-negative integer or a class name");
        }
    } else if (auto s = v.find("score"); s != v.end()) {
        label.kind = LabelKind::score;
        if (!s->is_number() || !std::isfinite(s->get<double>())) field_error(line, "label.score", "expected a number");
        label.score = s->get<double>();
    } else if (auto d = v.find("vad"); d != v.end()) {
        label.kind = LabelKind::vad;
        if (!d->is_array() || d->size() != 3) field_error(line, "label.vad", "expected three numbers");
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(*d)[i].is_number()) field_error(line, "label.vad", "expected three numbers");
            label.vad[i] = (*d)[i].get<double>();
        }
    } else {
        field_error(line, "label", "expected one of class/score/vad");
    }
    return label;
}

}  // namespace

CorpusError::CorpusError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line)
{
}

const correction::Hypothesis& Utterance::hypothesis(const std::string& source) const
{
    for (const auto& h : hypotheses) {
        if (h.source == source) return h;
    }
    throw std::out_of_range(fmt::format("utterance {} has no hypothesis from '{}'", id, source));
}

correction::HypothesisSet Utterance::hypothesis_set() const { return {id, hypotheses}; }

std::vector<std::string> Corpus::sources() const
{
    std::vector<std::string> out;
    if (utterances.empty()) return out;
    for (const auto& h : utterances.front().hypotheses) out.push_back(h.source);
    return out;
}

void Corpus::validate() const
{
    if (utterances.empty()) throw SchemaError("corpus has no utterances");
    const Utterance& first = utterances.front();
    const auto sources = this->sources();
    std::set<std::string> ids;
    for (const auto& u : utterances) {
        if (!ids.insert(u.id).second) throw SchemaError(fmt::format("duplicate utterance id '{}'", u.id));
        if (u.reference.empty()) throw SchemaError(fmt::format("utterance {}: empty reference", u.id));
        if (u.label.kind != first.label.kind) {
            throw SchemaError(fmt::format("utterance {}: label kind differs from utterance {}", u.id, first.id));
        }
        if (u.hypotheses.size() != sources.size()) {
            throw SchemaError(fmt::format("utterance {}: field 'hypotheses' lists {} sources, expected {}", u.id,
                                          u.hypotheses.size(), sources.size()));
        }
        for (std::size_t s = 0; s < sources.size(); ++s) {
            if (u.hypotheses[s].source != sources[s]) {
                throw SchemaError(fmt::format("utterance {}: field 'hypotheses' has source '{}' where '{}' was expected",
                                              u.id, u.hypotheses[s].source, sources[s]));
            }
        }
        if (u.audio_features.has_value() != first.audio_features.has_value() ||
            (u.audio_features && u.audio_features->dim(1) != first.audio_features->dim(1))) {
            throw SchemaError(fmt::format("utterance {}: field 'audio_features' is inconsistent with utterance {}",
                                          u.id, first.id));
        }
        for (const auto& [key, t] : u.text_features) {
            for (const auto& [key0, t0] : first.text_features) {
                if (t.dim(1) != t0.dim(1)) {
                    throw SchemaError(fmt::format("utterance {}: field 'text_features.{}' has width {}, expected {}",
                                                  u.id, key, t.dim(1), t0.dim(1)));
                }
                break;
            }
        }
    }
}

std::optional<Utterance> parse_utterance(const std::string& line, std::size_t n)
{
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) throw CorpusError(n, "malformed JSON");
    if (!doc.is_object()) throw CorpusError(n, "expected a JSON object");

    Utterance u;
    u.id = require_string(doc, "id", n);
    if (u.id.empty()) field_error(n, "id", "must not be empty");
    u.reference = metrics::normalize_text(require_string(doc, "reference", n));
    u.label = parse_label(require(doc, "label", n), n);

    const json& hyps = require(doc, "hypotheses", n);
    if (!hyps.is_array()) field_error(n, "hypotheses", "expected an array");
    for (const auto& h : hyps) {
        if (!h.is_object()) field_error(n, "hypotheses", "expected objects with source and text");
        correction::Hypothesis hyp{require_string(h, "source", n), metrics::normalize_text(require_string(h, "text", n))};
        if (hyp.source.empty() || hyp.source == kGroundTruthKey || hyp.source == kGroundTruth) {
            field_error(n, "hypotheses.source", "invalid source name '" + hyp.source + "'");
        }
        for (const auto& prev : u.hypotheses) {
            if (prev.source == hyp.source) field_error(n, "hypotheses.source", "duplicate source '" + hyp.source + "'");
        }
        u.hypotheses.push_back(std::move(hyp));
    }

    if (auto s = doc.find("split"); s != doc.end()) {
        if (!s->is_string()) field_error(n, "split", "expected a string");
        u.split = s->get<std::string>();
    }
    if (auto a = doc.find("audio_features"); a != doc.end()) u.audio_features = parse_matrix(*a, n, "audio_features");
    if (auto t = doc.find("text_features"); t != doc.end()) {
        if (!t->is_object()) field_error(n, "text_features", "expected an object keyed by source");
        for (const auto& [key, value] : t->items()) {
            if (key != kGroundTruthKey &&
                std::none_of(u.hypotheses.begin(), u.hypotheses.end(), [&](const auto& h) { return h.source == key; })) {
                field_error(n, "text_features." + key, "no hypothesis with that source");
            }
            u.text_features.emplace(key, parse_matrix(value, n, "text_features." + key));
        }
    }
    if (u.reference.empty()) return std::nullopt;
    return u;
}

LoadResult load_dataset(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus " + path);
    LoadResult result;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto u = parse_utterance(line, n);
        if (u) {
            result.corpus.utterances.push_back(std::move(*u));
        } else {
            ++result.dropped_blank;
        }
    }
    result.corpus.validate();
    return result;
}

std::string serialize_utterance(const Utterance& u)
{
    json doc;
    doc["id"] = u.id;
    doc["reference"] = metrics::join(u.reference);
    json hyps = json::array();
    for (const auto& h : u.hypotheses) hyps.push_back({{"source", h.source}, {"text", metrics::join(h.tokens)}});
    doc["hypotheses"] = std::move(hyps);
    switch (u.label.kind) {
    case LabelKind::categorical: doc["label"] = {{"class", u.label.cls}}; break;
    case LabelKind::score: doc["label"] = {{"score", u.label.score}}; break;
    case LabelKind::vad: doc["label"] = {{"vad", u.label.vad}}; break;
    }
    if (!u.split.empty()) doc["split"] = u.split;
    if (u.audio_features) doc["audio_features"] = matrix_json(*u.audio_features);
    if (!u.text_features.empty()) {
        json tf = json::object();
        for (const auto& [key, t] : u.text_features) tf[key] = matrix_json(t);
        doc["text_features"] = std::move(tf);
    }
    return doc.dump();
}

void save_dataset(const std::string& path, const Corpus& corpus)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus " + path);
    for (const auto& u : corpus.utterances) out << serialize_utterance(u) << '\n';
    if (!out) throw std::runtime_error("failed writing corpus " + path);
}

HashedTextEncoder::HashedTextEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed)
{
    if (dim == 0) throw std::invalid_argument("text encoder dimension must be positive");
}

nk::Tensor HashedTextEncoder::encode(const TokenSeq& tokens) const
{
    if (tokens.empty()) return nk::Tensor({1, dim_}, 0.0);
    nk::Tensor out({tokens.size(), dim_});
    for (std::size_t r = 0; r < tokens.size(); ++r) {
        nk::CounterRng rng(seed_, nk::fnv1a64(tokens[r]));
        for (std::size_t c = 0; c < dim_; ++c) out.at(r, c) = rng.normal();
    }
    return out;
}

}  // namespace asrser::harness
