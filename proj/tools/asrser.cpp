// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: wer, consensus, synth, train, benchmark,
// gradcheck, report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "asrser/correction/correction.hpp"
#include "asrser/harness/corpus.hpp"
#include "asrser/harness/experiment.hpp"
#include "asrser/harness/gradcheck_suite.hpp"
#include "asrser/harness/report.hpp"
#include "asrser/harness/synth.hpp"
#include "asrser/metrics/metrics.hpp"
#include "json.hpp"

using namespace asrser;
using namespace asrser::harness;

namespace {

using json = nlohmann::ordered_json;

class Output {
public:
    explicit Output(const std::string& path)
    {
        if (path.empty() || path == "-") return;
        file_.open(path, std::ios::binary);
        if (!file_) throw std::runtime_error("cannot write " + path);
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

Corpus load_corpus(const std::string& path)
{
    auto loaded = load_dataset(path);
    if (loaded.dropped_blank > 0) {
        fmt::print(stderr, "{}: dropped {} utterance(s) with a blank reference\n", path, loaded.dropped_blank);
    }
    return std::move(loaded.corpus);
}

// JSONL of {"id", "text"}, as written by `consensus`.
std::map<std::string, metrics::TokenSeq> load_transcripts(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::map<std::string, metrics::TokenSeq> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") || !doc["id"].is_string() ||
            !doc.contains("text") || !doc["text"].is_string()) {
            throw CorpusError(n, "expected {\"id\": string, \"text\": string}");
        }
        out[doc["id"].get<std::string>()] = metrics::normalize_text(doc["text"].get<std::string>());
    }
    return out;
}

// ---- wer ---------------------------------------------------------------------

struct WerOptions {
    std::string corpus;
    std::string hyp;
    std::string source;
    std::string out;
    bool summary_only = false;
};

void run_wer(const WerOptions& o)
{
    Corpus corpus = load_corpus(o.corpus);
    std::vector<std::pair<std::string, std::vector<metrics::TokenSeq>>> systems;
    if (!o.hyp.empty()) {
        auto hyps = load_transcripts(o.hyp);
        std::vector<metrics::TokenSeq> col;
        for (const auto& u : corpus.utterances) {
            auto it = hyps.find(u.id);
            if (it == hyps.end()) throw std::runtime_error(fmt::format("{}: no transcript for utterance {}", o.hyp, u.id));
            col.push_back(it->second);
        }
        systems.emplace_back(o.hyp, std::move(col));
    } else {
        for (const auto& s : corpus.sources()) {
            if (!o.source.empty() && s != o.source) continue;
            std::vector<metrics::TokenSeq> col;
            for (const auto& u : corpus.utterances) col.push_back(u.hypothesis(s).tokens);
            systems.emplace_back(s, std::move(col));
        }
        if (systems.empty()) throw std::runtime_error("no hypothesis source matches '" + o.source + "'");
    }

    Output out(o.out);
    auto& os = out.stream();
    if (!o.summary_only) fmt::print(os, "id\tsource\terrors\tref_words\twer\n");
    std::vector<std::pair<std::string, metrics::WerAccumulator>> totals;
    for (const auto& [name, col] : systems) {
        metrics::WerAccumulator acc;
        for (std::size_t i = 0; i < col.size(); ++i) {
            auto a = metrics::levenshtein_align(corpus.utterances[i].reference, col[i]);
            acc.add(a);
            if (!o.summary_only) {
                fmt::print(os, "{}\t{}\t{}\t{}\t{:.4f}\n", corpus.utterances[i].id, name, a.errors(), a.ref_length,
                           metrics::wer(a));
            }
        }
        totals.emplace_back(name, acc);
    }
    for (const auto& [name, acc] : totals) {
        fmt::print(os, "corpus\t{}\t{}\t{}\t{:.4f}\n", name, acc.errors(), acc.ref_words(), acc.value());
    }
}

// ---- consensus ---------------------------------------------------------------

struct ConsensusOptions {
    std::string corpus;
    std::string out;
    std::string backend = "builtin-consensus";
    std::string command;
    std::string url;
    std::size_t timeout_ms = 10000;
    std::size_t in_flight = 8;
    bool no_fallback = false;
};

void run_consensus(const ConsensusOptions& o)
{
    Corpus corpus = load_corpus(o.corpus);
    correction::BackendConfig cfg;
    cfg.kind = correction::parse_backend_kind(o.backend);
    cfg.command = o.command;
    cfg.url = o.url;
    cfg.timeout_ms = o.timeout_ms;
    cfg.in_flight = o.in_flight;
    cfg.fallback = !o.no_fallback;
    auto corrector = correction::make_corrector(cfg);

    std::vector<correction::HypothesisSet> sets;
    std::vector<metrics::TokenSeq> refs;
    for (const auto& u : corpus.utterances) {
        sets.push_back(u.hypothesis_set());
        refs.push_back(u.reference);
    }
    auto report = correction::evaluate_correction(refs, sets, *corrector);

    Output out(o.out);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        json line{{"id", sets[i].id}, {"text", metrics::join(report.corrected[i])}};
        out.stream() << line.dump() << '\n';
    }
    for (const auto& s : report.per_source) fmt::print(stderr, "wer {:<16} {:.4f}\n", s.source, s.wer);
    fmt::print(stderr, "wer {:<16} {:.4f} (best single source: {} {:.4f})\n", corrector->name(), report.corrected_wer,
               report.best_source, report.best_wer);
}

// ---- synth -------------------------------------------------------------------

struct SynthOptions {
    std::string out;
    std::string task = "emotion4";
    std::vector<double> rates;
    std::size_t channels = 0;
    double rate = 0.0;
    std::vector<double> shares;
    SynthConfig config;
};

SynthTask parse_task(const std::string& name)
{
    if (name == "emotion4") return SynthTask::emotion4;
    if (name == "sentiment") return SynthTask::sentiment;
    if (name == "vad") return SynthTask::vad;
    throw std::invalid_argument("unknown task '" + name + "' (expected emotion4, sentiment or vad)");
}

void run_synth(SynthOptions o)
{
    o.config.task = parse_task(o.task);
    if (!o.rates.empty() && o.channels > 0) throw std::invalid_argument("use either --rates or --channels/--rate");
    if (o.channels > 0) {
        o.config.channels = uniform_channels(o.channels, o.rate);
    } else {
        for (std::size_t i = 0; i < o.rates.size(); ++i) o.config.channels.push_back({fmt::format("asr{:02}", i), o.rates[i]});
    }
    if (!o.shares.empty()) {
        if (o.shares.size() != 3) throw std::invalid_argument("--shares takes three values: substitute,delete,insert");
        o.config.shares = {o.shares[0], o.shares[1], o.shares[2]};
    }
    Corpus corpus = synth_corpus(o.config);
    save_dataset(o.out, corpus);
    for (const auto& s : corpus.sources()) fmt::print(stderr, "{} wer {:.4f}\n", s, source_wer(corpus, s));
}

// ---- train / benchmark -------------------------------------------------------

ExperimentConfig config_for(const std::string& path, const std::optional<std::uint64_t>& seed,
                            const std::optional<std::size_t>& threads)
{
    ExperimentConfig c = load_config(path);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    return c;
}

struct TrainOptions {
    std::string corpus;
    std::string config;
    std::string mode = "fused";
    std::string technique = "modality-gated";
    std::string source = kGroundTruth;
    std::string checkpoint;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

trainer::InputMode parse_mode(const std::string& name)
{
    if (name == "text-only") return trainer::InputMode::text_only;
    if (name == "audio-only") return trainer::InputMode::audio_only;
    if (name == "fused") return trainer::InputMode::fused;
    throw std::invalid_argument("unknown mode '" + name + "' (expected text-only, audio-only or fused)");
}

void run_train(const TrainOptions& o)
{
    ExperimentConfig cfg = config_for(o.config, o.seed, std::nullopt);
    Corpus corpus = load_corpus(o.corpus);
    auto run = run_single(corpus, cfg, parse_mode(o.mode), fusion::parse_technique(o.technique), o.source);
    if (!o.quiet) {
        for (std::size_t e = 0; e < run.result.history.size(); ++e) {
            fmt::print(stderr, "epoch {:>4}  loss {:.6f}  metric {:.4f}\n", e + 1, run.result.history[e].loss,
                       run.result.history[e].metric);
        }
    }
    if (!o.checkpoint.empty()) {
        json meta{{"model", trainer::describe(run.spec)}, {"source", o.source}, {"seed", cfg.seed},
                  {"profile", cfg.profile.name}};
        trainer::save_checkpoint(o.checkpoint, run.result.params, meta.dump());
    }
    Output out(o.out);
    out.stream() << format_report({run.row}, parse_report_format(o.format));
}

struct BenchmarkOptions {
    std::string mode;
    std::string config;
    std::string corpus;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

void run_benchmark(const BenchmarkOptions& o)
{
    ExperimentConfig cfg = config_for(o.config, o.seed, o.threads);
    Corpus corpus = load_corpus(o.corpus);
    std::vector<ResultRow> rows;
    if (o.mode == "text-only") {
        rows = run_text_only(corpus, cfg);
    } else if (o.mode == "fusion") {
        rows = run_fusion(corpus, cfg);
    } else if (o.mode == "framework") {
        rows = run_framework(corpus, cfg);
    } else {
        throw std::invalid_argument("unknown mode '" + o.mode + "' (expected text-only, fusion or framework)");
    }
    const auto format = parse_report_format(o.format);
    if (o.out.empty() || o.out == "-") {
        std::cout << format_report(rows, format);
    } else {
        write_report(o.out, rows, format);
    }
}

// ---- gradcheck / report ------------------------------------------------------

int run_gradcheck(std::size_t points, std::uint64_t seed, double tolerance)
{
    auto entries = run_gradcheck_suite(points, seed);
    bool ok = true;
    double total = 0.0;
    for (const auto& e : entries) {
        const bool pass = e.max_rel_error < tolerance;
        ok = ok && pass;
        total += e.seconds;
        fmt::print("{:<36} max_rel_error {:.3e}  {:7.3f}s  {}\n", e.name, e.max_rel_error, e.seconds, pass ? "ok" : "FAIL");
    }
    fmt::print("{} operations, {} points each, {:.2f}s: {}\n", entries.size(), points, total, ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

void run_report(const std::string& in, const std::string& format, const std::string& out)
{
    auto rows = read_csv_report(in);
    auto text = format_report(rows, parse_report_format(format));
    Output o(out);
    o.stream() << text;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ASR-robust speech emotion recognition toolkit"};
    app.require_subcommand(1);
    int status = 0;

    WerOptions wer;
    auto* wer_cmd = app.add_subcommand("wer", "Per-utterance and corpus WER against the corpus references");
    wer_cmd->add_option("corpus", wer.corpus, "Corpus JSONL supplying the references")->required()->check(CLI::ExistingFile);
    wer_cmd->add_option("hyp", wer.hyp, "JSONL of {id, text}; default: every hypothesis source in the corpus")
        ->check(CLI::ExistingFile);
    wer_cmd->add_option("--source", wer.source, "Only this hypothesis source");
    wer_cmd->add_option("--out", wer.out, "Output file (default stdout)");
    wer_cmd->add_flag("--summary", wer.summary_only, "Corpus lines only");
    wer_cmd->callback([&] { run_wer(wer); });

    ConsensusOptions cons;
    auto* cons_cmd = app.add_subcommand("consensus", "Emit corrected transcripts as JSONL of {id, text}");
    cons_cmd->add_option("corpus", cons.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    cons_cmd->add_option("--out", cons.out, "Output file (default stdout)");
    cons_cmd->add_option("--backend", cons.backend, "builtin-consensus, external-process or external-http");
    cons_cmd->add_option("--command", cons.command, "Shell command for external-process");
    cons_cmd->add_option("--url", cons.url, "Endpoint for external-http");
    cons_cmd->add_option("--timeout-ms", cons.timeout_ms, "Per-request timeout");
    cons_cmd->add_option("--in-flight", cons.in_flight, "Requests outstanding at once");
    cons_cmd->add_flag("--no-fallback", cons.no_fallback, "Fail instead of falling back to consensus");
    cons_cmd->callback([&] { run_consensus(cons); });

    SynthOptions syn;
    auto* syn_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
    syn_cmd->add_option("--out", syn.out, "Output JSONL")->required();
    syn_cmd->add_option("--n", syn.config.n, "Utterances");
    syn_cmd->add_option("--task", syn.task, "emotion4, sentiment or vad");
    syn_cmd->add_option("--rates", syn.rates, "One channel per corruption rate")->delimiter(',');
    syn_cmd->add_option("--channels", syn.channels, "Number of channels sharing --rate");
    syn_cmd->add_option("--rate", syn.rate, "Corruption rate for --channels");
    syn_cmd->add_option("--shares", syn.shares, "substitute,delete,insert shares of the rate")->delimiter(',');
    syn_cmd->add_option("--vocab", syn.config.vocab_size, "Vocabulary size");
    syn_cmd->add_option("--min-len", syn.config.min_len, "Shortest reference");
    syn_cmd->add_option("--max-len", syn.config.max_len, "Longest reference");
    syn_cmd->add_option("--keyword-rate", syn.config.keyword_rate, "Share of class keywords in a reference");
    syn_cmd->add_option("--keyword-share", syn.config.keyword_share, "Share of the vocabulary used as class keywords");
    syn_cmd->add_option("--audio-dim", syn.config.audio_dim, "Audio feature width");
    syn_cmd->add_option("--audio-separation", syn.config.audio_separation, "Scale of the class audio means");
    syn_cmd->add_option("--audio-noise", syn.config.audio_noise, "Frame noise");
    syn_cmd->add_option("--test-fraction", syn.config.test_fraction, "Share tagged split=test");
    syn_cmd->add_option("--text-dim", syn.config.text_feature_dim, "Store hashed text features of this width");
    syn_cmd->add_option("--text-seed", syn.config.text_feature_seed, "Seed of the stored text features");
    syn_cmd->add_option("--seed", syn.config.seed, "Seed");
    syn_cmd->callback([&] { run_synth(syn); });

    TrainOptions tr;
    auto* tr_cmd = app.add_subcommand("train", "Train and score a single configuration");
    tr_cmd->add_option("--corpus", tr.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    tr_cmd->add_option("--config", tr.config, "Config JSON")->required()->check(CLI::ExistingFile);
    tr_cmd->add_option("--mode", tr.mode, "text-only, audio-only or fused");
    tr_cmd->add_option("--technique", tr.technique, "Fusion technique for --mode fused");
    tr_cmd->add_option("--source", tr.source, "Transcript source (default: ground truth)");
    tr_cmd->add_option("--seed", tr.seed, "Overrides the config seed");
    tr_cmd->add_option("--checkpoint", tr.checkpoint, "Write the trained parameters here");
    tr_cmd->add_option("--out", tr.out, "Report file (default stdout)");
    tr_cmd->add_option("--format", tr.format, "csv or markdown");
    tr_cmd->add_flag("--quiet", tr.quiet, "No per-epoch log");
    tr_cmd->callback([&] { run_train(tr); });

    BenchmarkOptions bm;
    auto* bm_cmd = app.add_subcommand("benchmark", "Run a benchmark table");
    bm_cmd->add_option("--mode", bm.mode, "text-only, fusion or framework")->required();
    bm_cmd->add_option("--config", bm.config, "Config JSON")->required()->check(CLI::ExistingFile);
    bm_cmd->add_option("--corpus", bm.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    bm_cmd->add_option("--seed", bm.seed, "Overrides the config seed");
    bm_cmd->add_option("--threads", bm.threads, "Overrides the config thread count");
    bm_cmd->add_option("--out", bm.out, "Report file (default stdout)");
    bm_cmd->add_option("--format", bm.format, "csv or markdown");
    bm_cmd->callback([&] { run_benchmark(bm); });

    std::size_t gc_points = 10;
    std::uint64_t gc_seed = 0;
    double gc_tol = 1e-4;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable operation");
    gc_cmd->add_option("--points", gc_points, "Random points per operation");
    gc_cmd->add_option("--seed", gc_seed, "Seed");
    gc_cmd->add_option("--tolerance", gc_tol, "Maximum relative error");
    gc_cmd->callback([&] { status = run_gradcheck(gc_points, gc_seed, gc_tol); });

    std::string rep_in, rep_format = "markdown", rep_out;
    auto* rep_cmd = app.add_subcommand("report", "Reformat a CSV report");
    rep_cmd->add_option("input", rep_in, "CSV report")->required()->check(CLI::ExistingFile);
    rep_cmd->add_option("--format", rep_format, "csv or markdown");
    rep_cmd->add_option("--out", rep_out, "Output file (default stdout)");
    rep_cmd->callback([&] { run_report(rep_in, rep_format, rep_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        fmt::print(stderr, "asrser: error: {}\n", e.what());
        return 1;
    }
    return status;
}
