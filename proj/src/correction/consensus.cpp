// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "asrser/correction/correction.hpp"

namespace asrser::correction {

namespace {

bool slot_has(const std::vector<std::optional<std::string>>& slot, const std::optional<std::string>& choice)
{
    return std::find(slot.begin(), slot.end(), choice) != slot.end();
}

enum class Step { diag, skip, insert };

}  // namespace

void HypothesisSet::validate() const
{
    if (hypotheses.empty()) throw std::invalid_argument("utterance " + id + ": no hypotheses");
    std::set<std::string> seen;
    for (const auto& h : hypotheses) {
        if (!seen.insert(h.source).second) {
            throw std::invalid_argument("utterance " + id + ": duplicate source '" + h.source + "'");
        }
    }
}

std::vector<TokenSeq> HypothesisSet::token_lists() const
{
    std::vector<TokenSeq> out;
    out.reserve(hypotheses.size());
    for (const auto& h : hypotheses) out.push_back(h.tokens);
    return out;
}

ConfusionNetwork build_confusion_network(std::span<const TokenSeq> hyps)
{
    if (hyps.empty()) throw std::invalid_argument("build_confusion_network: no hypotheses");
    ConfusionNetwork net;
    for (const auto& tok : hyps[0]) net.slots.push_back({tok});
    net.hypotheses = 1;

    for (std::size_t k = 1; k < hyps.size(); ++k) {
        const TokenSeq& h = hyps[k];
        const std::size_t n = net.slots.size(), m = h.size(), w = m + 1;
        auto sub_cost = [&](std::size_t i, std::size_t j) -> std::size_t {
            return slot_has(net.slots[i], h[j]) ? 0 : 1;
        };
        auto skip_cost = [&](std::size_t i) -> std::size_t { return slot_has(net.slots[i], std::nullopt) ? 0 : 1; };

        std::vector<std::size_t> cost((n + 1) * w);
        for (std::size_t i = 1; i <= n; ++i) cost[i * w] = cost[(i - 1) * w] + skip_cost(i - 1);
        for (std::size_t j = 1; j <= m; ++j) cost[j] = j;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 1; j <= m; ++j) {
                cost[i * w + j] = std::min({cost[(i - 1) * w + j - 1] + sub_cost(i - 1, j - 1),
                                            cost[(i - 1) * w + j] + skip_cost(i - 1), cost[i * w + j - 1] + 1});
            }
        }

        std::vector<std::vector<std::optional<std::string>>> merged;
        std::size_t i = n, j = m;
        while (i > 0 || j > 0) {
            const std::size_t here = cost[i * w + j];
            Step step = Step::insert;
            if (i > 0 && j > 0 && here == cost[(i - 1) * w + j - 1] + sub_cost(i - 1, j - 1)) {
                step = Step::diag;
            } else if (i > 0 && here == cost[(i - 1) * w + j] + skip_cost(i - 1)) {
                step = Step::skip;
            }
            switch (step) {
            case Step::diag:
                merged.push_back(std::move(net.slots[i - 1]));
                merged.back().push_back(h[j - 1]);
                --i, --j;
                break;
            case Step::skip:
                merged.push_back(std::move(net.slots[i - 1]));
                merged.back().push_back(std::nullopt);
                --i;
                break;
            case Step::insert:
                merged.emplace_back(k, std::nullopt);
                merged.back().push_back(h[j - 1]);
                --j;
                break;
            }
        }
        std::reverse(merged.begin(), merged.end());
        net.slots = std::move(merged);
        net.hypotheses = k + 1;
    }
    return net;
}

std::vector<SlotVote> slot_votes(const ConfusionNetwork& net, std::size_t slot)
{
    std::vector<SlotVote> out;
    const auto& choices = net.slots.at(slot);
    for (std::size_t k = 0; k < choices.size(); ++k) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SlotVote& v) { return v.token == choices[k]; });
        if (it == out.end()) {
            out.push_back({choices[k], 1, k});
        } else {
            ++it->votes;
        }
    }
    return out;
}

TokenSeq vote_consensus(const ConfusionNetwork& net)
{
    TokenSeq out;
    for (std::size_t s = 0; s < net.slots.size(); ++s) {
        auto votes = slot_votes(net, s);
        // Candidates are in order of first appearance, so the first maximum
        // is the earliest hypothesis among the tied ones.
        const SlotVote* best = &votes.front();
        for (const auto& v : votes) {
            if (v.votes > best->votes) best = &v;
        }
        if (best->token) out.push_back(*best->token);
    }
    return out;
}

TokenSeq consensus(std::span<const TokenSeq> hyps) { return vote_consensus(build_confusion_network(hyps)); }

CorrectionReport evaluate_correction(std::span<const TokenSeq> references, std::span<const HypothesisSet> hyps,
                                     Corrector& corrector)
{
    if (references.empty()) throw std::invalid_argument("evaluate_correction: empty corpus");
    if (references.size() != hyps.size()) {
        throw std::invalid_argument("evaluate_correction: references and hypothesis sets differ in count");
    }
    const auto& first = hyps.front().hypotheses;
    std::vector<metrics::WerAccumulator> per_source(first.size());
    for (const auto& set : hyps) {
        set.validate();
        if (set.hypotheses.size() != first.size()) {
            throw std::invalid_argument("utterance " + set.id + ": source list differs from the first utterance");
        }
    }

    CorrectionReport report;
    report.corrected = corrector.correct(hyps);
    metrics::WerAccumulator corrected;
    for (std::size_t u = 0; u < references.size(); ++u) {
        for (std::size_t s = 0; s < first.size(); ++s) {
            const auto& h = hyps[u].hypotheses[s];
            if (h.source != first[s].source) {
                throw std::invalid_argument("utterance " + hyps[u].id + ": source order differs from the first utterance");
            }
            per_source[s].add(metrics::levenshtein_align(references[u], h.tokens));
        }
        corrected.add(metrics::levenshtein_align(references[u], report.corrected[u]));
    }
    for (std::size_t s = 0; s < first.size(); ++s) {
        report.per_source.push_back({first[s].source, per_source[s].value()});
        if (s == 0 || report.per_source[s].wer < report.best_wer) {
            report.best_wer = report.per_source[s].wer;
            report.best_source = first[s].source;
        }
    }
    report.corrected_wer = corrected.value();
    return report;
}

}  // namespace asrser::correction
