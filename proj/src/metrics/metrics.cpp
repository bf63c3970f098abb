// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

namespace asrser::metrics {

namespace {

bool is_ascii_space(unsigned char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c)
{
    return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
           (c >= 0x7b && c <= 0x7e);
}

void check_pair(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) throw std::invalid_argument(fmt::format("{}: length mismatch ({} vs {})", what, a, b));
    if (a == 0) throw std::invalid_argument(fmt::format("{}: empty input", what));
}

}  // namespace

TokenSeq normalize_text(std::string_view raw)
{
    TokenSeq out;
    std::string current;
    for (char ch : raw) {
        auto c = static_cast<unsigned char>(ch);
        if (is_ascii_space(c)) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else if (!is_ascii_punct(c)) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::string join(const TokenSeq& tokens)
{
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

Alignment levenshtein_align(const TokenSeq& ref, const TokenSeq& hyp)
{
    if (ref.empty()) throw EmptyReference();
    const std::size_t n = ref.size(), m = hyp.size(), w = m + 1;
    std::vector<std::size_t> cost((n + 1) * w);
    for (std::size_t i = 0; i <= n; ++i) cost[i * w] = i;
    for (std::size_t j = 0; j <= m; ++j) cost[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t diag = cost[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cost[i * w + j] = std::min({diag, cost[(i - 1) * w + j] + 1, cost[i * w + j - 1] + 1});
        }
    }

    Alignment a;
    a.ref_length = n;
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        const std::size_t here = cost[i * w + j];
        if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && here == cost[(i - 1) * w + j - 1]) {
            a.ops.push_back({EditKind::match, i - 1, j - 1, hyp[j - 1]});
            ++a.matches;
            --i, --j;
        } else if (i > 0 && j > 0 && here == cost[(i - 1) * w + j - 1] + 1) {
            a.ops.push_back({EditKind::substitute, i - 1, j - 1, hyp[j - 1]});
            ++a.substitutions;
            --i, --j;
        } else if (i > 0 && here == cost[(i - 1) * w + j] + 1) {
            a.ops.push_back({EditKind::del, i - 1, j, {}});
            ++a.deletions;
            --i;
        } else {
            a.ops.push_back({EditKind::insert, i, j - 1, hyp[j - 1]});
            ++a.insertions;
            --j;
        }
    }
    std::reverse(a.ops.begin(), a.ops.end());
    return a;
}

TokenSeq replay(const TokenSeq& ref, const Alignment& a)
{
    TokenSeq out;
    std::size_t cursor = 0;
    for (const auto& op : a.ops) {
        switch (op.kind) {
        case EditKind::match:
            out.push_back(ref.at(op.ref_index));
            cursor = op.ref_index + 1;
            break;
        case EditKind::substitute:
            out.push_back(op.token);
            cursor = op.ref_index + 1;
            break;
        case EditKind::del:
            cursor = op.ref_index + 1;
            break;
        case EditKind::insert:
            out.push_back(op.token);
            break;
        }
    }
    if (cursor > ref.size()) throw std::logic_error("replay: alignment runs past the reference");
    return out;
}

double wer(const Alignment& a)
{
    if (a.ref_length == 0) throw EmptyReference();
    return static_cast<double>(a.errors()) / static_cast<double>(a.ref_length);
}

double wer(const TokenSeq& ref, const TokenSeq& hyp) { return wer(levenshtein_align(ref, hyp)); }

void WerAccumulator::add(const Alignment& a)
{
    errors_ += a.errors();
    ref_words_ += a.ref_length;
    ++utterances_;
}

double WerAccumulator::value() const
{
    if (ref_words_ == 0) throw std::logic_error("corpus WER over no reference words");
    return static_cast<double>(errors_) / static_cast<double>(ref_words_);
}

int acc2_class(double x) { return x > 0.0 ? 1 : 0; }

int acc7_class(double x) { return static_cast<int>(std::clamp(std::round(x), -3.0, 3.0)); }

double accuracy(std::span<const double> preds, std::span<const double> labels, AccuracyScheme scheme)
{
    check_pair(preds.size(), labels.size(), "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        switch (scheme) {
        case AccuracyScheme::acc2: hits += acc2_class(preds[i]) == acc2_class(labels[i]); break;
        case AccuracyScheme::acc4: hits += preds[i] == labels[i]; break;
        case AccuracyScheme::acc7: hits += acc7_class(preds[i]) == acc7_class(labels[i]); break;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> labels)
{
    check_pair(preds.size(), labels.size(), "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double mae(std::span<const double> preds, std::span<const double> labels)
{
    check_pair(preds.size(), labels.size(), "mae");
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) total += std::abs(preds[i] - labels[i]);
    return total / static_cast<double>(preds.size());
}

double ccc(std::span<const double> x, std::span<const double> y)
{
    check_pair(x.size(), y.size(), "ccc");
    if (x.size() < 2) throw std::invalid_argument("ccc: needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cov += dx * dy;
    }
    vx /= n;
    vy /= n;
    cov /= n;
    const double denom = vx + vy + (mx - my) * (mx - my);
    if (denom == 0.0) return 0.0;
    return 2.0 * cov / denom;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y)
{
    check_pair(x.size(), y.size(), "spearman");
    if (x.size() < 2) throw std::invalid_argument("spearman: needs at least two points");
    auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace asrser::metrics
