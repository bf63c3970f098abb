// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "asrser/metrics/metrics.hpp"
#include "asrser/numkernel/rng.hpp"
#include "doctest.h"

using namespace asrser;
using metrics::TokenSeq;

namespace {

// Top-down memoized edit distance, written independently of the
// bottom-up table in the library.
std::size_t oracle_distance(const TokenSeq& a, const TokenSeq& b)
{
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t best = go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
        best = std::min(best, go(i + 1, j) + 1);
        best = std::min(best, go(i, j + 1) + 1);
        return memo[key] = best;
    };
    return go(0, 0);
}

TokenSeq random_tokens(nk::CounterRng& rng, std::size_t min_len)
{
    static const char* vocab[] = {"a", "b", "c", "d", "e"};
    std::size_t len = min_len + rng.below(9 - min_len);
    TokenSeq out;
    for (std::size_t i = 0; i < len; ++i) out.emplace_back(vocab[rng.below(5)]);
    return out;
}

}  // namespace

TEST_CASE("normalize_text")
{
    CHECK(metrics::normalize_text("Hello, World!") == TokenSeq{"hello", "world"});
    CHECK(metrics::normalize_text("").empty());
    CHECK(metrics::normalize_text("it's FINE.") == TokenSeq{"its", "fine"});
    CHECK(metrics::normalize_text("  spaced\tout\n words ") == TokenSeq{"spaced", "out", "words"});
    CHECK(metrics::normalize_text("... --- !!!").empty());
    CHECK(metrics::normalize_text("caf\xc3\xa9 ok") == TokenSeq{"caf\xc3\xa9", "ok"});
    for (const auto& tok : metrics::normalize_text("A{b}C [d] e~F `g` h|I \"j\" k@L m#n$o%p^q&r*s(t)u_v+w=x<y>z?/\\")) {
        CHECK(!tok.empty());
        for (char c : tok) {
            CHECK(!(c >= 'A' && c <= 'Z'));
            CHECK(std::isalnum(static_cast<unsigned char>(c)));
        }
    }
    CHECK(metrics::join({"a", "b"}) == "a b");
}

TEST_CASE("levenshtein examples")
{
    TokenSeq ref{"the", "cat", "sat"};
    auto same = metrics::levenshtein_align(ref, ref);
    CHECK(same.errors() == 0);
    CHECK(metrics::wer(same) == 0.0);

    auto a = metrics::levenshtein_align(ref, {"the", "bat"});
    CHECK(a.substitutions == 1);
    CHECK(a.deletions == 1);
    CHECK(a.insertions == 0);
    CHECK(metrics::wer(a) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    auto del = metrics::levenshtein_align({"a"}, {});
    CHECK(del.deletions == 1);
    CHECK(metrics::wer(del) == 1.0);

    auto sub = metrics::levenshtein_align({"a"}, {"b"});
    CHECK(sub.substitutions == 1);
    CHECK(sub.errors() == 1);

    auto longer = metrics::levenshtein_align({"x"}, {"y", "z", "w"});
    CHECK(metrics::wer(longer) == 3.0);

    CHECK_THROWS_AS(metrics::levenshtein_align({}, {"a"}), metrics::EmptyReference);
}

TEST_CASE("levenshtein matches an exhaustive oracle")
{
    nk::CounterRng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        TokenSeq ref = random_tokens(rng, 1);
        TokenSeq hyp = random_tokens(rng, 0);
        auto a = metrics::levenshtein_align(ref, hyp);
        REQUIRE(a.errors() == oracle_distance(ref, hyp));
        CHECK(a.substitutions + a.deletions + a.matches == ref.size());
        CHECK(a.substitutions + a.insertions + a.matches == hyp.size());
        CHECK(metrics::replay(ref, a) == hyp);
    }
}

TEST_CASE("corpus WER pools errors")
{
    metrics::WerAccumulator acc;
    CHECK_THROWS_AS(acc.value(), std::logic_error);
    acc.add(metrics::levenshtein_align({"a", "b", "c", "d"}, {"a", "b", "c", "d"}));
    acc.add(metrics::levenshtein_align({"x"}, {"y"}));
    CHECK(acc.value() == doctest::Approx(0.2));
    CHECK(acc.utterances() == 2);
}

TEST_CASE("accuracy grounding")
{
    CHECK(metrics::acc7_class(2.7) == 3);
    CHECK(metrics::acc7_class(-3.4) == -3);
    CHECK(metrics::acc7_class(2.5) == 3);
    CHECK(metrics::acc7_class(-0.5) == -1);
    CHECK(metrics::acc7_class(0.49) == 0);
    CHECK(metrics::acc2_class(0.0) == 0);
    CHECK(metrics::acc2_class(1e-9) == 1);

    std::vector<std::size_t> cls{0, 1, 2, 3, 1};
    CHECK(metrics::accuracy(cls, cls) == 1.0);
    std::vector<double> p{0.0, 1.0, 2.0}, l{0.0, 1.0, 3.0};
    CHECK(metrics::accuracy(p, l, metrics::AccuracyScheme::acc4) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(metrics::accuracy(std::vector<double>{1.0}, std::vector<double>{}, metrics::AccuracyScheme::acc2),
                    std::invalid_argument);
    CHECK_THROWS_AS(metrics::accuracy(std::vector<double>{}, std::vector<double>{}, metrics::AccuracyScheme::acc2),
                    std::invalid_argument);

    nk::CounterRng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + rng.below(40);
        std::vector<double> preds(n), labels(n);
        std::size_t hit2 = 0, hit7 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            preds[i] = rng.uniform(-4, 4);
            labels[i] = std::round(rng.uniform(-3, 3) * 2.0) / 2.0;
            hit2 += (preds[i] > 0) == (labels[i] > 0);
            auto ground = [](double x) {
                int r = static_cast<int>(x >= 0 ? std::floor(x + 0.5) : -std::floor(-x + 0.5));
                return r < -3 ? -3 : r > 3 ? 3 : r;
            };
            hit7 += ground(preds[i]) == ground(labels[i]);
        }
        double acc2 = metrics::accuracy(preds, labels, metrics::AccuracyScheme::acc2);
        CHECK(acc2 == static_cast<double>(hit2) / static_cast<double>(n));
        CHECK(metrics::accuracy(preds, labels, metrics::AccuracyScheme::acc7) ==
              static_cast<double>(hit7) / static_cast<double>(n));
        CHECK(acc2 >= 0.0);
        CHECK(acc2 <= 1.0);
    }
}

TEST_CASE("mae")
{
    std::vector<double> x{0.5, -1.0, 2.0};
    CHECK(metrics::mae(x, x) == 0.0);
    CHECK(metrics::mae(std::vector<double>{0, 0}, std::vector<double>{1, -1}) == 1.0);
    nk::CounterRng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + rng.below(50);
        std::vector<double> p(n), l(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.normal();
            l[i] = rng.normal();
            total += std::fabs(p[i] - l[i]);
        }
        CHECK(std::abs(metrics::mae(p, l) - total / static_cast<double>(n)) < 1e-12);
    }
}

TEST_CASE("ccc")
{
    std::vector<double> x{1, 2, 3};
    CHECK(metrics::ccc(x, x) == 1.0);
    CHECK(metrics::ccc(x, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(metrics::ccc(x, std::vector<double>{4, 4, 4}) == 0.0);
    CHECK(metrics::ccc(std::vector<double>{2, 2}, std::vector<double>{2, 2}) == 0.0);
    CHECK_THROWS_AS(metrics::ccc(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::ccc(x, std::vector<double>{1, 2}), std::invalid_argument);

    nk::CounterRng rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng.below(30);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal() * 3.0 + 1.0;
            b[i] = trial % 3 == 0 ? -a[i] * 0.5 : rng.normal();
        }
        double c = metrics::ccc(a, b);
        CHECK(std::abs(c) <= 1.0);
        CHECK(c == doctest::Approx(metrics::ccc(b, a)).epsilon(1e-14));
        CHECK(std::abs(metrics::ccc(a, a) - 1.0) <= 1e-12);
    }
}

TEST_CASE("spearman")
{
    std::vector<double> rates{0.0, 0.1, 0.2, 0.3, 0.4};
    CHECK(metrics::spearman(rates, std::vector<double>{0.9, 0.8, 0.7, 0.6, 0.5}) == doctest::Approx(-1.0));
    CHECK(metrics::spearman(rates, std::vector<double>{0.9, 0.7, 0.8, 0.6, 0.5}) == doctest::Approx(-0.9));
    CHECK(metrics::spearman(rates, std::vector<double>{1, 2, 3, 4, 5}) == doctest::Approx(1.0));
    CHECK(metrics::spearman(rates, std::vector<double>{3, 3, 3, 3, 3}) == 0.0);
    // Ties share the average rank: ranks of y are 1.5, 1.5, 3.
    CHECK(metrics::spearman(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 9}) ==
          doctest::Approx(std::sqrt(3.0) / 2.0));
    CHECK_THROWS_AS(metrics::spearman(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}
