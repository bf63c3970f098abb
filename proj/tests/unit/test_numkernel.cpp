// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "asrser/numkernel/gradcheck.hpp"
#include "asrser/numkernel/ops.hpp"
#include "asrser/numkernel/params.hpp"
#include "asrser/numkernel/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace asrser;
using nk::Tape;
using nk::Tensor;
using nk::Var;

namespace {

// Weighted sum with fixed random weights, so vector-valued ops get a
// non-degenerate scalar objective.
Var weighted_sum(Var y, std::uint64_t seed)
{
    nk::CounterRng rng(seed, 99);
    Tensor w = testing::random_tensor(y.shape(), rng);
    return nk::sum(nk::mul(y, y.tape().constant(w)));
}

}  // namespace

TEST_CASE("tensor invariants")
{
    CHECK_THROWS_AS(Tensor({2, 0}), nk::DimensionError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), nk::DimensionError);
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.reshaped({3, 2}).shape() == nk::Shape{3, 2});
    CHECK_THROWS_AS(t.reshaped({4}), nk::DimensionError);
}

TEST_CASE("matmul")
{
    Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
    CHECK(nk::matmul(Tensor::identity(2), m) == m);
    CHECK(nk::matmul(Tensor::matrix({{1, 0}}), Tensor::matrix({{0}, {5}})) == Tensor::matrix({{0}}));

    SUBCASE("shape mismatch names both shapes")
    {
        try {
            nk::matmul(Tensor({2, 3}), Tensor({2, 3}));
            FAIL("expected DimensionError");
        } catch (const nk::DimensionError& e) {
            std::string msg = e.what();
            CHECK(msg.find("[2,3]") != std::string::npos);
            CHECK(msg.find("and [2,3]") != std::string::npos);
        }
    }

    SUBCASE("gradient of sum(A B) against central differences")
    {
        nk::CounterRng rng(7);
        nk::ParameterSet p;
        p.add("a", testing::random_tensor({3, 4}, rng));
        p.add("b", testing::random_tensor({4, 2}, rng));
        auto report = nk::finite_diff_check(p, [](nk::Binding& b) { return nk::sum(nk::matmul(b("a"), b("b"))); });
        CHECK(report.coordinates == 20);
        CHECK(report.max_rel_error < 1e-6);
    }
}

TEST_CASE("softmax")
{
    Tensor half = nk::softmax(Tensor::vector({1, 1}), 0);
    CHECK(half[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(half[1] == doctest::Approx(0.5).epsilon(1e-15));

    Tensor big = nk::softmax(Tensor::vector({1000, 0}), 0);
    CHECK(big.all_finite());
    CHECK(big[0] == doctest::Approx(1.0));
    CHECK(big[1] < 1e-300);

    // Hand formula: e^{x - max} / sum.
    Tensor s = nk::softmax(Tensor::vector({0, 1, 2}), 0);
    const double z = std::exp(-2.0) + std::exp(-1.0) + 1.0;
    CHECK(s[0] == doctest::Approx(std::exp(-2.0) / z).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-14));
    CHECK(s[2] == doctest::Approx(1.0 / z).epsilon(1e-14));

    CHECK_THROWS_AS(nk::softmax(Tensor({2, 2}), 2), nk::DimensionError);
}

TEST_CASE("softmax sums to one and is shift invariant on random logits")
{
    nk::CounterRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = testing::random_tensor({3, 5}, rng, -20.0, 20.0);
        for (std::size_t axis : {0u, 1u}) {
            Tensor y = nk::softmax(x, axis);
            Tensor shifted = x;
            for (auto& v : shifted.data()) v += 37.25;
            Tensor ys = nk::softmax(shifted, axis);
            CHECK(testing::max_abs_diff(y, ys) < 1e-12);
            if (axis == 1) {
                for (std::size_t r = 0; r < 3; ++r) {
                    double total = 0.0;
                    for (std::size_t c = 0; c < 5; ++c) total += y.at(r, c);
                    CHECK(std::abs(total - 1.0) < 1e-12);
                }
            } else {
                for (std::size_t c = 0; c < 5; ++c) {
                    double total = 0.0;
                    for (std::size_t r = 0; r < 3; ++r) total += y.at(r, c);
                    CHECK(std::abs(total - 1.0) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("relu")
{
    CHECK(nk::relu(Tensor::vector({-1, 0, 2})) == Tensor::vector({0, 0, 2}));
    CHECK(std::isnan(nk::relu(Tensor::vector({std::nan("")}))[0]));
    Tensor pos = Tensor::vector({0.5, 3, 7});
    CHECK(nk::relu(pos) == pos);

    nk::CounterRng rng(3);
    Tensor x = testing::random_away_from_zero({6}, rng);
    double err = nk::finite_diff_check([](Var v) { return weighted_sum(nk::relu(v), 1); }, x);
    CHECK(err < 1e-6);
}

TEST_CASE("concat and split")
{
    Tensor a({2, 3}, 1.0), b({2, 5}, 2.0);
    std::vector<Tensor> parts{a, b};
    CHECK(nk::concat(parts, 1).shape() == nk::Shape{2, 8});
    std::vector<Tensor> single{a};
    CHECK(nk::concat(single, 1) == a);

    std::vector<Tensor> bad{Tensor({2, 3}), Tensor({3, 3})};
    CHECK_THROWS_AS(nk::concat(bad, 1), nk::DimensionError);

    SUBCASE("split recovers the inputs exactly")
    {
        nk::CounterRng rng(5);
        for (std::size_t axis : {0u, 1u}) {
            Tensor x = testing::random_tensor({3, 4}, rng);
            Tensor y = testing::random_tensor(axis == 0 ? nk::Shape{2, 4} : nk::Shape{3, 2}, rng);
            Tape tape;
            Var cat = nk::concat({tape.constant(x), tape.constant(y)}, axis);
            std::vector<std::size_t> sizes{x.shape()[axis], y.shape()[axis]};
            auto pieces = nk::split(cat, sizes, axis);
            CHECK(pieces[0].value() == x);
            CHECK(pieces[1].value() == y);
        }
    }

    SUBCASE("gradient")
    {
        nk::CounterRng rng(8);
        nk::ParameterSet p;
        p.add("x", testing::random_tensor({2, 3}, rng));
        p.add("y", testing::random_tensor({2, 4}, rng));
        auto report = nk::finite_diff_check(
            p, [](nk::Binding& b) { return weighted_sum(nk::concat({b("x"), b("y")}, 1), 2); });
        CHECK(report.max_rel_error < 1e-6);
    }
}

TEST_CASE("mean_pool")
{
    CHECK(nk::mean_pool(Tensor::matrix({{1, 3}, {3, 5}})) == Tensor::vector({2, 4}));
    CHECK(nk::mean_pool(Tensor::matrix({{4, -2, 7}})) == Tensor::vector({4, -2, 7}));

    Tape tape;
    Var x = tape.watch(Tensor({4, 3}, 0.25));
    auto g = tape.backward(nk::sum(nk::mean_pool(x)));
    for (double v : g.of(x).data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("outer_augmented")
{
    CHECK(nk::outer_augmented(Tensor({3}, 0.5), Tensor({2}, 0.5)).size() == 12);
    Tensor z = nk::outer_augmented(Tensor({2}, 0.0), Tensor({2}, 0.0));
    for (std::size_t i = 0; i + 1 < z.size(); ++i) CHECK(z[i] == 0.0);
    CHECK(z[z.size() - 1] == 1.0);
    // [1,2,1] (x) [3,1] row-major.
    CHECK(nk::outer_augmented(Tensor::vector({1, 2}), Tensor::vector({3})) == Tensor::vector({3, 1, 6, 2, 3, 1}));
}

TEST_CASE("backward")
{
    SUBCASE("x^2 at 3")
    {
        Tape tape;
        Var x = tape.watch(Tensor::scalar(3.0));
        auto g = tape.backward(nk::mul(x, x));
        CHECK(g.of(x)[0] == doctest::Approx(6.0).epsilon(1e-15));
    }
    SUBCASE("constant loss gives zero gradients")
    {
        Tape tape;
        Var x = tape.watch(Tensor({2, 2}, 1.0));
        Var c = tape.constant(Tensor::scalar(4.0));
        auto g = tape.backward(c);
        for (double v : g.of(x).data()) CHECK(v == 0.0);
    }
    SUBCASE("non-scalar loss")
    {
        Tape tape;
        Var x = tape.watch(Tensor({2}, 1.0));
        CHECK_THROWS_AS(tape.backward(x), nk::TapeError);
    }
    SUBCASE("stale tape")
    {
        Tape tape;
        Var x = tape.watch(Tensor::scalar(2.0));
        Var y = nk::mul(x, x);
        tape.backward(y);
        CHECK_THROWS_AS(tape.backward(y), nk::TapeError);
        CHECK_THROWS_AS(nk::mul(x, x), nk::TapeError);
    }
    SUBCASE("mixing tapes")
    {
        Tape t1, t2;
        CHECK_THROWS_AS(nk::add(t1.watch(Tensor::scalar(1)), t2.watch(Tensor::scalar(1))), nk::TapeError);
    }
    SUBCASE("composite matmul -> relu -> softmax")
    {
        nk::CounterRng rng(21);
        nk::ParameterSet p;
        p.add("x", testing::random_tensor({3, 4}, rng));
        p.add("w", testing::random_tensor({4, 5}, rng));
        auto f = [](nk::Binding& b) {
            return weighted_sum(nk::softmax(nk::relu(nk::matmul(b("x"), b("w"))), 1), 4);
        };
        CHECK(nk::finite_diff_check(p, f).max_rel_error < 1e-4);
    }
}

TEST_CASE("finite_diff_check")
{
    SUBCASE("linear function is exact to rounding")
    {
        auto f = [](Var x) {
            return nk::sum(nk::mul(x, x.tape().constant(Tensor::vector({2.0, -3.0, 0.5}))));
        };
        CHECK(nk::finite_diff_check(f, Tensor::vector({0.3, -0.7, 1.1})) < 1e-10);
    }
    SUBCASE("sum of softmax is constant")
    {
        nk::CounterRng rng(2);
        Tensor x = testing::random_tensor({5}, rng);
        Tape tape;
        Var v = tape.watch(x);
        auto g = tape.backward(nk::sum(nk::softmax(v, 0)));
        for (double gi : g.of(v).data()) CHECK(std::abs(gi) < 1e-15);
        CHECK(nk::finite_diff_check([](Var y) { return nk::sum(nk::softmax(y, 0)); }, x) < 1e-8);
    }
}

TEST_CASE("every differentiable op passes the gradient check at 10 random points")
{
    using Builder = std::function<Var(nk::Binding&)>;
    struct Case {
        std::string name;
        std::map<std::string, nk::Shape> inputs;
        Builder f;
        bool avoid_kinks = false;
    };
    const std::vector<std::size_t> labels{1, 0, 2};
    std::vector<Case> cases{
        {"matmul", {{"a", {3, 4}}, {"b", {4, 2}}}, [](nk::Binding& b) { return weighted_sum(nk::matmul(b("a"), b("b")), 1); }},
        {"transpose", {{"a", {3, 4}}}, [](nk::Binding& b) { return weighted_sum(nk::transpose(b("a")), 1); }},
        {"add", {{"a", {2, 3}}, {"b", {2, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::add(b("a"), b("b")), 1); }},
        {"sub", {{"a", {2, 3}}, {"b", {2, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::sub(b("a"), b("b")), 1); }},
        {"mul", {{"a", {2, 3}}, {"b", {2, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::mul(b("a"), b("b")), 1); }},
        {"scale", {{"s", {1}}, {"a", {2, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::scale(b("s"), b("a")), 1); }},
        {"add_rowwise", {{"a", {3, 2}}, {"b", {2}}}, [](nk::Binding& b) { return weighted_sum(nk::add_rowwise(b("a"), b("b")), 1); }},
        {"relu", {{"a", {3, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::relu(b("a")), 1); }, true},
        {"sigmoid", {{"a", {3, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::sigmoid(b("a")), 1); }},
        {"softmax0", {{"a", {3, 4}}}, [](nk::Binding& b) { return weighted_sum(nk::softmax(b("a"), 0), 1); }},
        {"softmax1", {{"a", {3, 4}}}, [](nk::Binding& b) { return weighted_sum(nk::softmax(b("a"), 1), 1); }},
        {"concat0", {{"a", {2, 3}}, {"b", {1, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::concat({b("a"), b("b")}, 0), 1); }},
        {"slice", {{"a", {4, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::slice(b("a"), 1, 1, 3), 1); }},
        {"reshape", {{"a", {2, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::reshape(b("a"), {3, 2}), 1); }},
        {"mean_pool", {{"a", {4, 3}}}, [](nk::Binding& b) { return weighted_sum(nk::mean_pool(b("a")), 1); }},
        {"outer_augmented", {{"a", {3}}, {"b", {2}}}, [](nk::Binding& b) { return weighted_sum(nk::outer_augmented(b("a"), b("b")), 1); }},
        {"dot", {{"a", {4}}, {"b", {4}}}, [](nk::Binding& b) { return nk::dot(b("a"), b("b")); }},
        {"softmax_cross_entropy", {{"a", {3, 4}}}, [labels](nk::Binding& b) { return nk::softmax_cross_entropy(b("a"), labels); }},
        {"mse", {{"a", {3, 2}}}, [](nk::Binding& b) { return nk::mse(b("a"), Tensor({3, 2}, 0.3)); }},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        double worst = 0.0;
        for (std::uint64_t point = 0; point < 10; ++point) {
            nk::CounterRng rng(1000 + point, nk::fnv1a64(c.name));
            nk::ParameterSet p;
            for (const auto& [n, shape] : c.inputs) {
                p.add(n, c.avoid_kinks ? testing::random_away_from_zero(shape, rng) : testing::random_tensor(shape, rng));
            }
            worst = std::max(worst, nk::finite_diff_check(p, c.f).max_rel_error);
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("loss values against direct formulas")
{
    Tape tape;
    Var uniform = tape.constant(Tensor({2, 4}, 0.3));
    std::vector<std::size_t> labels{0, 3};
    CHECK(nk::softmax_cross_entropy(uniform, labels).value().item() == doctest::Approx(std::log(4.0)).epsilon(1e-14));

    Var perfect = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
    CHECK(nk::mse(perfect, Tensor::matrix({{1, 2}, {3, 4}})).value().item() == 0.0);

    nk::CounterRng rng(17);
    Tensor logits = testing::random_tensor({5, 3}, rng, -3, 3);
    std::vector<std::size_t> lab{0, 2, 1, 1, 0};
    double expected = 0.0;
    for (std::size_t r = 0; r < 5; ++r) {
        double z = 0.0;
        for (std::size_t c = 0; c < 3; ++c) z += std::exp(logits.at(r, c));
        expected += -std::log(std::exp(logits.at(r, lab[r])) / z);
    }
    expected /= 5.0;
    CHECK(std::abs(nk::softmax_cross_entropy(tape.constant(logits), lab).value().item() - expected) < 1e-12);

    Tensor pred = testing::random_tensor({4, 3}, rng);
    Tensor target = testing::random_tensor({4, 3}, rng);
    double mse = 0.0;
    for (std::size_t i = 0; i < 12; ++i) mse += (pred[i] - target[i]) * (pred[i] - target[i]);
    CHECK(std::abs(nk::mse(tape.constant(pred), target).value().item() - mse / 4.0) < 1e-12);
}

TEST_CASE("operations are deterministic")
{
    nk::CounterRng rng(4);
    Tensor a = testing::random_tensor({5, 6}, rng);
    Tensor b = testing::random_tensor({6, 7}, rng);
    auto run = [&] {
        Tape tape;
        Var x = tape.watch(a);
        Var y = tape.watch(b);
        Var out = nk::softmax(nk::relu(nk::matmul(x, y)), 1);
        auto g = tape.backward(weighted_sum(out, 3));
        return std::make_pair(out.value(), g.of(x));
    };
    auto first = run();
    auto second = run();
    CHECK(first.first == second.first);
    CHECK(first.second == second.second);
}

TEST_CASE("counter rng")
{
    nk::CounterRng a(42, 3), b(42, 3), c(42, 4);
    for (int i = 0; i < 100; ++i) {
        auto x = a.next();
        CHECK(x == b.next());
        CHECK(x != c.next());
    }
    nk::CounterRng u(1);
    for (int i = 0; i < 1000; ++i) {
        double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK(u.below(7) < 7);
    }
    auto perm = nk::permutation(50, u);
    std::vector<bool> seen(50, false);
    for (auto i : perm) seen[i] = true;
    for (bool s : seen) CHECK(s);
}

TEST_CASE("parameter initialization bounds")
{
    nk::ParameterSet p;
    p.add_uniform("w", {16, 8}, 16, 5);
    for (double v : p.at("w").data()) CHECK(std::abs(v) <= 0.25);
    nk::ParameterSet q;
    q.add_uniform("other", {3}, 3, 5);
    q.add_uniform("w", {16, 8}, 16, 5);
    CHECK(q.at("w") == p.at("w"));
    CHECK_THROWS_AS(p.add("w", Tensor()), std::invalid_argument);
}
