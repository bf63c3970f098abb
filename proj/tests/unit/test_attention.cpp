// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "asrser/attention/attention.hpp"
#include "asrser/numkernel/gradcheck.hpp"
#include "asrser/numkernel/ops.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace asrser;
using nk::Tape;
using nk::Tensor;
using nk::Var;

namespace {

attn::MHAWeights identity_weights(Tape& tape, std::size_t d, std::size_t heads)
{
    return {heads, tape.constant(Tensor::identity(d)), tape.constant(Tensor::identity(d)),
            tape.constant(Tensor::identity(d)), tape.constant(Tensor::identity(d))};
}

Var weighted_sum(Var y, std::uint64_t seed)
{
    nk::CounterRng rng(seed, 5);
    return nk::sum(nk::mul(y, y.tape().constant(testing::random_tensor(y.shape(), rng))));
}

}  // namespace

TEST_CASE("scaled dot attention")
{
    Tape tape;
    SUBCASE("single key returns the value row")
    {
        nk::CounterRng rng(1);
        Var q = tape.constant(testing::random_tensor({3, 4}, rng));
        Var k = tape.constant(testing::random_tensor({1, 4}, rng));
        Tensor vrow = testing::random_tensor({1, 2}, rng);
        auto r = attn::scaled_dot_attention(q, k, tape.constant(vrow));
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(r.output.value().at(i, 0) == doctest::Approx(vrow[0]).epsilon(1e-15));
            CHECK(r.output.value().at(i, 1) == doctest::Approx(vrow[1]).epsilon(1e-15));
        }
    }
    SUBCASE("identical keys split evenly")
    {
        Var q = tape.constant(Tensor::matrix({{0.3, -1.2}}));
        Var k = tape.constant(Tensor::matrix({{0.5, 0.5}, {0.5, 0.5}}));
        Var v = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
        auto r = attn::scaled_dot_attention(q, k, v);
        CHECK(r.weights.value()[0] == doctest::Approx(0.5));
        CHECK(r.weights.value()[1] == doctest::Approx(0.5));
    }
    SUBCASE("hand computed 2x2 case")
    {
        Var q = tape.constant(Tensor::matrix({{1, 0}}));
        Var k = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
        Var v = tape.constant(Tensor::matrix({{2, 0}, {0, 3}}));
        auto r = attn::scaled_dot_attention(q, k, v);
        const double e = std::exp(1.0 / std::sqrt(2.0));
        const double w0 = e / (e + 1.0);
        CHECK(r.weights.value()[0] == doctest::Approx(w0).epsilon(1e-14));
        CHECK(r.weights.value()[1] == doctest::Approx(1.0 - w0).epsilon(1e-14));
        CHECK(r.output.value()[0] == doctest::Approx(2.0 * w0).epsilon(1e-14));
    }
    SUBCASE("dimension mismatch")
    {
        CHECK_THROWS_AS(attn::scaled_dot_attention(tape.constant(Tensor({2, 3})), tape.constant(Tensor({2, 4})),
                                                   tape.constant(Tensor({2, 4}))),
                        nk::DimensionError);
    }
}

TEST_CASE("attention weights lie on the simplex")
{
    nk::CounterRng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        Tape tape;
        auto r = attn::scaled_dot_attention(tape.constant(testing::random_tensor({4, 3}, rng, -5, 5)),
                                            tape.constant(testing::random_tensor({6, 3}, rng, -5, 5)),
                                            tape.constant(testing::random_tensor({6, 2}, rng)));
        const Tensor& w = r.weights.value();
        for (std::size_t i = 0; i < 4; ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < 6; ++j) {
                CHECK(w.at(i, j) >= 0.0);
                total += w.at(i, j);
            }
            CHECK(std::abs(total - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("multihead attention")
{
    SUBCASE("one head, identity projections, single key")
    {
        Tape tape;
        Var q = tape.constant(Tensor::matrix({{0.1, 0.2, 0.3}, {1, 1, 1}}));
        Tensor kv = Tensor::matrix({{4, 5, 6}});
        Var out = attn::multihead(q, tape.constant(kv), identity_weights(tape, 3, 1));
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 3; ++j) CHECK(out.value().at(i, j) == doctest::Approx(kv[j]));
        }
    }

    nk::ParameterSet params;
    attn::MHAParams layout("mha", 16, 8);
    layout.init(params, 3);
    nk::CounterRng rng(12);

    SUBCASE("output length follows the query")
    {
        for (std::size_t lq : {1u, 3u, 7u}) {
            for (std::size_t lk : {1u, 5u}) {
                Tape tape;
                nk::Binding b(tape, params);
                Var out = attn::multihead(tape.constant(testing::random_tensor({lq, 16}, rng)),
                                          tape.constant(testing::random_tensor({lk, 16}, rng)), layout.bind(b));
                CHECK(out.shape() == nk::Shape{lq, 16});
            }
        }
    }
    SUBCASE("key/value permutation invariance")
    {
        Tensor q = testing::random_tensor({3, 16}, rng);
        Tensor kv = testing::random_tensor({5, 16}, rng);
        auto perm = nk::permutation(5, rng);
        Tensor kv_perm({5, 16});
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 16; ++j) kv_perm.at(i, j) = kv.at(perm[i], j);
        }
        Tape tape;
        nk::Binding b(tape, params);
        auto w = layout.bind(b);
        Var o1 = attn::multihead(tape.constant(q), tape.constant(kv), w);
        Var o2 = attn::multihead(tape.constant(q), tape.constant(kv_perm), w);
        CHECK(testing::max_abs_diff(o1.value(), o2.value()) < 1e-10);
    }
    SUBCASE("cross and self attention are multihead")
    {
        Tensor a = testing::random_tensor({4, 16}, rng);
        Tape tape;
        nk::Binding b(tape, params);
        auto w = layout.bind(b);
        Var x = tape.constant(a);
        CHECK(attn::cross_attn(x, x, w).value() == attn::self_attn(x, w).value());
        CHECK(attn::self_attn(x, w).value() == attn::multihead(x, x, w).value());
        Var other = tape.constant(testing::random_tensor({2, 16}, rng));
        CHECK(attn::cross_attn(x, other, w).shape() == nk::Shape{4, 16});
    }
    SUBCASE("self attention on one row with identity projections")
    {
        Tape tape;
        Tensor row = testing::random_tensor({1, 16}, rng);
        Var out = attn::self_attn(tape.constant(row), identity_weights(tape, 16, 8));
        CHECK(testing::max_abs_diff(out.value(), row) < 1e-15);
    }
    SUBCASE("model dim mismatch")
    {
        Tape tape;
        nk::Binding b(tape, params);
        CHECK_THROWS_AS(attn::multihead(tape.constant(Tensor({2, 8})), tape.constant(Tensor({2, 8})), layout.bind(b)),
                        nk::DimensionError);
    }
    SUBCASE("head count must divide the model dim")
    {
        CHECK_THROWS_AS(attn::MHAParams("bad", 12, 8), nk::DimensionError);
    }
}

TEST_CASE("gradient check through multihead attention")
{
    for (std::uint64_t point = 0; point < 10; ++point) {
        nk::ParameterSet params;
        attn::MHAParams layout("mha", 8, 8);
        layout.init(params, 100 + point);
        nk::CounterRng rng(200 + point);
        params.add("a", testing::random_tensor({3, 8}, rng));
        params.add("b", testing::random_tensor({4, 8}, rng));
        auto report = nk::finite_diff_check(params, [&](nk::Binding& b) {
            return weighted_sum(attn::cross_attn(b("a"), b("b"), layout.bind(b)), point);
        });
        CHECK(report.max_rel_error < 1e-4);
    }
}
