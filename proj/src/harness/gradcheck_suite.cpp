// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/harness/gradcheck_suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include "asrser/attention/attention.hpp"
#include "asrser/fusion/fusion.hpp"
#include "asrser/numkernel/gradcheck.hpp"
#include "asrser/numkernel/ops.hpp"
#include "asrser/numkernel/rng.hpp"
#include "asrser/trainer/trainer.hpp"

namespace asrser::harness {

namespace {

using nk::Binding;
using nk::Tensor;
using nk::Var;

constexpr std::size_t kDim = 8;
constexpr std::size_t kHeads = 8;

Tensor uniform(const nk::Shape& shape, nk::CounterRng& rng)
{
    Tensor t(shape);
    for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
    return t;
}

Tensor away_from_zero(const nk::Shape& shape, nk::CounterRng& rng)
{
    Tensor t(shape);
    for (auto& v : t.data()) {
        double x = rng.uniform(0.05, 1.0);
        v = rng.uniform() < 0.5 ? -x : x;
    }
    return t;
}

// Contracts a tensor-valued output to a scalar with fixed random weights so
// every output coordinate contributes.
Var contract(Var y)
{
    nk::CounterRng rng(99, y.value().size());
    return nk::sum(nk::mul(y, y.tape().constant(uniform(y.shape(), rng))));
}

struct Case {
    std::string name;
    // Fills the parameter set for one random point.
    std::function<void(nk::ParameterSet&, nk::CounterRng&, std::uint64_t)> setup;
    std::function<Var(Binding&)> loss;
};

void add_inputs(nk::ParameterSet& p, nk::CounterRng& rng, std::initializer_list<std::pair<const char*, nk::Shape>> inputs)
{
    for (const auto& [name, shape] : inputs) p.add(name, uniform(shape, rng));
}

// Smallest |pre-activation| of the two hidden layers for input x.
double relu_margin(const nk::ParameterSet& p, const Tensor& x)
{
    Tensor h1 = nk::add_rowwise(nk::matmul(x, p.at("bb.dense1.w")), p.at("bb.dense1.b"));
    Tensor h2 = nk::add_rowwise(nk::matmul(nk::relu(h1), p.at("bb.dense2.w")), p.at("bb.dense2.b"));
    double m = std::numeric_limits<double>::infinity();
    for (double v : h1.data()) m = std::min(m, std::abs(v));
    for (double v : h2.data()) m = std::min(m, std::abs(v));
    return m;
}

void backbone_setup(nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t seed)
{
    trainer::BackboneLayout("bb", 6, 3).init(p, seed);
    Tensor x = away_from_zero({4, 6}, rng);
    while (relu_margin(p, x) < 1e-3) x = away_from_zero({4, 6}, rng);
    p.add("x", x);
}

std::vector<Case> cases()
{
    const std::vector<std::size_t> labels{1, 0, 2};
    std::vector<Case> out;
    auto op = [&out](std::string name, std::initializer_list<std::pair<const char*, nk::Shape>> inputs,
                     std::function<Var(Binding&)> f, bool kinks = false) {
        std::vector<std::pair<std::string, nk::Shape>> in(inputs.begin(), inputs.end());
        out.push_back({std::move(name),
                       [in, kinks](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t) {
                           for (const auto& [n, shape] : in) p.add(n, kinks ? away_from_zero(shape, rng) : uniform(shape, rng));
                       },
                       std::move(f)});
    };
    op("matmul", {{"a", {3, 4}}, {"b", {4, 2}}}, [](Binding& b) { return contract(nk::matmul(b("a"), b("b"))); });
    op("transpose", {{"a", {3, 4}}}, [](Binding& b) { return contract(nk::transpose(b("a"))); });
    op("add", {{"a", {2, 3}}, {"b", {2, 3}}}, [](Binding& b) { return contract(nk::add(b("a"), b("b"))); });
    op("sub", {{"a", {2, 3}}, {"b", {2, 3}}}, [](Binding& b) { return contract(nk::sub(b("a"), b("b"))); });
    op("mul", {{"a", {2, 3}}, {"b", {2, 3}}}, [](Binding& b) { return contract(nk::mul(b("a"), b("b"))); });
    op("scale", {{"s", {1}}, {"a", {2, 3}}}, [](Binding& b) { return contract(nk::scale(b("s"), b("a"))); });
    op("add_rowwise", {{"a", {3, 2}}, {"b", {2}}}, [](Binding& b) { return contract(nk::add_rowwise(b("a"), b("b"))); });
    op("relu", {{"a", {3, 3}}}, [](Binding& b) { return contract(nk::relu(b("a"))); }, true);
    op("sigmoid", {{"a", {3, 3}}}, [](Binding& b) { return contract(nk::sigmoid(b("a"))); });
    op("softmax", {{"a", {3, 4}}}, [](Binding& b) { return contract(nk::softmax(b("a"), 1)); });
    op("concat", {{"a", {2, 3}}, {"b", {1, 3}}}, [](Binding& b) { return contract(nk::concat({b("a"), b("b")}, 0)); });
    op("slice", {{"a", {4, 3}}}, [](Binding& b) { return contract(nk::slice(b("a"), 1, 1, 3)); });
    op("split", {{"a", {5, 2}}}, [](Binding& b) {
        std::vector<std::size_t> sizes{2, 3};
        auto parts = nk::split(b("a"), sizes, 0);
        return nk::add(contract(parts[0]), nk::scale(2.0, contract(parts[1])));
    });
    op("reshape", {{"a", {2, 3}}}, [](Binding& b) { return contract(nk::reshape(b("a"), {3, 2})); });
    op("mean_pool", {{"a", {4, 3}}}, [](Binding& b) { return contract(nk::mean_pool(b("a"))); });
    op("outer_augmented", {{"a", {3}}, {"b", {2}}}, [](Binding& b) { return contract(nk::outer_augmented(b("a"), b("b"))); });
    op("sum", {{"a", {2, 2}}}, [](Binding& b) { return nk::sum(nk::mul(b("a"), b("a"))); });
    op("dot", {{"a", {4}}, {"b", {4}}}, [](Binding& b) { return nk::dot(b("a"), b("b")); });
    op("softmax_cross_entropy", {{"a", {3, 4}}}, [labels](Binding& b) { return nk::softmax_cross_entropy(b("a"), labels); });
    op("mse", {{"a", {3, 2}}}, [](Binding& b) { return nk::mse(b("a"), Tensor({3, 2}, 0.3)); });

    auto seqs = [](nk::ParameterSet& p, nk::CounterRng& rng) {
        add_inputs(p, rng, {{"audio", {3, kDim}}, {"text", {4, kDim}}});
    };
    out.push_back({"multihead_attention",
                   [=](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t seed) {
                       seqs(p, rng);
                       attn::MHAParams("mha", kDim, kHeads).init(p, seed);
                   },
                   [](Binding& b) {
                       return contract(attn::cross_attn(b("audio"), b("text"), attn::MHAParams("mha", kDim, kHeads).bind(b)));
                   }});
    out.push_back({"fusion/early", [=](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t) { seqs(p, rng); },
                   [](Binding& b) { return contract(fusion::early_fusion(b("audio"), b("text")).values); }});
    out.push_back({"fusion/late",
                   [](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t) {
                       add_inputs(p, rng, {{"out_a", {2, 4}}, {"out_t", {2, 4}}});
                   },
                   [](Binding& b) { return contract(fusion::late_fusion(b("out_a"), b("out_t"))); }});
    out.push_back({"fusion/cross-attention",
                   [=](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t seed) {
                       seqs(p, rng);
                       attn::MHAParams("x", kDim, kHeads).init(p, seed);
                   },
                   [](Binding& b) {
                       return contract(fusion::cross_attention_fusion(b("audio"), b("text"),
                                                                      attn::MHAParams("x", kDim, kHeads).bind(b))
                                           .values);
                   }});
    out.push_back({"fusion/tensor", [=](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t) { seqs(p, rng); },
                   [](Binding& b) { return contract(fusion::tensor_fusion(b("audio"), b("text")).values); }});
    out.push_back({"fusion/nl-gate",
                   [=](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t seed) {
                       seqs(p, rng);
                       fusion::NlGateParams("nl", kDim, kHeads).init(p, seed);
                   },
                   [](Binding& b) {
                       return contract(
                           fusion::nl_gate_fusion(b("audio"), b("text"), fusion::NlGateParams("nl", kDim, kHeads).bind(b)).values);
                   }});
    out.push_back({"fusion/misa",
                   [=](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t seed) {
                       seqs(p, rng);
                       fusion::MisaParams("misa", kDim, 4).init(p, seed);
                   },
                   [](Binding& b) {
                       auto o = fusion::misa_fusion(b("audio"), b("text"), fusion::MisaParams("misa", kDim, 4).bind(b));
                       return nk::add(contract(o.fused.values), nk::add(o.similarity_loss, o.difference_loss));
                   }});
    for (std::size_t branch : {0U, 1U}) {
        out.push_back({"fusion/modality-gated[branch " + std::to_string(branch) + "]",
                       [=](nk::ParameterSet& p, nk::CounterRng& rng, std::uint64_t seed) {
                           seqs(p, rng);
                           fusion::ModalityGateParams("g", kDim, kHeads).init(p, seed);
                           p.at("g.w1") = uniform({2}, rng);
                           p.at("g.w2") = uniform({3}, rng);
                       },
                       [branch](Binding& b) {
                           fusion::GateOptions opts{branch};
                           return contract(fusion::modality_gated_fusion(
                                               b("audio"), b("text"), fusion::ModalityGateParams("g", kDim, kHeads).bind(b), opts)
                                               .values);
                       }});
    }
    out.push_back({"backbone+cross_entropy", backbone_setup, [labels](Binding& b) {
                       auto y = trainer::backbone_forward(b("x"), trainer::BackboneLayout("bb", 6, 3).bind(b));
                       return trainer::task_loss(nk::slice(y, 0, 0, 3), {labels, {}},
                                                 {trainer::TaskKind::classification, 3});
                   }});
    out.push_back({"backbone+mse", backbone_setup, [](Binding& b) {
                       auto y = trainer::backbone_forward(b("x"), trainer::BackboneLayout("bb", 6, 3).bind(b));
                       return trainer::task_loss(y, {{}, Tensor({4, 3}, 0.25)}, {trainer::TaskKind::regression, 3});
                   }});
    return out;
}

}  // namespace

std::vector<GradcheckEntry> run_gradcheck_suite(std::size_t points, std::uint64_t seed)
{
    std::vector<GradcheckEntry> out;
    for (const auto& c : cases()) {
        auto start = std::chrono::steady_clock::now();
        GradcheckEntry entry{c.name, 0.0, points, 0.0};
        for (std::size_t point = 0; point < points; ++point) {
            nk::CounterRng rng(seed + point, nk::fnv1a64(c.name));
            nk::ParameterSet params;
            c.setup(params, rng, seed * 1000 + point);
            entry.max_rel_error = std::max(entry.max_rel_error, nk::finite_diff_check(params, c.loss).max_rel_error);
        }
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace asrser::harness
