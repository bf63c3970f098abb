// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/numkernel/tape.hpp"

namespace asrser::nk {

const Tensor& Var::value() const
{
    if (tape_ == nullptr) throw TapeError("use of an unbound Var");
    return tape_->value(id_);
}

Tape& Var::tape() const
{
    if (tape_ == nullptr) throw TapeError("use of an unbound Var");
    return *tape_;
}

bool Var::requires_grad() const { return tape().requires_grad(id_); }

const Tensor& Gradients::of(Var leaf) const
{
    if (leaf.id() >= by_id_.size() || !by_id_[leaf.id()].has_value()) {
        throw TapeError("no gradient recorded for node " + std::to_string(leaf.id()) + " (not a watched leaf)");
    }
    return *by_id_[leaf.id()];
}

void Tape::check_open() const
{
    if (consumed_) throw TapeError("tape already consumed by backward(); record a new tape");
}

Var Tape::constant(Tensor value)
{
    check_open();
    nodes_.push_back(Node{std::move(value), {}, {}, std::nullopt, false, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::watch(Tensor value)
{
    check_open();
    nodes_.push_back(Node{std::move(value), {}, {}, std::nullopt, true, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward)
{
    check_open();
    bool needs = false;
    for (auto id : inputs) {
        if (id >= nodes_.size()) throw TapeError("op input refers to a node not on this tape");
        needs = needs || nodes_[id].requires_grad;
    }
    Node node{std::move(value), std::move(inputs), {}, std::nullopt, needs, false};
    if (needs) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id)
{
    auto& node = nodes_.at(id);
    if (!node.grad) node.grad.emplace(node.value.shape(), 0.0);
    return *node.grad;
}

Gradients Tape::backward(Var loss)
{
    check_open();
    if (&loss.tape() != this) throw TapeError("loss was recorded on a different tape");
    if (value(loss.id()).size() != 1) {
        throw TapeError("backward() needs a scalar loss, got shape " + to_string(value(loss.id()).shape()));
    }
    consumed_ = true;

    grad(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        auto& node = nodes_[i];
        if (!node.grad || !node.backward) continue;
        node.backward(*this, i);
    }

    Gradients out;
    out.by_id_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        auto& node = nodes_[i];
        if (!(node.leaf && node.requires_grad)) continue;
        if (node.grad) {
            out.by_id_[i] = std::move(*node.grad);
        } else {
            out.by_id_[i].emplace(node.value.shape(), 0.0);
        }
    }
    return out;
}

Tape& common_tape(std::initializer_list<Var> vars)
{
    Tape* tape = nullptr;
    for (const auto& v : vars) {
        Tape& t = v.tape();
        if (tape == nullptr) {
            tape = &t;
        } else if (tape != &t) {
            throw TapeError("operands belong to different tapes");
        }
    }
    if (tape == nullptr) throw TapeError("no operands");
    return *tape;
}

}  // namespace asrser::nk
