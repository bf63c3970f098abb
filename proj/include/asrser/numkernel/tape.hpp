// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation. A Tape records every operation applied to
// its Vars in topological order (a node's inputs always have smaller ids);
// backward() walks it once in reverse. A tape is single-owner and
// single-threaded; independent tapes may be used concurrently.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "asrser/numkernel/tensor.hpp"

namespace asrser::nk {

class Tape;

/// Misuse of a tape: stale backward, non-scalar loss, mixing tapes.
class TapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Handle to a value recorded on a tape. Cheap to copy; valid as long as
/// the tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape& tape() const;
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }
    bool requires_grad() const;

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Gradients of one backward pass, one entry per watched leaf.
class Gradients {
public:
    /// Gradient of a watched leaf; zeros if the leaf did not reach the loss.
    const Tensor& of(Var leaf) const;

private:
    friend class Tape;
    std::vector<std::optional<Tensor>> by_id_;
};

class Tape {
public:
    /// Reads grad(self) and accumulates into grad(input) for inputs that
    /// require a gradient.
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf whose gradient is reported by backward().
    Var watch(Tensor value);

    /// Used by op implementations. `backward` is dropped when no input
    /// requires a gradient.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    /// Gradient buffer of a node, allocated as zeros on first access.
    Tensor& grad(std::size_t id);

    /// One-shot reverse pass seeded with d(loss)/d(loss) = 1.
    Gradients backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool consumed() const noexcept { return consumed_; }

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        std::optional<Tensor> grad;
        bool requires_grad = false;
        bool leaf = false;
    };

    void check_open() const;

    std::deque<Node> nodes_;  // stable references across push_back
    bool consumed_ = false;
};

/// Throws TapeError unless every Var is valid and shares one tape.
Tape& common_tape(std::initializer_list<Var> vars);

}  // namespace asrser::nk
