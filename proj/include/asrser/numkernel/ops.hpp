// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operations. Each op exists in two forms: a plain Tensor
// function (pure, no tape) and a Var overload that records the op and its
// backward rule. There is no implicit broadcasting; the only mixed-shape
// products are scalar x tensor (`scale`) and the explicit bias add
// (`add_rowwise`).

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asrser/numkernel/tape.hpp"
#include "asrser/numkernel/tensor.hpp"

namespace asrser::nk {

// ---- plain tensor kernels -------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(double s, const Tensor& x);
Tensor add_rowwise(const Tensor& x, const Tensor& bias);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
/// Mean over the sequence (first) axis of a [seq, d] tensor.
Tensor mean_pool(const Tensor& x);
/// Flattened row-major outer product of [a; 1] and [t; 1].
Tensor outer_augmented(const Tensor& a, const Tensor& t);

// ---- recorded ops ----------------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(double s, Var x);
/// `s` must hold exactly one element.
Var scale(Var s, Var x);
/// x[m, n] + bias[n] on every row.
Var add_rowwise(Var x, Var bias);
Var relu(Var x);
Var sigmoid(Var x);
Var softmax(Var x, std::size_t axis);
Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
std::vector<Var> split(Var x, std::span<const std::size_t> sizes, std::size_t axis);
Var reshape(Var x, Shape shape);
Var mean_pool(Var x);
Var outer_augmented(Var a, Var t);
/// Sum of all elements, shape [1].
Var sum(Var x);
Var dot(Var a, Var b);

/// Mean softmax cross-entropy over rows of logits[B, K]; labels[b] < K.
Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);
/// (1/B) * sum over rows and columns of (pred - target)^2 for pred[B, m].
Var mse(Var pred, const Tensor& target);

}  // namespace asrser::nk
