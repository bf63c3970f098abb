// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Named trainable tensors. Modules register their tensors in a
// ParameterSet under a dotted prefix; a Binding exposes them on one tape
// and maps the resulting gradients back to names.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>

#include "asrser/numkernel/tape.hpp"
#include "asrser/numkernel/tensor.hpp"

namespace asrser::nk {

using GradientMap = std::map<std::string, Tensor>;

class ParameterSet {
public:
    /// Throws std::invalid_argument on duplicate names.
    void add(const std::string& name, Tensor value);
    /// Registers a tensor drawn uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    /// The stream is derived from (seed, name) so registration order does
    /// not matter.
    void add_uniform(const std::string& name, Shape shape, std::size_t fan_in, std::uint64_t seed);

    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    /// Total number of scalar parameters.
    std::size_t scalar_count() const;
    std::size_t size() const noexcept { return tensors_.size(); }
    bool all_finite() const;

    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }
    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::map<std::string, Tensor> tensors_;
};

class Binding {
public:
    Binding(Tape& tape, const ParameterSet& params) : tape_(&tape), params_(&params) {}

    /// Watched leaf for a parameter, created once per binding.
    Var operator()(const std::string& name);
    Tape& tape() const noexcept { return *tape_; }

    /// Runs backward on the tape and returns one gradient per parameter in
    /// the set (zeros for parameters that were never bound).
    GradientMap gradients(Var loss);

private:
    Tape* tape_;
    const ParameterSet* params_;
    std::unordered_map<std::string, Var> bound_;
};

}  // namespace asrser::nk
