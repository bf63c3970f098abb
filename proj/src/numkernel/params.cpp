// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/numkernel/params.hpp"

#include <cmath>
#include <stdexcept>

#include "asrser/numkernel/rng.hpp"

namespace asrser::nk {

void ParameterSet::add(const std::string& name, Tensor value)
{
    if (!tensors_.emplace(name, std::move(value)).second) {
        throw std::invalid_argument("parameter '" + name + "' registered twice");
    }
}

void ParameterSet::add_uniform(const std::string& name, Shape shape, std::size_t fan_in, std::uint64_t seed)
{
    CounterRng rng(seed, fnv1a64(name));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-bound, bound);
    add(name, std::move(t));
}

Tensor& ParameterSet::at(const std::string& name)
{
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParameterSet::at(const std::string& name) const
{
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParameterSet::scalar_count() const
{
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
}

bool ParameterSet::all_finite() const
{
    for (const auto& [_, t] : tensors_) {
        if (!t.all_finite()) return false;
    }
    return true;
}

Var Binding::operator()(const std::string& name)
{
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Var v = tape_->watch(params_->at(name));
    bound_.emplace(name, v);
    return v;
}

GradientMap Binding::gradients(Var loss)
{
    Gradients grads = tape_->backward(loss);
    GradientMap out;
    for (const auto& [name, value] : *params_) {
        auto it = bound_.find(name);
        if (it == bound_.end()) {
            out.emplace(name, Tensor(value.shape(), 0.0));
        } else {
            out.emplace(name, grads.of(it->second));
        }
    }
    return out;
}

}  // namespace asrser::nk
