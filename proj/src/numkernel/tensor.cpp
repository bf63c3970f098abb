// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/numkernel/tensor.hpp"

#include <cmath>
#include <numeric>

namespace asrser::nk {

std::string to_string(const Shape& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t element_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void validate_shape(const Shape& shape)
{
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor shape " + to_string(shape) + " has a zero dimension");
    }
}

}  // namespace

Tensor::Tensor() : shape_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape))
{
    validate_shape(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    validate_shape(shape_);
    if (data_.size() != element_count(shape_)) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             to_string(shape_));
    }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values) { return Tensor({values.size()}, std::vector<double>(values)); }

Tensor Tensor::vector(std::vector<double> values)
{
    auto n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    if (rows.size() == 0) throw DimensionError("matrix literal needs at least one row");
    std::size_t cols = rows.begin()->size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& row : rows) {
        if (row.size() != cols) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({rows.size(), cols}, std::move(data));
}

Tensor Tensor::identity(std::size_t n)
{
    Tensor eye({n, n});
    for (std::size_t i = 0; i < n; ++i) eye.at(i, i) = 1.0;
    return eye;
}

std::size_t Tensor::dim(std::size_t axis) const
{
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
    }
    return shape_[axis];
}

double Tensor::item() const
{
    if (data_.size() != 1) throw DimensionError("item() on non-scalar tensor of shape " + to_string(shape_));
    return data_[0];
}

bool Tensor::all_finite() const noexcept
{
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::reshaped(Shape shape) const
{
    if (element_count(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

}  // namespace asrser::nk
