// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major double tensor. Shapes are checked eagerly; every
// constructor enforces size(data) == product(shape).

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asrser::nk {

using Shape = std::vector<std::size_t>;

/// Raised on any shape or axis contract violation. The message names the
/// shapes involved.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

class Tensor {
public:
    /// A single zero, shape [1].
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Row-major 2-D access; no bounds check beyond debug asserts.
    double& at(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }
    double at(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }

    /// Scalar value of a one-element tensor.
    double item() const;

    bool all_finite() const noexcept;
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

}  // namespace asrser::nk
