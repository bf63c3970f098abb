// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient checker. The reported error for one
// coordinate is |analytic - numeric| / max(1, |numeric|); a check returns
// the maximum over all coordinates.

#pragma once

#include <functional>
#include <string>

#include "asrser/numkernel/params.hpp"
#include "asrser/numkernel/tape.hpp"

namespace asrser::nk {

inline constexpr double kDefaultFiniteDiffStep = 1e-5;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    std::size_t coordinates = 0;
};

/// `f` maps the watched input to a scalar Var on the same tape.
double finite_diff_check(const std::function<Var(Var)>& f, const Tensor& point, double eps = kDefaultFiniteDiffStep);

/// Checks every coordinate of every tensor in `params`.
GradCheckReport finite_diff_check(const ParameterSet& params, const std::function<Var(Binding&)>& f,
                                  double eps = kDefaultFiniteDiffStep);

}  // namespace asrser::nk
