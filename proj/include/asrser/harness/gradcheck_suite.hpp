// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference checks over every differentiable operation: the
// numeric kernels, multihead attention, the seven fusion operators and the
// backbone with both losses.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace asrser::harness {

struct GradcheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t points = 0;
    double seconds = 0.0;
};

std::vector<GradcheckEntry> run_gradcheck_suite(std::size_t points = 10, std::uint64_t seed = 0);

}  // namespace asrser::harness
