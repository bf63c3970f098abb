// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/numkernel/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace asrser::nk {

namespace {

double rel_error(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double finite_diff_check(const std::function<Var(Var)>& f, const Tensor& point, double eps)
{
    Tensor analytic;
    {
        Tape tape;
        Var x = tape.watch(point);
        Var y = f(x);
        analytic = tape.backward(y).of(x);
    }
    auto eval = [&](const Tensor& at) {
        Tape tape;
        return f(tape.constant(at)).value().item();
    };

    double worst = 0.0;
    Tensor probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double up = eval(probe);
        probe[i] = orig - eps;
        const double down = eval(probe);
        probe[i] = orig;
        worst = std::max(worst, rel_error(analytic[i], (up - down) / (2.0 * eps)));
    }
    return worst;
}

GradCheckReport finite_diff_check(const ParameterSet& params, const std::function<Var(Binding&)>& f, double eps)
{
    GradientMap analytic;
    {
        Tape tape;
        Binding bind(tape, params);
        Var y = f(bind);
        analytic = bind.gradients(y);
    }

    ParameterSet probe = params;
    auto eval = [&]() {
        Tape tape;
        Binding bind(tape, probe);
        return f(bind).value().item();
    };

    GradCheckReport report;
    for (const auto& [name, value] : params) {
        Tensor& slot = probe.at(name);
        const Tensor& grad = analytic.at(name);
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double orig = slot[i];
            slot[i] = orig + eps;
            const double up = eval();
            slot[i] = orig - eps;
            const double down = eval();
            slot[i] = orig;
            const double err = rel_error(grad[i], (up - down) / (2.0 * eps));
            ++report.coordinates;
            if (err > report.max_rel_error || report.worst_parameter.empty()) {
                report.max_rel_error = std::max(report.max_rel_error, err);
                report.worst_parameter = name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace asrser::nk
