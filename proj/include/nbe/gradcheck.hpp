#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "nbe/tensor.hpp"

namespace nbe {

/// Compares backward() gradients of a scalar function against central
/// differences (f(x + eps e_i) - f(x - eps e_i)) / 2eps and returns the
/// largest relative error |a - n| / max(1, |a|, |n|) over x's coordinates.
///
/// `f` must rebuild its graph from `x` on every call and be deterministic.
inline double finite_difference_check(const std::function<Tensor()>& f, Tensor& x, double eps = 1e-4) {
    const bool was_tracking = x.requires_grad();
    x.set_requires_grad(true);
    x.zero_grad();
    Tape::current().clear();
    Tensor loss = f();
    backward(loss);
    const std::vector<double> analytic = x.grad();
    x.zero_grad();
    x.set_requires_grad(was_tracking);

    NoGradGuard no_grad;
    auto values = x.mutable_values();
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double orig = values[i];
        values[i] = orig + eps;
        const double up = f().item();
        values[i] = orig - eps;
        const double down = f().item();
        values[i] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

} // namespace nbe
