#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nbe/error.hpp"
#include "nbe/ops.hpp"
#include "nbe/tensor.hpp"

namespace nbe {

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// Mean over rows of -log softmax(logits)[label], max-subtracted.
inline Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw DimensionError("softmax_cross_entropy expects [n x c] logits");
    const std::size_t n = logits.rows(), c = logits.cols();
    if (c < 2) throw ConfigError("softmax_cross_entropy needs at least 2 classes, got " + std::to_string(c));
    if (labels.size() != n) {
        throw DimensionError(std::to_string(labels.size()) + " labels for " + shape_string(logits.shape()) + " logits");
    }
    if (n == 0) throw DimensionError("softmax_cross_entropy of empty batch");
    std::vector<double> probs(n * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
            throw IndexError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(c) + ")");
        }
        const double* row = logits.values().data() + i * c;
        const double mx = *std::max_element(row, row + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        const double logz = std::log(z) + mx;
        for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - logz);
        loss += logz - row[labels[i]];
    }
    loss /= static_cast<double>(n);
    const bool track = detail::needs_grad({&logits});
    Tensor result = detail::make_output({}, {loss}, track);
    if (track) {
        Tape::current().record([L = logits.impl(), C = result.impl(), probs = std::move(probs), labels, n, c] {
            if (C->grad.empty()) return;
            auto& g = L->grad_buffer();
            const double scale = C->grad[0] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    const double onehot = static_cast<int>(j) == labels[i] ? 1.0 : 0.0;
                    g[i * c + j] += scale * (probs[i * c + j] - onehot);
                }
        });
    }
    return result;
}

/// Mean of pos_weight * t * softplus(-x) + (1 - t) * softplus(x).
inline Tensor binary_cross_entropy_with_logits(const Tensor& logits, const Tensor& targets, double pos_weight = 1.0) {
    if (logits.shape() != targets.shape()) {
        throw DimensionError("bce shape mismatch: " + shape_string(logits.shape()) + " vs " +
                             shape_string(targets.shape()));
    }
    const std::size_t n = logits.numel();
    if (n == 0) throw DimensionError("bce of empty tensor");
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = logits.values()[i], t = targets.values()[i];
        loss += pos_weight * t * softplus(-x) + (1.0 - t) * softplus(x);
    }
    loss /= static_cast<double>(n);
    const bool track = detail::needs_grad({&logits});
    Tensor result = detail::make_output({}, {loss}, track);
    if (track) {
        Tape::current().record([X = logits.impl(), T = targets.impl(), C = result.impl(), pos_weight, n] {
            if (C->grad.empty()) return;
            auto& g = X->grad_buffer();
            const double scale = C->grad[0] / static_cast<double>(n);
            auto sig = [](double v) {
                if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
                const double e = std::exp(v);
                return e / (1.0 + e);
            };
            for (std::size_t i = 0; i < n; ++i) {
                const double x = X->values[i], t = T->values[i];
                g[i] += scale * (-pos_weight * t * sig(-x) + (1.0 - t) * sig(x));
            }
        });
    }
    return result;
}

} // namespace nbe
