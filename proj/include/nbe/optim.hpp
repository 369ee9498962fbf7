#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "nbe/error.hpp"
#include "nbe/tensor.hpp"

namespace nbe {

struct AdamOptions {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0; ///< L2 term added to the gradient
};

/// Adam with bias correction. Moment state lives here, one slot per
/// parameter in registration order.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamOptions opts = {}) : params_(std::move(params)), opts_(opts) {
        for (const auto& p : params_) {
            m_.emplace_back(p.numel(), 0.0);
            v_.emplace_back(p.numel(), 0.0);
        }
    }

    AdamOptions& options() noexcept { return opts_; }
    std::size_t steps() const noexcept { return t_; }

    /// Applies one update and zeroes the gradients. Every parameter must
    /// have received a gradient since the last step.
    void step() {
        for (std::size_t k = 0; k < params_.size(); ++k) {
            if (!params_[k].has_grad()) {
                throw ConfigError("parameter '" + params_[k].name() + "' (#" + std::to_string(k) +
                                  ") has no gradient");
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            auto w = p.mutable_values();
            auto g = p.mutable_grad();
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = g[i] + opts_.weight_decay * w[i];
                m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * gi;
                v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                w[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
            }
            p.zero_grad();
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

private:
    std::vector<Tensor> params_;
    AdamOptions opts_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

/// Glorot/Xavier uniform init: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng, std::string name = {}) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    std::vector<double> w(fan_in * fan_out);
    for (double& x : w) x = dist(rng);
    Tensor t = Tensor::from({fan_in, fan_out}, std::move(w));
    t.set_requires_grad().set_name(std::move(name));
    return t;
}

} // namespace nbe
