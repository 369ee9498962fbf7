#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nbe/error.hpp"

namespace nbe {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

inline std::size_t shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

namespace detail {

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad; // empty until a gradient flows in
    bool requires_grad = false;
    std::string name;

    std::vector<double>& grad_buffer() {
        if (grad.empty()) grad.assign(values.size(), 0.0);
        return grad;
    }
};

} // namespace detail

/// Dense row-major tensor of doubles with a reverse-mode gradient slot.
///
/// Tensor is a shared handle: copies alias the same storage, which is what
/// lets parameters appear in several places on the tape.
class Tensor {
public:
    Tensor() : d_(std::make_shared<detail::TensorData>()) { d_->values.assign(1, 0.0); }

    static Tensor zeros(Shape shape) { return full(std::move(shape), 0.0); }

    static Tensor full(Shape shape, double value) {
        Tensor t;
        t.d_->values.assign(shape_numel(shape), value);
        t.d_->shape = std::move(shape);
        return t;
    }

    static Tensor from(Shape shape, std::vector<double> values) {
        if (shape_numel(shape) != values.size()) {
            throw DimensionError("tensor of shape " + shape_string(shape) + " given " + std::to_string(values.size()) +
                                 " values");
        }
        Tensor t;
        t.d_->shape = std::move(shape);
        t.d_->values = std::move(values);
        return t;
    }

    static Tensor scalar(double v) { return from({}, {v}); }

    /// Matrix from nested rows.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        std::vector<double> v;
        v.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("ragged matrix literal");
            v.insert(v.end(), row.begin(), row.end());
        }
        return from({r, c}, std::move(v));
    }

    Tensor& set_requires_grad(bool on = true) {
        d_->requires_grad = on;
        return *this;
    }
    bool requires_grad() const noexcept { return d_->requires_grad; }

    Tensor& set_name(std::string name) {
        d_->name = std::move(name);
        return *this;
    }
    const std::string& name() const noexcept { return d_->name; }

    const Shape& shape() const noexcept { return d_->shape; }
    std::size_t rank() const noexcept { return d_->shape.size(); }
    std::size_t numel() const noexcept { return d_->values.size(); }
    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }
    std::size_t dim(std::size_t axis) const {
        if (axis >= rank()) throw DimensionError("axis " + std::to_string(axis) + " of " + shape_string(shape()));
        return d_->shape[axis];
    }

    std::span<const double> values() const noexcept { return d_->values; }
    std::span<double> mutable_values() noexcept { return d_->values; }

    bool has_grad() const noexcept { return !d_->grad.empty(); }
    /// Gradient values; all zeros when no gradient has flowed in.
    std::vector<double> grad() const {
        return d_->grad.empty() ? std::vector<double>(numel(), 0.0) : d_->grad;
    }
    std::span<double> mutable_grad() { return d_->grad_buffer(); }
    void zero_grad() { d_->grad.clear(); }

    double item() const {
        if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
        return d_->values[0];
    }
    double at(std::size_t i) const { return d_->values.at(i); }
    double at(std::size_t r, std::size_t c) const { return d_->values.at(r * cols() + c); }

    /// Deep copy with no gradient and no tape history.
    Tensor detach() const { return from(shape(), d_->values); }

    const std::shared_ptr<detail::TensorData>& impl() const noexcept { return d_; }

    bool same_storage(const Tensor& other) const noexcept { return d_ == other.d_; }

private:
    std::shared_ptr<detail::TensorData> d_;
};

/// Per-thread record of executed operations, replayed in reverse by backward().
class Tape {
public:
    using Backward = std::function<void()>;

    static Tape& current() {
        thread_local Tape tape;
        return tape;
    }

    void record(Backward fn) { records_.push_back(std::move(fn)); }
    std::size_t size() const noexcept { return records_.size(); }
    void clear() { records_.clear(); }

    bool enabled() const noexcept { return enabled_; }
    void set_enabled(bool on) noexcept { enabled_ = on; }

    void run_backward() {
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
        records_.clear();
    }

private:
    std::vector<Backward> records_;
    bool enabled_ = true;
};

/// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
public:
    NoGradGuard() : prev_(Tape::current().enabled()) { Tape::current().set_enabled(false); }
    ~NoGradGuard() { Tape::current().set_enabled(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

namespace detail {

inline bool needs_grad(std::initializer_list<const Tensor*> inputs) {
    if (!Tape::current().enabled()) return false;
    for (const auto* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

inline void check_finite([[maybe_unused]] const Tensor& t) {
#ifndef NDEBUG
    for (double v : t.values()) assert(std::isfinite(v) && "non-finite value produced by forward op");
#endif
}

} // namespace detail

/// Populates gradients of every tensor reachable on this thread's tape from
/// the scalar `loss`, then clears the tape. Gradients accumulate.
inline void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw DimensionError("backward() needs a scalar, got " + shape_string(loss.shape()));
    if (!loss.requires_grad()) {
        Tape::current().clear();
        return;
    }
    loss.impl()->grad_buffer()[0] += 1.0;
    Tape::current().run_backward();
}

} // namespace nbe
