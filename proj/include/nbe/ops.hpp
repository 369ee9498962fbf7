#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "nbe/error.hpp"
#include "nbe/sparse.hpp"
#include "nbe/tensor.hpp"

// Differentiable forward operations. Every op appends one backward closure to
// the thread's tape when any input requires a gradient.

namespace nbe {

namespace detail {

using DataPtr = std::shared_ptr<TensorData>;

inline Tensor make_output(Shape shape, std::vector<double> values, bool track) {
    Tensor out = Tensor::from(std::move(shape), std::move(values));
    out.set_requires_grad(track);
    check_finite(out);
    return out;
}

inline void require_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

inline void accumulate(const DataPtr& into, std::size_t i, double g) {
    if (into->requires_grad) into->grad_buffer()[i] += g;
}

} // namespace detail

/// Matrix product [n x k] * [k x m].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require_matrix(a, "matmul");
    detail::require_matrix(b, "matmul");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    if (b.rows() != k) {
        throw DimensionError("matmul shape mismatch: " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
    }
    std::vector<double> out(n * m, 0.0);
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            if (av == 0.0) continue;
            const double* brow = pb + p * m;
            for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
        }
    }
    const bool track = detail::needs_grad({&a, &b});
    Tensor result = detail::make_output({n, m}, std::move(out), track);
    if (track) {
        Tape::current().record([A = a.impl(), B = b.impl(), C = result.impl(), n, k, m] {
            if (C->grad.empty()) return;
            const double* g = C->grad.data();
            if (A->requires_grad) {
                auto& ga = A->grad_buffer();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * B->values[p * m + j];
                        ga[i * k + p] += s;
                    }
            }
            if (B->requires_grad) {
                auto& gb = B->grad_buffer();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = A->values[i * k + p];
                        if (av == 0.0) continue;
                        for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += av * g[i * m + j];
                    }
            }
        });
    }
    return result;
}

/// Sparse (constant) times dense: S [n x k] * X [k x m].
inline Tensor spmm(std::shared_ptr<const SparseMatrix> s, const Tensor& x) {
    detail::require_matrix(x, "spmm");
    if (s->cols() != x.rows()) {
        throw DimensionError("spmm shape mismatch: sparse [" + std::to_string(s->rows()) + "x" +
                             std::to_string(s->cols()) + "] * " + shape_string(x.shape()));
    }
    const std::size_t n = s->rows(), m = x.cols();
    std::vector<double> out(n * m, 0.0);
    const double* px = x.values().data();
    for (std::size_t i = 0; i < n; ++i) {
        auto cols = s->row_cols(i);
        auto vals = s->row_values(i);
        double* row = out.data() + i * m;
        for (std::size_t e = 0; e < cols.size(); ++e) {
            const double* xr = px + cols[e] * m;
            for (std::size_t j = 0; j < m; ++j) row[j] += vals[e] * xr[j];
        }
    }
    const bool track = detail::needs_grad({&x});
    Tensor result = detail::make_output({n, m}, std::move(out), track);
    if (track) {
        Tape::current().record([S = std::move(s), X = x.impl(), C = result.impl(), n, m] {
            if (C->grad.empty()) return;
            auto& gx = X->grad_buffer();
            for (std::size_t i = 0; i < n; ++i) {
                auto cols = S->row_cols(i);
                auto vals = S->row_values(i);
                const double* g = C->grad.data() + i * m;
                for (std::size_t e = 0; e < cols.size(); ++e) {
                    double* xr = gx.data() + cols[e] * m;
                    for (std::size_t j = 0; j < m; ++j) xr[j] += vals[e] * g[j];
                }
            }
        });
    }
    return result;
}

inline Tensor spmm(const SparseMatrix& s, const Tensor& x) { return spmm(std::make_shared<const SparseMatrix>(s), x); }

/// a + b. `b` may equal a's shape or be a row vector ([d] or [1 x d])
/// broadcast over a's leading dimension.
inline Tensor add(const Tensor& a, const Tensor& b) {
    const bool same = a.shape() == b.shape();
    const bool row_broadcast = a.rank() == 2 && !same &&
                               ((b.rank() == 1 && b.dim(0) == a.cols()) ||
                                (b.rank() == 2 && b.rows() == 1 && b.cols() == a.cols()));
    if (!same && !row_broadcast) {
        throw DimensionError("add shape mismatch: " + shape_string(a.shape()) + " + " + shape_string(b.shape()));
    }
    const std::size_t width = same ? a.numel() : b.numel();
    std::vector<double> out(a.values().begin(), a.values().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i % width];
    const bool track = detail::needs_grad({&a, &b});
    Tensor result = detail::make_output(a.shape(), std::move(out), track);
    if (track) {
        Tape::current().record([A = a.impl(), B = b.impl(), C = result.impl(), width] {
            if (C->grad.empty()) return;
            for (std::size_t i = 0; i < C->grad.size(); ++i) {
                detail::accumulate(A, i, C->grad[i]);
                detail::accumulate(B, i % width, C->grad[i]);
            }
        });
    }
    return result;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError("sub shape mismatch: " + shape_string(a.shape()) + " - " + shape_string(b.shape()));
    }
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    const bool track = detail::needs_grad({&a, &b});
    Tensor result = detail::make_output(a.shape(), std::move(out), track);
    if (track) {
        Tape::current().record([A = a.impl(), B = b.impl(), C = result.impl()] {
            if (C->grad.empty()) return;
            for (std::size_t i = 0; i < C->grad.size(); ++i) {
                detail::accumulate(A, i, C->grad[i]);
                detail::accumulate(B, i, -C->grad[i]);
            }
        });
    }
    return result;
}

inline Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError("elementwise_mul shape mismatch: " + shape_string(a.shape()) + " * " +
                             shape_string(b.shape()));
    }
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    const bool track = detail::needs_grad({&a, &b});
    Tensor result = detail::make_output(a.shape(), std::move(out), track);
    if (track) {
        Tape::current().record([A = a.impl(), B = b.impl(), C = result.impl()] {
            if (C->grad.empty()) return;
            for (std::size_t i = 0; i < C->grad.size(); ++i) {
                detail::accumulate(A, i, C->grad[i] * B->values[i]);
                detail::accumulate(B, i, C->grad[i] * A->values[i]);
            }
        });
    }
    return result;
}

namespace detail {

/// Shared implementation of pointwise unary ops; `deriv` maps (input, output)
/// to the local derivative.
template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x.values()[i]);
    const bool track = needs_grad({&x});
    Tensor result = make_output(x.shape(), std::move(out), track);
    if (track) {
        Tape::current().record([X = x.impl(), C = result.impl(), deriv] {
            if (C->grad.empty()) return;
            auto& gx = X->grad_buffer();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += C->grad[i] * deriv(X->values[i], C->values[i]);
        });
    }
    return result;
}

} // namespace detail

inline Tensor relu(const Tensor& x) {
    return detail::unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                         [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& x) {
    return detail::unary(
        x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

inline Tensor exp(const Tensor& x) {
    return detail::unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

inline Tensor scale(const Tensor& x, double c) {
    return detail::unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Tensor add_scalar(const Tensor& x, double c) {
    return detail::unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

/// Clamps into [lo, hi]; the gradient is zero where clamping is active.
inline Tensor clamp(const Tensor& x, double lo, double hi) {
    return detail::unary(x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
                         [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

/// x * s for a one-element tensor s (differentiable in both).
inline Tensor scale_by(const Tensor& x, const Tensor& s) {
    if (s.numel() != 1) throw DimensionError("scale_by needs a one-element scale, got " + shape_string(s.shape()));
    const double c = s.values()[0];
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * x.values()[i];
    const bool track = detail::needs_grad({&x, &s});
    Tensor result = detail::make_output(x.shape(), std::move(out), track);
    if (track) {
        Tape::current().record([X = x.impl(), S = s.impl(), C = result.impl()] {
            if (C->grad.empty()) return;
            const double c = S->values[0];
            double gs = 0.0;
            for (std::size_t i = 0; i < C->grad.size(); ++i) {
                detail::accumulate(X, i, C->grad[i] * c);
                gs += C->grad[i] * X->values[i];
            }
            detail::accumulate(S, 0, gs);
        });
    }
    return result;
}

/// Stacks matrices with equal column counts on top of each other.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows of nothing");
    const std::size_t m = parts.front().cols();
    std::size_t n = 0;
    bool track = false;
    for (const auto& p : parts) {
        detail::require_matrix(p, "concat_rows");
        if (p.cols() != m) {
            throw DimensionError("concat_rows column mismatch: " + shape_string(parts.front().shape()) + " vs " +
                                 shape_string(p.shape()));
        }
        n += p.rows();
        track = track || detail::needs_grad({&p});
    }
    std::vector<double> out;
    out.reserve(n * m);
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    Tensor result = detail::make_output({n, m}, std::move(out), track);
    if (track) {
        std::vector<detail::DataPtr> inputs;
        for (const auto& p : parts) inputs.push_back(p.impl());
        Tape::current().record([inputs = std::move(inputs), C = result.impl()] {
            if (C->grad.empty()) return;
            std::size_t offset = 0;
            for (const auto& in : inputs) {
                for (std::size_t i = 0; i < in->values.size(); ++i) detail::accumulate(in, i, C->grad[offset + i]);
                offset += in->values.size();
            }
        });
    }
    return result;
}

/// Sums rows of segment s into output row s. Ids need not be sorted.
inline Tensor segment_sum(const Tensor& x, const std::vector<std::size_t>& segment_ids, std::size_t num_segments) {
    detail::require_matrix(x, "segment_sum");
    if (segment_ids.size() != x.rows()) {
        throw DimensionError("segment_sum: " + std::to_string(segment_ids.size()) + " ids for " +
                             shape_string(x.shape()));
    }
    const std::size_t m = x.cols();
    std::vector<double> out(num_segments * m, 0.0);
    for (std::size_t r = 0; r < segment_ids.size(); ++r) {
        const std::size_t s = segment_ids[r];
        if (s >= num_segments) {
            throw IndexError("segment id " + std::to_string(s) + " >= " + std::to_string(num_segments) + " segments");
        }
        for (std::size_t j = 0; j < m; ++j) out[s * m + j] += x.values()[r * m + j];
    }
    const bool track = detail::needs_grad({&x});
    Tensor result = detail::make_output({num_segments, m}, std::move(out), track);
    if (track) {
        Tape::current().record([X = x.impl(), C = result.impl(), segment_ids, m] {
            if (C->grad.empty()) return;
            auto& gx = X->grad_buffer();
            for (std::size_t r = 0; r < segment_ids.size(); ++r)
                for (std::size_t j = 0; j < m; ++j) gx[r * m + j] += C->grad[segment_ids[r] * m + j];
        });
    }
    return result;
}

/// Per-segment mean; empty segments produce zero rows.
inline Tensor segment_mean(const Tensor& x, const std::vector<std::size_t>& segment_ids, std::size_t num_segments) {
    Tensor sums = segment_sum(x, segment_ids, num_segments);
    std::vector<double> counts(num_segments, 0.0);
    for (std::size_t s : segment_ids) counts[s] += 1.0;
    std::vector<double> inv(num_segments * x.cols());
    for (std::size_t s = 0; s < num_segments; ++s)
        for (std::size_t j = 0; j < x.cols(); ++j) inv[s * x.cols() + j] = counts[s] > 0 ? 1.0 / counts[s] : 0.0;
    return elementwise_mul(sums, Tensor::from({num_segments, x.cols()}, std::move(inv)));
}

/// Column sums over all rows: [n x d] -> [1 x d].
inline Tensor row_sum(const Tensor& x) {
    detail::require_matrix(x, "row_sum");
    return segment_sum(x, std::vector<std::size_t>(x.rows(), 0), 1);
}

inline Tensor row_mean(const Tensor& x) {
    detail::require_matrix(x, "row_mean");
    if (x.rows() == 0) throw DimensionError("row_mean of empty matrix");
    return scale(row_sum(x), 1.0 / static_cast<double>(x.rows()));
}

/// Sum of all entries as a scalar.
inline Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    const bool track = detail::needs_grad({&x});
    Tensor result = detail::make_output({}, {s}, track);
    if (track) {
        Tape::current().record([X = x.impl(), C = result.impl()] {
            if (C->grad.empty()) return;
            auto& gx = X->grad_buffer();
            for (double& g : gx) g += C->grad[0];
        });
    }
    return result;
}

inline Tensor mean(const Tensor& x) {
    if (x.numel() == 0) throw DimensionError("mean of empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

/// Selects rows by index (repeats allowed).
inline Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& index) {
    detail::require_matrix(x, "gather_rows");
    const std::size_t m = x.cols();
    std::vector<double> out;
    out.reserve(index.size() * m);
    for (std::size_t r : index) {
        if (r >= x.rows()) throw IndexError("gather_rows index " + std::to_string(r) + " >= " + std::to_string(x.rows()));
        out.insert(out.end(), x.values().begin() + static_cast<std::ptrdiff_t>(r * m),
                   x.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * m));
    }
    const bool track = detail::needs_grad({&x});
    Tensor result = detail::make_output({index.size(), m}, std::move(out), track);
    if (track) {
        Tape::current().record([X = x.impl(), C = result.impl(), index, m] {
            if (C->grad.empty()) return;
            auto& gx = X->grad_buffer();
            for (std::size_t k = 0; k < index.size(); ++k)
                for (std::size_t j = 0; j < m; ++j) gx[index[k] * m + j] += C->grad[k * m + j];
        });
    }
    return result;
}

/// Inner products of row pairs: out[k] = <Z[i_k], Z[j_k]>.
inline Tensor rows_dot(const Tensor& z, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    detail::require_matrix(z, "rows_dot");
    const std::size_t n = z.rows(), d = z.cols();
    std::vector<double> out(pairs.size(), 0.0);
    const double* pz = z.values().data();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        if (i >= n || j >= n) {
            throw IndexError("pair (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range for " +
                             std::to_string(n) + " rows");
        }
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += pz[i * d + c] * pz[j * d + c];
        out[k] = s;
    }
    const bool track = detail::needs_grad({&z});
    Tensor result = detail::make_output({pairs.size()}, std::move(out), track);
    if (track) {
        Tape::current().record([Z = z.impl(), C = result.impl(), pairs, d] {
            if (C->grad.empty()) return;
            auto& gz = Z->grad_buffer();
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const auto [i, j] = pairs[k];
                const double g = C->grad[k];
                for (std::size_t c = 0; c < d; ++c) {
                    gz[i * d + c] += g * Z->values[j * d + c];
                    gz[j * d + c] += g * Z->values[i * d + c];
                }
            }
        });
    }
    return result;
}

/// Inverted dropout: in training, zeroes entries with probability `rate`
/// and rescales survivors by 1/(1-rate). Identity otherwise.
inline Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
    if (!training || rate == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - rate);
    std::vector<double> mask(x.numel());
    for (double& m : mask) m = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
    return elementwise_mul(x, Tensor::from(x.shape(), std::move(mask)));
}

} // namespace nbe
