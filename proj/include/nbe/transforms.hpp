#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nbe/error.hpp"
#include "nbe/graph.hpp"
#include "nbe/sparse.hpp"

namespace nbe {

/// Dense square matrix of nonnegative integers (walk counts, self-loop weights).
class IntegerMatrix {
public:
    IntegerMatrix() = default;
    explicit IntegerMatrix(std::size_t n) : n_(n), data_(n * n, 0) {}
    IntegerMatrix(std::size_t n, std::vector<std::int64_t> values) : n_(n), data_(std::move(values)) {
        if (data_.size() != n * n) throw DimensionError("integer matrix needs n*n values");
    }

    static IntegerMatrix from(const BinaryAdjacency& a) {
        IntegerMatrix m(a.size());
        for (auto [i, j] : a.entries()) m(i, j) = 1;
        return m;
    }

    std::size_t size() const noexcept { return n_; }
    std::int64_t& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    std::int64_t operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    const std::vector<std::int64_t>& values() const noexcept { return data_; }

    bool operator==(const IntegerMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::int64_t> data_;
};

/// Symmetric nonnegative real matrix D^{-1/2}(M + cI)D^{-1/2}, stored sparse.
class NormalizedAdjacency {
public:
    NormalizedAdjacency() : m_(std::make_shared<const SparseMatrix>()) {}
    explicit NormalizedAdjacency(SparseMatrix m) : m_(std::make_shared<const SparseMatrix>(std::move(m))) {}

    std::size_t size() const noexcept { return m_->rows(); }
    double at(std::size_t i, std::size_t j) const { return m_->at(i, j); }
    const SparseMatrix& matrix() const noexcept { return *m_; }
    std::shared_ptr<const SparseMatrix> shared() const noexcept { return m_; }
    std::vector<double> to_dense() const { return m_->to_dense(); }

private:
    std::shared_ptr<const SparseMatrix> m_;
};

/// Positions at shortest-path distance exactly `k` (k=1: A1, k=2: A2).
inline BinaryAdjacency exact_distance_neighborhood(const Graph& g, std::size_t k) {
    if (k == 0) throw ConfigError("neighborhood distance must be >= 1");
    const auto nbrs = g.neighbor_lists();
    std::vector<std::vector<std::size_t>> rows(g.num_nodes());
    for (std::size_t s = 0; s < g.num_nodes(); ++s) {
        const auto dist = bfs_distances(nbrs, s, k);
        for (std::size_t v = 0; v < dist.size(); ++v) {
            if (dist[v] && *dist[v] == k) rows[s].push_back(v);
        }
    }
    return BinaryAdjacency::from_rows(std::move(rows));
}

/// A1 + A2: neighbors at distance one or two. The two entry sets are
/// disjoint, so the sum stays binary.
inline BinaryAdjacency enlarge(const Graph& g) { return adjacency(g) | exact_distance_neighborhood(g, 2); }

/// Exact integer power A^p.
inline IntegerMatrix matrix_power(const BinaryAdjacency& a, unsigned p) {
    if (p == 0) throw ConfigError("matrix_power requires p >= 1; use add_scaled_identity for I");
    const std::size_t n = a.size();
    IntegerMatrix result = IntegerMatrix::from(a);
    for (unsigned step = 1; step < p; ++step) {
        // result * A, using A's sparse rows: (R A)_{ij} = sum_k R_ik A_kj.
        IntegerMatrix next(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const std::int64_t r = result(i, k);
                if (r == 0) continue;
                for (std::size_t j : a.row(k)) next(i, j) += r;
            }
        result = std::move(next);
    }
    return result;
}

inline IntegerMatrix add_scaled_identity(IntegerMatrix m, std::int64_t c) {
    if (c < 0) throw ConfigError("self-loop weight must be nonnegative");
    for (std::size_t i = 0; i < m.size(); ++i) m(i, i) += c;
    return m;
}

inline IntegerMatrix add_scaled_identity(const BinaryAdjacency& a, std::int64_t c) {
    return add_scaled_identity(IntegerMatrix::from(a), c);
}

inline IntegerMatrix zero_diagonal(IntegerMatrix m) {
    for (std::size_t i = 0; i < m.size(); ++i) m(i, i) = 0;
    return m;
}

namespace detail {

inline SparseMatrix to_sparse(const BinaryAdjacency& a) {
    std::vector<Triplet> t;
    t.reserve(a.nnz());
    for (auto [i, j] : a.entries()) t.push_back({i, j, 1.0});
    return SparseMatrix::from_triplets(a.size(), a.size(), std::move(t));
}

inline SparseMatrix to_sparse(const IntegerMatrix& m) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (m(i, j) < 0) {
                throw ConfigError("negative entry " + std::to_string(m(i, j)) + " at (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ")");
            }
            if (m(i, j) != 0) t.push_back({i, j, static_cast<double>(m(i, j))});
        }
    return SparseMatrix::from_triplets(m.size(), m.size(), std::move(t));
}

/// Off-diagonal part of A^2 computed sparsely (walks of length two).
inline SparseMatrix square_offdiag(const BinaryAdjacency& a) {
    std::vector<Triplet> t;
    std::vector<std::int64_t> acc(a.size(), 0);
    std::vector<std::size_t> touched;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t k : a.row(i))
            for (std::size_t j : a.row(k)) {
                if (j == i) continue;
                if (acc[j]++ == 0) touched.push_back(j);
            }
        for (std::size_t j : touched) {
            t.push_back({i, j, static_cast<double>(acc[j])});
            acc[j] = 0;
        }
        touched.clear();
    }
    return SparseMatrix::from_triplets(a.size(), a.size(), std::move(t));
}

inline std::vector<double> row_sums(const SparseMatrix& m, double self_loop) {
    std::vector<double> d(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = self_loop;
        for (double v : m.row_values(i)) s += v;
        d[i] = s;
    }
    return d;
}

/// D^{-1/2}(M + cI)D^{-1/2} with caller-provided degrees. Rows or columns
/// with zero degree come out as zeros.
inline NormalizedAdjacency normalize_with_degrees(const SparseMatrix& m, double c, const std::vector<double>& degree) {
    std::vector<Triplet> t;
    t.reserve(m.nnz() + m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto cols = m.row_cols(i);
        auto vals = m.row_values(i);
        bool has_diag = false;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (vals[k] < 0.0) throw ConfigError("negative entry in matrix to normalize");
            const std::size_t j = cols[k];
            has_diag = has_diag || i == j;
            const double v = vals[k] + (i == j ? c : 0.0);
            const double denom = degree[i] * degree[j];
            t.push_back({i, j, denom > 0.0 ? v / std::sqrt(denom) : 0.0});
        }
        if (c != 0.0 && !has_diag) {
            t.push_back({i, i, degree[i] > 0.0 ? c / degree[i] : 0.0});
        }
    }
    return NormalizedAdjacency(SparseMatrix::from_triplets(m.rows(), m.cols(), std::move(t)));
}

} // namespace detail

/// Symmetric normalization D^{-1/2}(M + cI)D^{-1/2} with D the row sums of M + cI.
inline NormalizedAdjacency sym_normalize(const SparseMatrix& m, double self_loop_weight) {
    if (self_loop_weight < 0.0) throw ConfigError("self-loop weight must be nonnegative");
    if (m.rows() != m.cols()) throw DimensionError("sym_normalize needs a square matrix");
    return detail::normalize_with_degrees(m, self_loop_weight, detail::row_sums(m, self_loop_weight));
}

inline NormalizedAdjacency sym_normalize(const BinaryAdjacency& a, double self_loop_weight) {
    return sym_normalize(detail::to_sparse(a), self_loop_weight);
}

inline NormalizedAdjacency sym_normalize(const IntegerMatrix& m, double self_loop_weight) {
    return sym_normalize(detail::to_sparse(m), self_loop_weight);
}

/// Adjacency transforms selectable by stable lowercase id.
enum class TransformId { A1, A1PlusA2, ASquared, ASquaredPlus2I };

/// Which matrix supplies the degree normalizer D.
enum class DegreeSource {
    Operand, ///< row sums of the matrix being normalized
    A1,      ///< row sums of A1 + cI regardless of the transform
};

inline constexpr std::array<TransformId, 4> kAllTransforms = {TransformId::A1, TransformId::A1PlusA2,
                                                              TransformId::ASquared, TransformId::ASquaredPlus2I};

inline std::string_view to_string(TransformId id) {
    switch (id) {
    case TransformId::A1: return "a1";
    case TransformId::A1PlusA2: return "a1+a2";
    case TransformId::ASquared: return "a^2";
    case TransformId::ASquaredPlus2I: return "a^2+2i";
    }
    return "?";
}

inline TransformId parse_transform(std::string_view s) {
    for (auto id : kAllTransforms)
        if (to_string(id) == s) return id;
    throw ConfigError("unknown transform '" + std::string(s) + "'; valid ids: a1, a1+a2, a^2, a^2+2i");
}

inline std::string_view to_string(DegreeSource d) { return d == DegreeSource::Operand ? "operand" : "a1"; }

inline DegreeSource parse_degree_source(std::string_view s) {
    if (s == "operand") return DegreeSource::Operand;
    if (s == "a1") return DegreeSource::A1;
    throw ConfigError("unknown degree source '" + std::string(s) + "'; valid: operand, a1");
}

/// Unnormalized operand of a transform (without the self-loop term) and its
/// self-loop weight.
struct TransformOperand {
    SparseMatrix matrix;
    double self_loop = 0.0;
};

inline TransformOperand transform_operand(TransformId id, const Graph& g) {
    switch (id) {
    case TransformId::A1: return {detail::to_sparse(adjacency(g)), 1.0};
    case TransformId::A1PlusA2: return {detail::to_sparse(enlarge(g)), 1.0};
    // Walks returning home are dropped; self-connection comes only from cI.
    case TransformId::ASquared: return {detail::square_offdiag(adjacency(g)), 1.0};
    case TransformId::ASquaredPlus2I: return {detail::square_offdiag(adjacency(g)), 2.0};
    }
    throw ConfigError("unhandled transform");
}

/// Normalized propagation matrix for a GCN-style layer.
inline NormalizedAdjacency build_transform(TransformId id, const Graph& g,
                                           DegreeSource degrees = DegreeSource::Operand) {
    auto op = transform_operand(id, g);
    if (degrees == DegreeSource::Operand) return sym_normalize(op.matrix, op.self_loop);
    const auto a1 = detail::to_sparse(adjacency(g));
    return detail::normalize_with_degrees(op.matrix, op.self_loop, detail::row_sums(a1, op.self_loop));
}

inline NormalizedAdjacency build_transform(std::string_view name, const Graph& g,
                                           DegreeSource degrees = DegreeSource::Operand) {
    return build_transform(parse_transform(name), g, degrees);
}

/// Neighbor-sum operator for sum-aggregation layers: the transform operand
/// plus its extra self-loop weight beyond one (a^2+2i contributes 1 extra).
/// The binary transforms give plain 0/1 neighbor sets.
inline SparseMatrix neighbor_sum_operator(TransformId id, const Graph& g) {
    auto op = transform_operand(id, g);
    if (op.self_loop <= 1.0) return std::move(op.matrix);
    auto t = op.matrix.triplets();
    for (std::size_t i = 0; i < g.num_nodes(); ++i) t.push_back({i, i, op.self_loop - 1.0});
    return SparseMatrix::from_triplets(g.num_nodes(), g.num_nodes(), std::move(t));
}

} // namespace nbe
