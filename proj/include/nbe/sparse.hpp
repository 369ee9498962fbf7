#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

#include "nbe/error.hpp"

namespace nbe {

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Compressed sparse row matrix of doubles.
class SparseMatrix {
public:
    SparseMatrix() : row_ptr_(1, 0) {}

    /// Builds from unordered triplets; duplicates are summed, explicit zeros kept.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> t) {
        for (const auto& e : t) {
            if (e.row >= rows || e.col >= cols) throw IndexError("sparse triplet out of range");
        }
        std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        SparseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.row_ptr_.assign(rows + 1, 0);
        for (std::size_t i = 0; i < t.size();) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < t.size() && t[j].row == t[i].row && t[j].col == t[i].col) sum += t[j++].value;
            m.col_idx_.push_back(t[i].col);
            m.values_.push_back(sum);
            ++m.row_ptr_[t[i].row + 1];
            i = j;
        }
        for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    static SparseMatrix identity(std::size_t n, double value = 1.0) {
        std::vector<Triplet> t;
        t.reserve(n);
        for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, value});
        return from_triplets(n, n, std::move(t));
    }

    /// Block-diagonal stacking, used to batch several graphs.
    static SparseMatrix block_diagonal(std::span<const SparseMatrix* const> blocks) {
        SparseMatrix m;
        for (const auto* b : blocks) {
            m.rows_ += b->rows_;
            m.cols_ += b->cols_;
        }
        m.row_ptr_.reserve(m.rows_ + 1);
        std::size_t col_off = 0;
        for (const auto* b : blocks) {
            const std::size_t base = m.col_idx_.size();
            for (std::size_t r = 0; r < b->rows_; ++r) m.row_ptr_.push_back(base + b->row_ptr_[r + 1]);
            for (std::size_t c : b->col_idx_) m.col_idx_.push_back(c + col_off);
            m.values_.insert(m.values_.end(), b->values_.begin(), b->values_.end());
            col_off += b->cols_;
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_cols(std::size_t r) const {
        return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }

    double at(std::size_t r, std::size_t c) const {
        if (r >= rows_ || c >= cols_) throw IndexError("sparse index out of range");
        auto cols = row_cols(r);
        auto it = std::lower_bound(cols.begin(), cols.end(), c);
        if (it == cols.end() || *it != c) return 0.0;
        return values_[row_ptr_[r] + static_cast<std::size_t>(it - cols.begin())];
    }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> out;
        out.reserve(nnz());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, col_idx_[k], values_[k]});
        return out;
    }

    /// Row-major dense copy.
    std::vector<double> to_dense() const {
        std::vector<double> d(rows_ * cols_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d[r * cols_ + col_idx_[k]] = values_[k];
        return d;
    }

    bool operator==(const SparseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

} // namespace nbe
