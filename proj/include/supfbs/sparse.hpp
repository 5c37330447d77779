// Compressed sparse row storage for the system matrix.
#pragma once

#include "linalg.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace supfbs {

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Immutable CSR matrix. Adjoint products traverse the rows and scatter, so the
/// transpose is never stored. All products are serial and bit-deterministic.
class SparseOperator {
public:
    SparseOperator() = default;

    SparseOperator(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
                   std::vector<Index> col_indices, std::vector<double> values)
        : rows_(n_rows), cols_(n_cols), offsets_(std::move(row_offsets)),
          cols_idx_(std::move(col_indices)), values_(std::move(values))
    {
        validate();
    }

    /// Duplicates are summed and explicit zeros dropped.
    static SparseOperator from_triplets(Index n_rows, Index n_cols, std::vector<Triplet> entries)
    {
        for (const auto& t : entries) {
            require(t.row >= 0 && t.row < n_rows && t.col >= 0 && t.col < n_cols,
                    "triplet index out of range");
        }
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        std::vector<Index> offsets(static_cast<std::size_t>(n_rows) + 1, 0);
        std::vector<Index> cols;
        std::vector<double> vals;
        cols.reserve(entries.size());
        vals.reserve(entries.size());
        std::size_t i = 0;
        Index row = 0;
        while (i < entries.size()) {
            const Index r = entries[i].row;
            const Index c = entries[i].col;
            double v = 0.0;
            while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
                v += entries[i].value;
                ++i;
            }
            while (row < r) {
                offsets[static_cast<std::size_t>(++row)] = static_cast<Index>(cols.size());
            }
            if (v != 0.0) {
                cols.push_back(c);
                vals.push_back(v);
            }
        }
        while (row < n_rows) {
            offsets[static_cast<std::size_t>(++row)] = static_cast<Index>(cols.size());
        }
        return SparseOperator(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
    }

    static SparseOperator from_dense(const Matrix& m)
    {
        std::vector<Triplet> t;
        for (Index r = 0; r < m.rows(); ++r) {
            for (Index c = 0; c < m.cols(); ++c) {
                if (m(r, c) != 0.0) {
                    t.push_back({r, c, m(r, c)});
                }
            }
        }
        return from_triplets(m.rows(), m.cols(), std::move(t));
    }

    static SparseOperator identity(Index n)
    {
        std::vector<Triplet> t;
        for (Index i = 0; i < n; ++i) {
            t.push_back({i, i, 1.0});
        }
        return from_triplets(n, n, std::move(t));
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    const std::vector<Index>& row_offsets() const { return offsets_; }
    const std::vector<Index>& col_indices() const { return cols_idx_; }
    const std::vector<double>& values() const { return values_; }

    /// y = A x
    Vector matvec(const Vector& x) const
    {
        require(x.size() == cols_, "matvec: x has length " + std::to_string(x.size()) +
                                       ", expected " + std::to_string(cols_));
        Vector y(rows_);
        for (Index r = 0; r < rows_; ++r) {
            double acc = 0.0;
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                acc += values_[k] * x[cols_idx_[k]];
            }
            y[r] = acc;
        }
        return y;
    }

    /// x = A^T y
    Vector rmatvec(const Vector& y) const
    {
        require(y.size() == rows_, "rmatvec: y has length " + std::to_string(y.size()) +
                                       ", expected " + std::to_string(rows_));
        Vector x = Vector::Zero(cols_);
        for (Index r = 0; r < rows_; ++r) {
            const double yr = y[r];
            if (yr == 0.0) {
                continue;
            }
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                x[cols_idx_[k]] += values_[k] * yr;
            }
        }
        return x;
    }

    Vector apply(const Vector& x) const { return matvec(x); }
    Vector apply_adjoint(const Vector& y) const { return rmatvec(y); }

    Matrix to_dense() const
    {
        Matrix m = Matrix::Zero(rows_, cols_);
        for (Index r = 0; r < rows_; ++r) {
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                m(r, cols_idx_[k]) = values_[k];
            }
        }
        return m;
    }

    /// Dense m x m Gram matrix A A^T, built through a column-wise index so the
    /// cost is sum over columns of nnz(col)^2.
    Matrix gram_rows() const
    {
        std::vector<Index> col_count(static_cast<std::size_t>(cols_) + 1, 0);
        for (Index c : cols_idx_) {
            ++col_count[static_cast<std::size_t>(c) + 1];
        }
        for (std::size_t c = 1; c < col_count.size(); ++c) {
            col_count[c] += col_count[c - 1];
        }
        std::vector<Index> fill(col_count.begin(), col_count.end() - 1);
        std::vector<Index> by_col_row(values_.size());
        std::vector<double> by_col_val(values_.size());
        for (Index r = 0; r < rows_; ++r) {
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                const auto slot = static_cast<std::size_t>(fill[static_cast<std::size_t>(cols_idx_[k])]++);
                by_col_row[slot] = r;
                by_col_val[slot] = values_[k];
            }
        }
        Matrix g = Matrix::Zero(rows_, rows_);
        for (Index c = 0; c < cols_; ++c) {
            const Index lo = col_count[static_cast<std::size_t>(c)];
            const Index hi = col_count[static_cast<std::size_t>(c) + 1];
            for (Index a = lo; a < hi; ++a) {
                for (Index b = lo; b < hi; ++b) {
                    g(by_col_row[a], by_col_row[b]) += by_col_val[a] * by_col_val[b];
                }
            }
        }
        return g;
    }

    /// Same matrix with rows reordered: row i of the result is row perm[i] of this.
    SparseOperator permute_rows(const std::vector<Index>& perm) const
    {
        require(static_cast<Index>(perm.size()) == rows_, "permute_rows: bad permutation size");
        std::vector<Triplet> t;
        t.reserve(values_.size());
        for (Index i = 0; i < rows_; ++i) {
            const Index r = perm[static_cast<std::size_t>(i)];
            require(r >= 0 && r < rows_, "permute_rows: index out of range");
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                t.push_back({i, cols_idx_[k], values_[k]});
            }
        }
        return from_triplets(rows_, cols_, std::move(t));
    }

private:
    void validate() const
    {
        require(rows_ >= 0 && cols_ >= 0, "negative dimensions");
        require(static_cast<Index>(offsets_.size()) == rows_ + 1, "row_offsets must have n_rows+1 entries");
        require(offsets_.front() == 0, "row_offsets must start at 0");
        require(offsets_.back() == static_cast<Index>(cols_idx_.size()), "row_offsets end mismatch");
        require(cols_idx_.size() == values_.size(), "col_indices/values length mismatch");
        for (std::size_t r = 0; r + 1 < offsets_.size(); ++r) {
            require(offsets_[r] <= offsets_[r + 1], "row_offsets must be nondecreasing");
        }
        for (std::size_t k = 0; k < values_.size(); ++k) {
            require(cols_idx_[k] >= 0 && cols_idx_[k] < cols_, "column index out of range");
            require(values_[k] != 0.0, "explicit zero stored");
        }
    }

    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> offsets_{0};
    std::vector<Index> cols_idx_;
    std::vector<double> values_;
};

static_assert(LinearOperator<SparseOperator>);

// MatrixMarket coordinate real general, 1-based indices.

inline void write_matrix_market(std::ostream& os, const SparseOperator& a)
{
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.rows() << ' ' << a.cols() << ' ' << a.nonzeros() << '\n';
    os << std::setprecision(17);
    const auto& off = a.row_offsets();
    for (Index r = 0; r < a.rows(); ++r) {
        for (Index k = off[r]; k < off[r + 1]; ++k) {
            os << r + 1 << ' ' << a.col_indices()[k] + 1 << ' ' << a.values()[k] << '\n';
        }
    }
}

inline SparseOperator read_matrix_market(std::istream& is)
{
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "matrix market: empty input");
    require(line.rfind("%%MatrixMarket", 0) == 0, "matrix market: missing banner");
    {
        std::istringstream banner(line);
        std::string tag, object, format, field, symmetry;
        banner >> tag >> object >> format >> field >> symmetry;
        require(object == "matrix" && format == "coordinate", "matrix market: only coordinate matrices");
        require(field == "real" || field == "integer", "matrix market: only real fields");
        require(symmetry == "general", "matrix market: only general symmetry");
    }
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '%') {
            break;
        }
    }
    std::istringstream dims(line);
    long long m = 0, n = 0, nnz = 0;
    require(static_cast<bool>(dims >> m >> n >> nnz), "matrix market: bad size line");
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (long long k = 0; k < nnz; ++k) {
        long long r = 0, c = 0;
        double v = 0.0;
        require(static_cast<bool>(is >> r >> c >> v), "matrix market: truncated entries");
        t.push_back({static_cast<Index>(r - 1), static_cast<Index>(c - 1), v});
    }
    return SparseOperator::from_triplets(static_cast<Index>(m), static_cast<Index>(n), std::move(t));
}

inline void save_matrix_market(const std::string& path, const SparseOperator& a)
{
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    write_matrix_market(os, a);
}

inline SparseOperator load_matrix_market(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open " + path);
    }
    return read_matrix_market(is);
}

} // namespace supfbs
