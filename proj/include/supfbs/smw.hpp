// Exact solves with the shifted normal matrix through the Sherman-Morrison-Woodbury
// identity, reducing every n x n solve to an m x m Cholesky solve (m < n).
#pragma once

#include "linalg.hpp"
#include "sparse.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <memory>
#include <mutex>
#include <utility>

namespace supfbs {

namespace detail {

inline double round_significant(double v, int digits = 12)
{
    if (v == 0.0 || !std::isfinite(v)) {
        return v;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
    return std::strtod(buf, nullptr);
}

} // namespace detail

/// Holds A A^T for a fixed system matrix and solves
///     (s I_n + t A^T A) z = r,   s, t > 0,
/// as z = (r - t A^T (s I_m + t A A^T)^{-1} A r) / s.
/// Factorizations are cached by (s, t) rounded to 12 significant digits; the
/// cache is bounded and guarded by a mutex, so one solver may serve several runs.
class WoodburySolver {
public:
    explicit WoodburySolver(const SparseOperator& a, std::size_t cache_capacity = 4)
        : gram_(a.gram_rows()), rows_(a.rows()), cols_(a.cols()), capacity_(cache_capacity)
    {
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    const Matrix& gram() const { return gram_; }

    /// (s I + t A^T A)^{-1} r. The two products go through `op`, so a counting
    /// wrapper sees them.
    template <LinearOperator Op>
    Vector solve(const Op& op, double s, double t, const Vector& r) const
    {
        require(s > 0.0 && t > 0.0, "WoodburySolver::solve requires s, t > 0");
        require(r.size() == cols_, "WoodburySolver::solve: rhs length mismatch");
        const auto llt = factor(s, t);
        Vector w = llt->solve(op.apply(r));
        return (r - t * op.apply_adjoint(w)) / s;
    }

    /// (I + tau_l B_alpha)^{-1} rhs with B_alpha = A^T A + I/alpha.
    template <LinearOperator Op>
    Vector shifted_solve(const Op& op, double alpha, double tau_l, const Vector& rhs) const
    {
        require(alpha > 0.0 && tau_l > 0.0, "shifted_solve requires alpha, tau_l > 0");
        return solve(op, 1.0 + tau_l / alpha, tau_l, rhs);
    }

    /// B_alpha^{-1} v = alpha (I + alpha A^T A)^{-1} v.
    template <LinearOperator Op>
    Vector inverse_b(const Op& op, double alpha, const Vector& v) const
    {
        return alpha * solve(op, 1.0, alpha, v);
    }

    std::size_t cached_factorizations() const
    {
        std::lock_guard lock(mutex_);
        return cache_.size();
    }

private:
    using Factor = Eigen::LLT<Matrix>;

    std::shared_ptr<const Factor> factor(double s, double t) const
    {
        const auto key = std::make_pair(detail::round_significant(s), detail::round_significant(t));
        {
            std::lock_guard lock(mutex_);
            for (const auto& [k, f] : cache_) {
                if (k == key) {
                    return f;
                }
            }
        }
        Matrix m = t * gram_;
        m.diagonal().array() += s;
        auto f = std::make_shared<const Factor>(m);
        if (f->info() != Eigen::Success) {
            throw NumericalError("WoodburySolver: Cholesky factorization of s I + t A A^T failed");
        }
        std::lock_guard lock(mutex_);
        cache_.emplace_front(key, f);
        while (cache_.size() > capacity_) {
            cache_.pop_back();
        }
        return f;
    }

    Matrix gram_;
    Index rows_;
    Index cols_;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    mutable std::deque<std::pair<std::pair<double, double>, std::shared_ptr<const Factor>>> cache_;
};

/// Dense reference for the unconstrained least-squares prox
///     (I + alpha A^T A)^{-1} (x + alpha A^T b).
/// Test oracle only; refuses n > 4096.
inline Vector dense_prox_ls_oracle(const Matrix& a, const Vector& b, double alpha, const Vector& x)
{
    require(a.cols() <= 4096, "dense_prox_ls_oracle: n exceeds 4096");
    require(alpha > 0.0, "dense_prox_ls_oracle: alpha must be positive");
    Matrix m = alpha * (a.transpose() * a);
    m.diagonal().array() += 1.0;
    return m.llt().solve(x + alpha * a.transpose() * b);
}

} // namespace supfbs
