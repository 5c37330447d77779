// Discrete gradient on an M x N grid, anisotropic total variation and its smooth
// approximation R_tau.
//
// Images are stored row-major, pixel (i, j) at index i*N + j. The first block of
// the gradient differentiates along rows (i -> i+1), the second along columns
// (j -> j+1). Forward differences; the trailing row / column difference is zero.
#pragma once

#include "linalg.hpp"

#include <cmath>

namespace supfbs {

struct GridShape {
    Index rows = 0; ///< M
    Index cols = 0; ///< N

    Index size() const { return rows * cols; }

    void validate() const { require(rows >= 2 && cols >= 2, "GridShape: both sides must be >= 2"); }
};

struct SmoothedTVParams {
    double tau = 0.01;   ///< smoothing parameter, 0 < tau <= 1 by convention
    double lambda = 0.0; ///< regularization weight
};

/// (D1 x; D2 x), length 2n.
inline Vector grad_apply(const GridShape& g, const Vector& x)
{
    g.validate();
    require(x.size() == g.size(), "grad_apply: length mismatch");
    const Index m = g.rows, n = g.cols, sz = g.size();
    Vector d = Vector::Zero(2 * sz);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            const Index p = i * n + j;
            if (i + 1 < m) {
                d[p] = x[p + n] - x[p];
            }
            if (j + 1 < n) {
                d[sz + p] = x[p + 1] - x[p];
            }
        }
    }
    return d;
}

/// D^T y, the negative discrete divergence.
inline Vector grad_adjoint(const GridShape& g, const Vector& y)
{
    g.validate();
    require(y.size() == 2 * g.size(), "grad_adjoint: length mismatch");
    const Index m = g.rows, n = g.cols, sz = g.size();
    Vector x = Vector::Zero(sz);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            const Index p = i * n + j;
            if (i + 1 < m) {
                x[p + n] += y[p];
                x[p] -= y[p];
            }
            if (j + 1 < n) {
                x[p + 1] += y[sz + p];
                x[p] -= y[sz + p];
            }
        }
    }
    return x;
}

/// R(x) = ||D x||_1.
inline double tv_value(const GridShape& g, const Vector& x)
{
    return grad_apply(g, x).lpNorm<1>();
}

/// R_tau(x) = sum_i sqrt(tau^2 + (Dx)_i^2) over both difference blocks.
inline double tv_smooth(const GridShape& g, const SmoothedTVParams& p, const Vector& x)
{
    const Vector d = grad_apply(g, x);
    const double t2 = p.tau * p.tau;
    return (d.array().square() + t2).sqrt().sum();
}

/// grad R_tau(x) = D^T s(Dx), s(d) = d / sqrt(tau^2 + d^2).
inline Vector tv_smooth_grad(const GridShape& g, const SmoothedTVParams& p, const Vector& x)
{
    const Vector d = grad_apply(g, x);
    const double t2 = p.tau * p.tau;
    const Vector s = (d.array() / (d.array().square() + t2).sqrt()).matrix();
    return grad_adjoint(g, s);
}

/// Value and gradient in one pass over D x.
inline double tv_smooth_with_grad(const GridShape& g, const SmoothedTVParams& p, const Vector& x,
                                  Vector& grad)
{
    const Vector d = grad_apply(g, x);
    const double t2 = p.tau * p.tau;
    const Eigen::ArrayXd root = (d.array().square() + t2).sqrt();
    grad = grad_adjoint(g, (d.array() / root).matrix());
    return root.sum();
}

/// Upper bound on the Lipschitz constant of grad R_tau: ||D||_2^2 / tau <= 8 / tau.
/// Pass `d_norm_sq` (e.g. a power-iteration estimate of ||D||_2^2) for the tighter value.
inline double lipschitz_bound(const SmoothedTVParams& p, double d_norm_sq = 8.0)
{
    require(p.tau > 0.0, "lipschitz_bound: tau must be positive");
    return d_norm_sq / p.tau;
}

/// Global bound M on ||grad R_tau||: sum of the Euclidean norms of the rows of D.
/// Each nonzero row is (-1, +1) with norm sqrt(2); trailing rows vanish.
inline double tv_gradient_bound(const GridShape& g)
{
    g.validate();
    const double nonzero_rows =
        static_cast<double>((g.rows - 1) * g.cols) + static_cast<double>(g.rows * (g.cols - 1));
    return nonzero_rows * std::sqrt(2.0);
}

/// The discrete gradient as an operator, so that spectral_norm_sq applies to it.
class GradientOperator {
public:
    explicit GradientOperator(GridShape g) : g_(g) { g_.validate(); }
    Index rows() const { return 2 * g_.size(); }
    Index cols() const { return g_.size(); }
    Vector apply(const Vector& x) const { return grad_apply(g_, x); }
    Vector apply_adjoint(const Vector& y) const { return grad_adjoint(g_, y); }

private:
    GridShape g_;
};

} // namespace supfbs
