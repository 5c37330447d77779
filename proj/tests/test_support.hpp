// Shared fixtures and independent reference computations for the tests.
#pragma once

#include <supfbs/sparse.hpp>
#include <supfbs/tv.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace testsupport {

using supfbs::Index;
using supfbs::Matrix;
using supfbs::Vector;

inline Vector random_vector(Index n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v[i] = u(rng);
    }
    return v;
}

/// Dense matrix with roughly `density` nonzeros, values in [0, 1) or [-1, 1).
inline Matrix random_dense(Index m, Index n, std::mt19937_64& rng, double density = 0.5,
                           bool nonneg = false)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix a = Matrix::Zero(m, n);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (u(rng) < density) {
                a(i, j) = nonneg ? u(rng) : 2.0 * u(rng) - 1.0;
            }
        }
    }
    // keep every row nonzero so the instances have full row rank generically
    for (Index i = 0; i < m; ++i) {
        if (a.row(i).isZero()) {
            a(i, i % n) = 0.5;
        }
    }
    return a;
}

/// Forward-difference matrix of size d x d whose last row is zero.
inline Matrix diff_1d(Index d)
{
    Matrix p = Matrix::Zero(d, d);
    for (Index i = 0; i + 1 < d; ++i) {
        p(i, i) = -1.0;
        p(i, i + 1) = 1.0;
    }
    return p;
}

inline Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return k;
}

/// D = (d_M kron I_N ; I_M kron d_N) for row-major M x N images.
inline Matrix dense_gradient(Index m, Index n)
{
    Matrix d(2 * m * n, m * n);
    d.topRows(m * n) = kron(diff_1d(m), Matrix::Identity(n, n));
    d.bottomRows(m * n) = kron(Matrix::Identity(m, m), diff_1d(n));
    return d;
}

/// min 1/2 y^T B y - c^T y over y >= 0 by enumerating free sets (n <= 12).
/// Returns the unique point whose KKT conditions hold to `tol`.
inline Vector active_set_qp(const Matrix& bmat, const Vector& c, double tol = 1e-10)
{
    const Index n = c.size();
    Vector best;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<Index> free;
        for (Index i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                free.push_back(i);
            }
        }
        Vector y = Vector::Zero(n);
        if (!free.empty()) {
            const Index f = static_cast<Index>(free.size());
            Matrix bff(f, f);
            Vector cf(f);
            for (Index i = 0; i < f; ++i) {
                cf[i] = c[free[i]];
                for (Index j = 0; j < f; ++j) {
                    bff(i, j) = bmat(free[i], free[j]);
                }
            }
            const Vector yf = bff.llt().solve(cf);
            for (Index i = 0; i < f; ++i) {
                y[free[i]] = yf[i];
            }
        }
        const Vector g = bmat * y - c;
        bool kkt = y.minCoeff() >= -tol;
        for (Index i = 0; i < n && kkt; ++i) {
            if (mask & (1u << i)) {
                kkt = std::abs(g[i]) <= tol * (1.0 + c.norm());
            } else {
                kkt = g[i] >= -tol * (1.0 + c.norm());
            }
        }
        if (kkt) {
            best = y.cwiseMax(0.0);
            break;
        }
    }
    return best;
}

} // namespace testsupport
