// Power iteration for the squared spectral norm of a linear operator.
#pragma once

#include "linalg.hpp"

#include <cmath>
#include <random>

namespace supfbs {

struct NormEstimate {
    double value = 0.0;    ///< estimate of ||A||_2^2
    int iterations = 0;
    bool converged = false;
};

/// Estimates ||A||_2^2 as the dominant eigenvalue of A^T A. The start vector is
/// drawn from a seeded mt19937_64, so the result is reproducible. Convergence
/// means the relative change of two successive Rayleigh quotients is <= tol.
template <LinearOperator Op>
NormEstimate spectral_norm_sq(const Op& a, double tol = 1e-8, int max_iter = 100,
                              std::uint64_t seed = 0)
{
    require(a.cols() > 0 && a.rows() > 0, "spectral_norm_sq: empty operator");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    Vector v(a.cols());
    for (Index i = 0; i < v.size(); ++i) {
        v[i] = uni(rng);
    }
    v.normalize();

    NormEstimate est;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = a.apply_adjoint(a.apply(v));
        const double lambda = v.dot(w);
        const double wn = w.norm();
        est.iterations = it;
        est.value = lambda;
        if (wn == 0.0) {
            throw NumericalError("spectral_norm_sq: operator annihilates the iterate (zero operator?)");
        }
        if (it > 1 && std::abs(lambda - prev) <= tol * std::abs(lambda)) {
            est.converged = true;
            break;
        }
        prev = lambda;
        v = w / wn;
    }
    return est;
}

} // namespace supfbs
