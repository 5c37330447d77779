// Proximal map of the smoothed total variation, optionally restricted to the
// nonnegative orthant:
//     argmin_z  R_tau(z) + delta_{z >= 0}(z) + ||z - x||^2 / (2 beta).
#pragma once

#include "box_qn.hpp"
#include "tv.hpp"

namespace supfbs {

struct ProxTVResult {
    Vector z;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool warning = false;
};

struct ProxTVOptions {
    double tol = 1e-6;  ///< projected-gradient infinity norm
    int max_iter = 500;
    int memory = 10;
};

/// Objective of the prox subproblem, exposed for tests and certificates.
inline double prox_tv_objective(const GridShape& g, const SmoothedTVParams& p, const Vector& x,
                                double beta, const Vector& z)
{
    return tv_smooth(g, p, z) + (z - x).squaredNorm() / (2.0 * beta);
}

inline ProxTVResult prox_tv_solve(const GridShape& g, const SmoothedTVParams& p, const Vector& x,
                                  double beta, bool nonneg, const ProxTVOptions& opt = {})
{
    require(beta > 0.0, "prox_tv: beta must be positive");
    require(x.size() == g.size(), "prox_tv: length mismatch");
    const double inv_beta = 1.0 / beta;
    auto fg = [&](const Vector& z, Vector& grad) {
        const double r = tv_smooth_with_grad(g, p, z, grad);
        const Vector diff = z - x;
        grad += inv_beta * diff;
        return r + 0.5 * inv_beta * diff.squaredNorm();
    };
    BoxQNOptions qn;
    qn.pg_tol = opt.tol;
    qn.max_iter = opt.max_iter;
    qn.memory = opt.memory;
    BoxQNResult r = minimize_box_qn(fg, x, nonneg, qn);
    return {std::move(r.x), r.iterations, r.evaluations, r.converged, r.warning};
}

inline Vector prox_tv(const GridShape& g, const SmoothedTVParams& p, const Vector& x, double beta,
                      bool nonneg, double tol = 1e-6)
{
    ProxTVOptions opt;
    opt.tol = tol;
    return prox_tv_solve(g, p, x, beta, nonneg, opt).z;
}

} // namespace supfbs
