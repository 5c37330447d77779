// Basic algorithms for the least-squares proximity function
//     g_u(x) = 1/2 ||A x - b||^2,   g_u^mu(x) = g_u(x) + mu/2 ||x||^2:
// Landweber, projected Landweber and the perturbation-resilient CG variant that
// recomputes the gradient from x at every step.
#pragma once

#include "linalg.hpp"

#include <cmath>
#include <string>

namespace supfbs {

template <LinearOperator Op>
double ls_value(const Op& a, const Vector& b, const Vector& x)
{
    return 0.5 * (a.apply(x) - b).squaredNorm();
}

template <LinearOperator Op>
double ls_value_mu(const Op& a, const Vector& b, double mu, const Vector& x)
{
    return ls_value(a, b, x) + 0.5 * mu * x.squaredNorm();
}

/// A^T (A x - b).
template <LinearOperator Op>
Vector ls_gradient(const Op& a, const Vector& b, const Vector& x)
{
    return a.apply_adjoint(a.apply(x) - b);
}

struct LWParams {
    double gamma = 0.0; ///< step size in (0, 2/||A||^2)

    /// 1.9 / ||A||^2.
    static LWParams from_norm_sq(double norm_sq) { return {1.9 / norm_sq}; }

    void validate(double norm_sq) const
    {
        require(gamma > 0.0 && gamma < 2.0 / norm_sq, "LWParams: gamma must lie in (0, 2/||A||^2)");
    }
};

/// x - gamma A^T (A x - b). Two operator products.
template <LinearOperator Op>
Vector lw_step(const Op& a, const Vector& b, const LWParams& p, const Vector& x)
{
    return x - p.gamma * ls_gradient(a, b, x);
}

/// max(x - gamma A^T (A x - b), 0).
template <LinearOperator Op>
Vector lw_proj_step(const Op& a, const Vector& b, const LWParams& p, const Vector& x)
{
    return lw_step(a, b, p, x).cwiseMax(0.0);
}

struct CGState {
    Vector x;
    Vector p;   ///< search direction
    Vector h;   ///< A^T A p + mu p
    double mu = 0.0;
    int restarts = 0;
};

/// p0 = A^T (b - A x0) + mu x0, h0 = A^T A p0 + mu p0. Four operator products.
template <LinearOperator Op>
CGState cg_init(const Op& a, const Vector& b, double mu, const Vector& x0)
{
    require(mu > 0.0, "cg_init: mu must be positive");
    require(x0.size() == a.cols() && b.size() == a.rows(), "cg_init: size mismatch");
    CGState s;
    s.x = x0;
    s.mu = mu;
    s.p = a.apply_adjoint(b - a.apply(x0)) + mu * x0;
    s.h = a.apply_adjoint(a.apply(s.p)) + mu * s.p;
    return s;
}

namespace detail {
inline constexpr double cg_tiny = 1e-300;
inline constexpr double cg_collapse = 1e-12;
} // namespace detail

/// One step of CG on g_u^mu, with the gradient recomputed from the current
/// (possibly perturbed) x. Four operator products.
///
/// When the conjugate direction degenerates (|<p, h>| tiny, or p_new collapsing
/// relative to g) the step restarts along the steepest-descent direction -g.
/// The initial direction above collapses this way on the first step whenever
/// x0 = 0.
template <LinearOperator Op>
CGState cg_step(const Op& a, const Vector& b, const CGState& s)
{
    const double mu = s.mu;
    const Vector g = a.apply_adjoint(a.apply(s.x) - b) + mu * s.x;
    const double ph = s.p.dot(s.h);
    CGState out;
    out.mu = mu;
    out.restarts = s.restarts;
    bool restart = std::abs(ph) < detail::cg_tiny;
    if (!restart) {
        const double beta = g.dot(s.h) / ph;
        out.p = -g + beta * s.p;
        restart = out.p.norm() <= detail::cg_collapse * g.norm();
    }
    if (restart) {
        out.p = -g;
        ++out.restarts;
    }
    out.h = a.apply_adjoint(a.apply(out.p)) + mu * out.p;
    const double den = out.p.dot(out.h);
    const double gamma = std::abs(den) < detail::cg_tiny ? 0.0 : -g.dot(out.p) / den;
    out.x = s.x + gamma * out.p;
    return out;
}

enum class BasicKind { LW, LWPlus, CG };

inline std::string to_string(BasicKind k)
{
    switch (k) {
    case BasicKind::LW:
        return "LW";
    case BasicKind::LWPlus:
        return "LW+";
    case BasicKind::CG:
        return "CG";
    }
    return "?";
}

struct BasicResult {
    Vector x;
    int iterations = 0;
    bool converged = false;
};

/// Iterates one basic operator until its proximity function is <= eps: g_u for
/// LW and LW+ (whose iterates are feasible by construction), g_u^mu for CG.
/// `gamma` is the Landweber step, `mu` the CG regularization.
template <LinearOperator Op>
BasicResult run_basic(BasicKind kind, const Op& a, const Vector& b, double eps, double mu,
                      double gamma, int max_iter, const Vector& x0)
{
    auto proximity = [&](const Vector& x) {
        return kind == BasicKind::CG ? ls_value_mu(a, b, mu, x) : ls_value(a, b, x);
    };
    BasicResult r;
    r.x = kind == BasicKind::LWPlus ? Vector(x0.cwiseMax(0.0)) : x0;
    if (proximity(r.x) <= eps) {
        r.converged = true;
        return r;
    }
    const LWParams lw{gamma};
    CGState cg;
    if (kind == BasicKind::CG) {
        cg = cg_init(a, b, mu, r.x);
    }
    while (r.iterations < max_iter) {
        switch (kind) {
        case BasicKind::LW:
            r.x = lw_step(a, b, lw, r.x);
            break;
        case BasicKind::LWPlus:
            r.x = lw_proj_step(a, b, lw, r.x);
            break;
        case BasicKind::CG:
            cg = cg_step(a, b, cg);
            r.x = cg.x;
            break;
        }
        ++r.iterations;
        if (proximity(r.x) <= eps) {
            r.converged = true;
            break;
        }
    }
    return r;
}

} // namespace supfbs
