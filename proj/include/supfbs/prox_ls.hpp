// Proximal map of the (optionally nonnegativity-constrained) least-squares term
//     P_alpha g(x) = argmin_y 1/2 <y, B y> - <c, y> + delta_K(y),
//     B = A^T A + I/alpha,  c = x/alpha + A^T b,
// evaluated exactly through Sherman-Morrison-Woodbury or inexactly by two
// primal-dual iterations, together with their termination certificates.
#pragma once

#include "linalg.hpp"
#include "smw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace supfbs {

/// Data of one prox evaluation. `atb` = A^T b is computed once per problem.
struct ProxLSData {
    const Vector* b = nullptr;
    const Vector* atb = nullptr;
    double alpha = 0.0;
    Vector x;
    bool nonneg = false;

    Vector c() const { return x / alpha + *atb; }
};

/// Unconstrained prox (I + alpha A^T A)^{-1} (x + alpha A^T b). Two products.
template <LinearOperator Op>
Vector prox_ls_exact(const WoodburySolver& smw, const Op& a, const ProxLSData& d)
{
    require(!d.nonneg, "prox_ls_exact: the closed form covers the unconstrained case only");
    return smw.solve(a, 1.0, d.alpha, d.x + d.alpha * *d.atb);
}

/// c - B z = (x - z)/alpha - A^T (A z - b). Two products.
template <LinearOperator Op>
Vector prox_residual(const Op& a, const ProxLSData& d, const Vector& z)
{
    return (d.x - z) / d.alpha - a.apply_adjoint(a.apply(z) - *d.b);
}

/// Duality gap of a feasible z:
///     1/2 ||(c - B z)_+||^2_{B^{-1}} - <(c - B z)_-, z>.
/// Without the constraint the dual point is 0 and the gap is 1/2 ||c - B z||^2_{B^{-1}}.
template <LinearOperator Op>
double dual_gap(const WoodburySolver& smw, const Op& a, const ProxLSData& d, const Vector& z)
{
    const Vector r = prox_residual(a, d, z);
    if (!d.nonneg) {
        return std::max(0.0, 0.5 * r.dot(smw.inverse_b(a, d.alpha, r)));
    }
    require(z.minCoeff() >= 0.0, "dual_gap: z must be feasible");
    const Vector rp = positive_part(r);
    const double g = 0.5 * rp.dot(smw.inverse_b(a, d.alpha, rp)) - negative_part(r).dot(z);
    return std::max(0.0, g);
}

/// Upper bound on ||z - P_alpha g(x)|| for feasible z from ||B^{-1}|| <= alpha:
///     alpha (||r_+||^2 - (2/alpha) <r_-, z>)^{1/2},  r = c - B z.
inline double prox_error_estimate(const Vector& r, const Vector& z, double alpha, bool nonneg)
{
    if (!nonneg) {
        return alpha * r.norm();
    }
    const double s = positive_part(r).squaredNorm() - 2.0 / alpha * negative_part(r).dot(z);
    return alpha * std::sqrt(std::max(0.0, s));
}

struct ProxCertificate {
    Vector z;                 ///< accepted prox value
    Vector zp;                ///< feasible point paired with z (constrained direct test), else empty
    Vector w;                 ///< normal-cone element at z_p (constrained), else empty
    double gap_value = 0.0;   ///< left-hand side of the acceptance test
    double eps_achieved = 0.0;
    int inner_iters = 0;
    bool accepted = false;
    bool fallback = false;    ///< accepted through the error-norm estimate
};

// --- primal-dual iteration without inversion ----------------------------------

/// Persistent part of the inner state, carried across outer iterations when
/// warm starting. `az` caches A z.
struct PDNoInvState {
    Vector z, q, az;

    bool empty() const { return z.size() == 0; }

    static PDNoInvState zeros(Index n, Index m)
    {
        return {Vector::Zero(n), Vector::Zero(m), Vector::Zero(m)};
    }
};

/// Quantities of a single step needed by the certificates.
struct PDNoInvStep {
    Vector z_prev, az_prev; ///< z_l, A z_l
    Vector v;               ///< point before projection
    double tau = 0.0;       ///< tau_l used in the step
};

/// Step-size state of one inner run.
struct PDSchedule {
    double tau = 0.0, sigma = 0.0;

    void advance(double alpha, double& theta)
    {
        theta = 1.0 / std::sqrt(1.0 + 2.0 * tau / alpha);
        tau *= theta;
        sigma /= theta;
    }
};

/// One step of the inversion-free primal-dual iteration. `zbar`/`azbar` hold the
/// extrapolated point and its image. Exactly one A^T and one A product.
template <LinearOperator Op>
PDNoInvStep pd_noinv_step(const Op& a, const ProxLSData& d, const Vector& c, PDNoInvState& s,
                          Vector& zbar, Vector& azbar, PDSchedule& sch)
{
    PDNoInvStep st;
    st.tau = sch.tau;
    st.z_prev = s.z;
    st.az_prev = s.az;
    const double tau = sch.tau, sigma = sch.sigma, alpha = d.alpha;
    s.q = (s.q + sigma * azbar) / (1.0 + sigma);
    st.v = alpha / (alpha + tau) * (s.z - tau * (a.apply_adjoint(s.q) - c));
    s.z = d.nonneg ? Vector(st.v.cwiseMax(0.0)) : st.v;
    s.az = a.apply(s.z);
    double theta = 0.0;
    sch.advance(alpha, theta);
    zbar = s.z + theta * (s.z - st.z_prev);
    azbar = s.az + theta * (s.az - st.az_prev);
    return st;
}

/// Unconstrained test: z = z_{l+1} + (alpha/tau_l)(z_{l+1} - z_l) with A z_p = q_{l+1};
/// accept when 1/2 ||A z - q_{l+1}||^2 <= eps^2 / (2 alpha). Uses no products.
inline ProxCertificate cert_unconstrained(const PDNoInvState& s, const PDNoInvStep& st,
                                          double alpha, double eps)
{
    const double r = alpha / st.tau;
    ProxCertificate c;
    const Vector az = s.az + r * (s.az - st.az_prev);
    c.gap_value = 0.5 * (az - s.q).squaredNorm();
    c.eps_achieved = std::sqrt(2.0 * alpha * c.gap_value);
    c.accepted = c.gap_value <= eps * eps / (2.0 * alpha);
    c.z = s.z + r * (s.z - st.z_prev);
    return c;
}

namespace detail {

// Sets w_i = min(0, x_i/alpha - grad_i) on the zero set of z_p.
inline void sharpen_normal(Vector& w, const Vector& zp, const Vector& x, const Vector& grad,
                           double alpha)
{
    for (Index i = 0; i < w.size(); ++i) {
        if (zp[i] == 0.0) {
            w[i] = std::min(0.0, x[i] / alpha - grad[i]);
        }
    }
}

} // namespace detail

/// Constrained test with z_p = z_{l+1} and the normal-cone element
///     w = (alpha + tau)/(alpha tau) (v - z_{l+1}) <= 0,  <w, z_p> = 0,
/// z = x - alpha (w + A^T (A z_p - b)). If z >= 0, accept when
///     1/2 ||A (z - z_p)||^2 - <w, z> <= eps^2 / (2 alpha);
/// otherwise fall back to the error-norm estimate at z_{l+1} against `budget`.
///
/// With `sharpen`, w_i on the zero set of z_p becomes min(0, x_i/alpha - grad_i),
/// so that z_i = max(0, x_i - alpha grad_i) there. If z still has negative
/// entries, those entries of z_p are zeroed and the pair is formed once more
/// (three further products) before falling back.
/// One A^T product, plus one A product when z is feasible.
template <LinearOperator Op>
ProxCertificate cert_constrained(const Op& a, const ProxLSData& d, const PDNoInvState& s,
                                 const PDNoInvStep& st, double eps, double budget,
                                 bool sharpen = true)
{
    const double alpha = d.alpha;
    ProxCertificate c;
    auto direct = [&](const Vector& zp, const Vector& azp, Vector w, const Vector& grad) {
        Vector z = d.x - alpha * (w + grad);
        if (sharpen) {
            // exact zeros instead of rounding residue
            for (Index i = 0; i < z.size(); ++i) {
                if (zp[i] == 0.0) {
                    z[i] = std::max(0.0, d.x[i] - alpha * grad[i]);
                }
            }
        }
        if (z.minCoeff() < 0.0) {
            return false;
        }
        const Vector az = a.apply(z);
        c.zp = zp;
        c.w = std::move(w);
        c.gap_value = 0.5 * (az - azp).squaredNorm() - c.w.dot(z);
        c.eps_achieved = std::sqrt(std::max(0.0, 2.0 * alpha * c.gap_value));
        c.accepted = c.gap_value <= eps * eps / (2.0 * alpha);
        c.z = std::move(z);
        return true;
    };

    const Vector grad_p = a.apply_adjoint(s.az - *d.b);
    Vector w = (alpha + st.tau) / (alpha * st.tau) * (st.v - s.z);
    if (sharpen) {
        detail::sharpen_normal(w, s.z, d.x, grad_p, alpha);
    }
    if (direct(s.z, s.az, w, grad_p)) {
        return c;
    }
    if (sharpen) {
        const Vector z = d.x - alpha * (w + grad_p);
        Vector zp = s.z;
        for (Index i = 0; i < zp.size(); ++i) {
            if (z[i] < 0.0) {
                zp[i] = 0.0;
            }
        }
        const Vector azp = a.apply(zp);
        const Vector grad = a.apply_adjoint(azp - *d.b);
        Vector w2 = Vector::Zero(zp.size());
        detail::sharpen_normal(w2, zp, d.x, grad, alpha);
        if (direct(zp, azp, std::move(w2), grad)) {
            return c;
        }
    }
    c.w = std::move(w);
    const Vector r = (d.x - s.z) / alpha - grad_p;
    c.fallback = true;
    c.gap_value = prox_error_estimate(r, s.z, alpha, true);
    c.eps_achieved = c.gap_value;
    c.accepted = c.gap_value <= budget;
    c.z = s.z;
    return c;
}

struct InnerOptions {
    double eps = 1e-3;       ///< certificate precision eps_k
    double budget = 1e-3;    ///< error-norm budget for the fallback and the PDBasic test
    int max_iter = 100000;
    bool sharpen_w = true;   ///< see cert_constrained
};

struct InnerResult {
    ProxCertificate cert;
    int iterations = 0;
    int fallback_checks = 0;  ///< iterations that needed the error-norm estimate
    int fallback_accepts = 0;
    bool capped = false;      ///< max_iter reached before acceptance
};

/// Runs the inversion-free iteration from `s` (warm or zero state) until the
/// certificate accepts. tau_0 = sigma_0 = 1/||A||.
template <LinearOperator Op>
InnerResult pd_noinv_solve(const Op& a, const ProxLSData& d, double norm_a, PDNoInvState& s,
                           const InnerOptions& opt)
{
    require(norm_a > 0.0, "pd_noinv_solve: ||A|| must be positive");
    if (s.empty()) {
        s = PDNoInvState::zeros(a.cols(), a.rows());
    }
    const Vector c = d.c();
    PDSchedule sch{1.0 / norm_a, 1.0 / norm_a};
    Vector zbar = s.z, azbar = s.az;
    InnerResult res;
    while (res.iterations < opt.max_iter) {
        const PDNoInvStep st = pd_noinv_step(a, d, c, s, zbar, azbar, sch);
        ++res.iterations;
        ProxCertificate cert = d.nonneg ? cert_constrained(a, d, s, st, opt.eps, opt.budget, opt.sharpen_w)
                                        : cert_unconstrained(s, st, d.alpha, opt.eps);
        if (cert.fallback) {
            ++res.fallback_checks;
            res.fallback_accepts += cert.accepted ? 1 : 0;
        }
        if (cert.accepted || res.iterations == opt.max_iter) {
            res.capped = !cert.accepted;
            res.cert = std::move(cert);
            break;
        }
    }
    res.cert.inner_iters = res.iterations;
    return res;
}

// --- primal-dual iteration with the SMW solve ---------------------------------

struct PDBasicState {
    Vector z, p;

    bool empty() const { return z.size() == 0; }
};

/// One step of the basic decomposition; p stays 0 without the constraint.
/// Two products inside the SMW solve.
template <LinearOperator Op>
void pd_basic_step(const WoodburySolver& smw, const Op& a, const ProxLSData& d, const Vector& c,
                   PDBasicState& s, Vector& zbar, PDSchedule& sch)
{
    const double tau = sch.tau;
    if (d.nonneg) {
        s.p = negative_part(s.p + sch.sigma * zbar);
    }
    const Vector z_prev = s.z;
    s.z = smw.shifted_solve(a, d.alpha, tau, s.z - tau * (s.p - c));
    double theta = 0.0;
    sch.advance(d.alpha, theta);
    zbar = s.z + theta * (s.z - z_prev);
}

/// Runs the basic decomposition (tau_0 = sigma_0 = 1) until the error-norm
/// estimate at Pi_K(z_{l+1}) is <= budget; returns that projected point.
/// Two extra products per iteration for the estimate.
template <LinearOperator Op>
InnerResult pd_basic_solve(const WoodburySolver& smw, const Op& a, const ProxLSData& d,
                           PDBasicState& s, const InnerOptions& opt)
{
    if (s.empty()) {
        s = {Vector::Zero(a.cols()), Vector::Zero(a.cols())};
    }
    const Vector c = d.c();
    PDSchedule sch{1.0, 1.0};
    Vector zbar = s.z;
    InnerResult res;
    while (res.iterations < opt.max_iter) {
        pd_basic_step(smw, a, d, c, s, zbar, sch);
        ++res.iterations;
        Vector zk = d.nonneg ? Vector(s.z.cwiseMax(0.0)) : s.z;
        const double est = prox_error_estimate(prox_residual(a, d, zk), zk, d.alpha, d.nonneg);
        if (est <= opt.budget || res.iterations == opt.max_iter) {
            res.cert.z = std::move(zk);
            res.cert.gap_value = est;
            res.cert.eps_achieved = est;
            res.cert.accepted = est <= opt.budget;
            res.capped = !res.cert.accepted;
            break;
        }
    }
    res.cert.inner_iters = res.iterations;
    return res;
}

/// Constrained prox to a duality gap <= gap_tol, by the inversion-free
/// iteration with the exact gap checked every `check_every` steps. The step
/// schedule restarts every `restart_every` steps (0: never); without restarts
/// the iterates only converge like 1/l.
template <LinearOperator Op>
InnerResult prox_ls_constrained_tight(const WoodburySolver& smw, const Op& a, const ProxLSData& d,
                                      double norm_a, PDNoInvState& s, double gap_tol = 1e-12,
                                      int max_iter = 1000000, int check_every = 10,
                                      int restart_every = 100)
{
    require(d.nonneg, "prox_ls_constrained_tight: constrained case only");
    if (s.empty()) {
        s = PDNoInvState::zeros(a.cols(), a.rows());
    }
    const Vector c = d.c();
    PDSchedule sch{1.0 / norm_a, 1.0 / norm_a};
    Vector zbar = s.z, azbar = s.az;
    InnerResult res;
    while (res.iterations < max_iter) {
        if (restart_every > 0 && res.iterations > 0 && res.iterations % restart_every == 0) {
            sch = {1.0 / norm_a, 1.0 / norm_a};
            zbar = s.z;
            azbar = s.az;
        }
        pd_noinv_step(a, d, c, s, zbar, azbar, sch);
        ++res.iterations;
        if (res.iterations % check_every == 0 || res.iterations == max_iter) {
            const double g = dual_gap(smw, a, d, s.z);
            if (g <= gap_tol || res.iterations == max_iter) {
                res.cert.z = s.z;
                res.cert.gap_value = g;
                res.cert.eps_achieved = std::sqrt(2.0 * d.alpha * g);
                res.cert.accepted = g <= gap_tol;
                res.capped = !res.cert.accepted;
                break;
            }
        }
    }
    res.cert.inner_iters = res.iterations;
    return res;
}

} // namespace supfbs
