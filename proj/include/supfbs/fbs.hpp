// Forward-backward splitting for h = f + g, plain or accelerated, with exact or
// inexact proximal maps of g.
//
//   NaturalLS:  f = lambda R_tau,   g = 1/2 ||A x - b||^2 (+ delta_K)
//   ReversedTV: f = 1/2 ||A x - b||^2,   g = lambda R_tau (+ delta_K)
#pragma once

#include "metrics.hpp"
#include "prox_ls.hpp"
#include "prox_tv.hpp"
#include "smw.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace supfbs {

enum class SplittingKind { NaturalLS, ReversedTV };
enum class InnerSolver { ExactSMW, PDBasic, PDNoInv, TVProx };

inline std::string to_string(SplittingKind s)
{
    return s == SplittingKind::NaturalLS ? "natural" : "reversed";
}

inline std::string to_string(InnerSolver s)
{
    switch (s) {
    case InnerSolver::ExactSMW:
        return "exact";
    case InnerSolver::PDBasic:
        return "pd_basic";
    case InnerSolver::PDNoInv:
        return "pd_noinv";
    case InnerSolver::TVProx:
        return "tv_prox";
    }
    return "?";
}

inline std::optional<SplittingKind> parse_splitting(const std::string& s)
{
    if (s == "natural") {
        return SplittingKind::NaturalLS;
    }
    if (s == "reversed") {
        return SplittingKind::ReversedTV;
    }
    return std::nullopt;
}

inline std::optional<InnerSolver> parse_inner(const std::string& s)
{
    for (InnerSolver k : {InnerSolver::ExactSMW, InnerSolver::PDBasic, InnerSolver::PDNoInv,
                          InnerSolver::TVProx}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

struct AFBSConfig {
    SplittingKind splitting = SplittingKind::NaturalLS;
    InnerSolver inner = InnerSolver::ExactSMW;
    bool accelerated = true;
    double alpha = 0.0;       ///< 0 selects 1/L_f
    double a_relax = 1.0;
    double t0 = 1.01;
    double inexact_C = 1.0;   ///< eps_k = C k^{-q}, k = 1, 2, ...
    double inexact_q = 2.0;
    int max_outer = 2000;
    int max_inner = 100000;
    bool warm_start = true;
    bool sharpen_w = true;     ///< normal-cone choice in the constrained certificate
    double tv_prox_tol = 1e-6;
    bool run_past_stop = false;
    bool record_wall_time = false;
};

/// Lipschitz constant of grad f: lambda 8/tau (NaturalLS) or ||A||^2 (ReversedTV).
inline double splitting_lipschitz(SplittingKind s, const SmoothedTVParams& tv, double norm_a_sq)
{
    return s == SplittingKind::NaturalLS ? tv.lambda * lipschitz_bound(tv) : norm_a_sq;
}

inline double inexact_eps(const AFBSConfig& c, int k)
{
    return c.inexact_C * std::pow(static_cast<double>(k), -c.inexact_q);
}

struct AFBSResult {
    Vector x;
    std::vector<MetricsRecord> records;
    int outer_iterations = 0;
    bool converged = false;
    int stop_k = -1;
    long inner_total = 0;
    int fallback_checks = 0;
    int fallback_accepts = 0;
    int capped_inner = 0;     ///< inner runs that hit max_inner
    int prox_warnings = 0;
};

/// t_{k+1} for constant a_k alpha_k.
inline double next_t(double t)
{
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
}

/// y_{k+1} = x_{k+1} + (t_k - 1)/t_{k+1} (x_{k+1} - x_k) + (1 - a_k) t_k/t_{k+1} (y_k - x_{k+1}).
inline Vector extrapolate(const Vector& x_new, const Vector& x, const Vector& y, double t,
                          double t_new, double a)
{
    Vector out = x_new + ((t - 1.0) / t_new) * (x_new - x);
    if (a != 1.0) {
        out += (1.0 - a) * (t / t_new) * (y - x_new);
    }
    return out;
}

/// Called with (k, x_k) after every outer iteration.
using IterateCallback = std::function<void(int, const Vector&)>;

/// `norm_a_sq` is ||A||^2 (power iteration). `smw` may be null; it is built on
/// demand for the inner solvers that need it.
inline AFBSResult afbs_run(const AFBSConfig& cfg, const ProblemInstance& prob, double norm_a_sq,
                           const Vector& x0, const MetricsCallback& on_record = {},
                           std::shared_ptr<const WoodburySolver> smw = nullptr,
                           const IterateCallback& on_iterate = {})
{
    prob.validate();
    require(x0.size() == prob.shape.size(), "afbs_run: x0 length mismatch");
    require(norm_a_sq > 0.0, "afbs_run: ||A||^2 must be positive");
    const bool natural = cfg.splitting == SplittingKind::NaturalLS;
    require(natural == (cfg.inner != InnerSolver::TVProx),
            "afbs_run: the reversed splitting needs the TV prox, the natural one a least-squares prox");
    const double lf = splitting_lipschitz(cfg.splitting, prob.tv, norm_a_sq);
    require(lf > 0.0, "afbs_run: L_f must be positive (lambda > 0 for the natural splitting)");
    const double alpha = cfg.alpha > 0.0 ? cfg.alpha : 1.0 / lf;
    require(cfg.a_relax > 0.0 && cfg.a_relax < 2.0, "afbs_run: a must lie in (0, 2)");
    if (cfg.accelerated) {
        require(alpha <= (2.0 - cfg.a_relax) / lf * (1.0 + 1e-12),
                "afbs_run: alpha exceeds (2 - a)/L_f");
    } else {
        require(alpha < 2.0 / lf, "afbs_run: alpha must be below 2/L_f");
    }
    require(cfg.t0 > 1.0 || !cfg.accelerated, "afbs_run: t0 must exceed 1");
    require(cfg.max_outer >= 0, "afbs_run: max_outer must be >= 0");

    const bool need_smw = natural && (cfg.inner == InnerSolver::ExactSMW ||
                                      cfg.inner == InnerSolver::PDBasic);
    if (need_smw && !smw) {
        smw = std::make_shared<const WoodburySolver>(prob.op());
    }

    const CountingOperator<SparseOperator> op(prob.op());
    const TerminationMode mode = prob.nonneg ? TerminationMode::OptC : TerminationMode::OptU;
    const Monitor monitor(prob, mode, cfg.record_wall_time);
    const double norm_a = std::sqrt(norm_a_sq);
    Vector atb;
    if (natural) {
        atb = op.apply_adjoint(prob.b);
    }

    AFBSResult res;
    Vector x = prob.nonneg ? Vector(x0.cwiseMax(0.0)) : x0;
    Vector y = x;
    double t = cfg.t0;
    PDNoInvState noinv;
    PDBasicState basic;

    auto emit = [&](int k, int inner) {
        MetricsRecord rec = monitor.record(k, x, inner, op.products());
        res.records.push_back(rec);
        if (on_record) {
            on_record(rec);
        }
        if (res.stop_k < 0 && rec.stop_measure <= opt_tolerance) {
            res.stop_k = k;
            res.converged = true;
        }
        return res.converged && !cfg.run_past_stop;
    };

    if (emit(0, 0)) {
        res.x = x;
        return res;
    }
    for (int k = 0; k < cfg.max_outer; ++k) {
        const double eps_k = inexact_eps(cfg, k + 1);
        Vector grad_f = natural ? Vector(prob.tv.lambda * tv_smooth_grad(prob.shape, prob.tv, y))
                                : ls_gradient(op, prob.b, y);
        Vector v = y - alpha * grad_f;
        Vector x_new;
        int inner = 0;
        if (natural) {
            ProxLSData d{&prob.b, &atb, alpha, std::move(v), prob.nonneg};
            if (!cfg.warm_start) {
                noinv = {};
                basic = {};
            }
            InnerResult ir;
            switch (cfg.inner) {
            case InnerSolver::ExactSMW:
                if (!prob.nonneg) {
                    ir.cert.z = prox_ls_exact(*smw, op, d);
                    ir.iterations = 1;
                } else {
                    ir = prox_ls_constrained_tight(*smw, op, d, norm_a, noinv, 1e-12, cfg.max_inner);
                }
                break;
            case InnerSolver::PDBasic:
                ir = pd_basic_solve(*smw, op, d, basic, {eps_k, eps_k, cfg.max_inner});
                break;
            case InnerSolver::PDNoInv:
                ir = pd_noinv_solve(op, d, norm_a, noinv, {eps_k, eps_k, cfg.max_inner, cfg.sharpen_w});
                break;
            case InnerSolver::TVProx:
                break;
            }
            inner = ir.iterations;
            res.fallback_checks += ir.fallback_checks;
            res.fallback_accepts += ir.fallback_accepts;
            res.capped_inner += ir.capped ? 1 : 0;
            x_new = std::move(ir.cert.z);
        } else {
            ProxTVOptions o;
            o.tol = cfg.tv_prox_tol;
            ProxTVResult pr =
                prox_tv_solve(prob.shape, prob.tv, v, alpha * prob.tv.lambda, prob.nonneg, o);
            inner = pr.iterations;
            res.prox_warnings += pr.warning ? 1 : 0;
            x_new = std::move(pr.z);
        }
        res.inner_total += inner;
        if (cfg.accelerated) {
            const double t_new = next_t(t);
            y = extrapolate(x_new, x, y, t, t_new, cfg.a_relax);
            t = t_new;
        } else {
            y = x_new;
        }
        x = std::move(x_new);
        if (!all_finite(x) || !all_finite(y)) {
            throw NumericalError("afbs_run: non-finite iterate at outer iteration " +
                                 std::to_string(k + 1));
        }
        res.outer_iterations = k + 1;
        if (on_iterate) {
            on_iterate(k + 1, x);
        }
        if (emit(k + 1, inner)) {
            break;
        }
    }
    res.x = std::move(x);
    return res;
}

} // namespace supfbs
