// Superiorization: target-function reduction steps interleaved with a basic
// least-squares algorithm, y_{k+1} = A(S(y_k)).
#pragma once

#include "basic.hpp"
#include "metrics.hpp"
#include "prox_tv.hpp"
#include "tv.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace supfbs {

enum class SupVariant {
    GradSupCG,
    GradSupLW,
    ProxSupCG,
    ProxSupLW,
    ProxCSupCG,
    ProxCSupLW,
    GradSupProjLW,
    ProxSupProjLW,
};

enum class Reduction { Grad, Prox, ProxPlus };

struct VariantTraits {
    const char* name;
    BasicKind basic;
    Reduction reduction;
    bool constrained; ///< stop with the feasibility check min_i x_i > -1e-8
};

inline VariantTraits traits(SupVariant v)
{
    switch (v) {
    case SupVariant::GradSupCG:
        return {"GradSupCG", BasicKind::CG, Reduction::Grad, false};
    case SupVariant::GradSupLW:
        return {"GradSupLW", BasicKind::LW, Reduction::Grad, false};
    case SupVariant::ProxSupCG:
        return {"ProxSupCG", BasicKind::CG, Reduction::Prox, false};
    case SupVariant::ProxSupLW:
        return {"ProxSupLW", BasicKind::LW, Reduction::Prox, false};
    case SupVariant::ProxCSupCG:
        return {"ProxCSupCG", BasicKind::CG, Reduction::ProxPlus, true};
    case SupVariant::ProxCSupLW:
        return {"ProxCSupLW", BasicKind::LW, Reduction::ProxPlus, true};
    case SupVariant::GradSupProjLW:
        return {"GradSupProjLW", BasicKind::LWPlus, Reduction::Grad, true};
    case SupVariant::ProxSupProjLW:
        return {"ProxSupProjLW", BasicKind::LWPlus, Reduction::Prox, true};
    }
    throw ContractError("unknown superiorization variant");
}

inline const std::vector<SupVariant>& all_variants()
{
    static const std::vector<SupVariant> v = {
        SupVariant::GradSupCG,  SupVariant::GradSupLW,  SupVariant::ProxSupCG,
        SupVariant::ProxSupLW,  SupVariant::ProxCSupCG, SupVariant::ProxCSupLW,
        SupVariant::GradSupProjLW, SupVariant::ProxSupProjLW,
    };
    return v;
}

inline std::optional<SupVariant> parse_variant(const std::string& s)
{
    for (SupVariant v : all_variants()) {
        if (s == traits(v).name) {
            return v;
        }
    }
    return std::nullopt;
}

// --- target-function reduction --------------------------------------------

struct SGradResult {
    Vector y;
    long ell = 0;
    long trials = 0;         ///< trial points evaluated, equals ell_new - ell
    double step_sum = 0.0;   ///< sum of gamma0 a^l over every exponent consumed
    bool exhausted = false;  ///< exponent guard hit
};

inline constexpr long s_grad_ell_limit = 1000000;

/// kappa passes along the normalized negative gradient of R_tau. Each pass
/// tries y + gamma0 a^l v with l incremented after every trial until R_tau does
/// not increase. The exponent l carries over between calls.
inline SGradResult s_grad(const GridShape& g, const SmoothedTVParams& p, const Vector& y0, long ell,
                          double a, double gamma0, int kappa)
{
    require(a > 0.0 && a < 1.0, "s_grad: a must lie in (0, 1)");
    require(gamma0 > 0.0 && kappa >= 1, "s_grad: need gamma0 > 0 and kappa >= 1");
    SGradResult r;
    r.y = y0;
    r.ell = ell;
    Vector gr(y0.size());
    for (int i = 0; i < kappa && !r.exhausted; ++i) {
        const double phi = tv_smooth_with_grad(g, p, r.y, gr);
        const double gn = gr.norm();
        const Vector v = gn > 0.0 ? Vector(-gr / gn) : Vector(Vector::Zero(gr.size()));
        for (;;) {
            if (r.ell > s_grad_ell_limit) {
                r.exhausted = true;
                break;
            }
            const double gamma = gamma0 * std::pow(a, static_cast<double>(r.ell));
            Vector trial = r.y + gamma * v;
            ++r.ell;
            ++r.trials;
            r.step_sum += gamma;
            if (tv_smooth(g, p, trial) <= phi) {
                r.y = std::move(trial);
                break;
            }
        }
    }
    return r;
}

/// argmin_z R_tau(z) + ||z - y||^2 / (2 beta).
inline ProxTVResult s_prox(const GridShape& g, const SmoothedTVParams& p, const Vector& y,
                           double beta, double tol = 1e-6)
{
    ProxTVOptions o;
    o.tol = tol;
    return prox_tv_solve(g, p, y, beta, false, o);
}

/// argmin_{z >= 0} R_tau(z) + ||z - y||^2 / (2 beta).
inline ProxTVResult s_prox_plus(const GridShape& g, const SmoothedTVParams& p, const Vector& y,
                                double beta, double tol = 1e-6)
{
    ProxTVOptions o;
    o.tol = tol;
    return prox_tv_solve(g, p, y, beta, true, o);
}

// --- driver -----------------------------------------------------------------

struct SupConfig {
    SupVariant variant = SupVariant::GradSupCG;
    int kappa = 20;
    double a = 1.0 - 1e-4;
    double gamma0 = 0.001;
    double eps = 0.001;
    int max_outer = 2000;
    double mu = 0.0;        ///< CG regularization, required by the CG variants
    double lw_gamma = 0.0;  ///< Landweber step, required by the LW variants
    double prox_tol = 1e-6;
    bool run_past_stop = false; ///< keep iterating to max_outer after the rule fires
    bool record_wall_time = false;
};

struct SupResult {
    Vector x;
    std::vector<MetricsRecord> records;
    int outer_iterations = 0;
    bool converged = false;   ///< stopping rule met
    int stop_k = -1;          ///< first k at which the rule held
    bool stop_at_half = false; ///< rule held at y_{stop_k + 1/2} (ProxPlus variants)
    double beta_sum = 0.0;    ///< accumulated perturbation sizes
    bool exhausted = false;   ///< S_grad exponent guard hit
    int prox_warnings = 0;
    int cg_restarts = 0;
};

/// Called with (k, y_{k+1/2}) after every reduction step.
using HalfStepCallback = std::function<void(int, const Vector&)>;

inline SupResult superiorize_run(const SupConfig& cfg, const ProblemInstance& prob, const Vector& x0,
                                 const MetricsCallback& on_record = {},
                                 const HalfStepCallback& on_half = {})
{
    prob.validate();
    const VariantTraits tr = traits(cfg.variant);
    require(x0.size() == prob.shape.size(), "superiorize_run: x0 length mismatch");
    require(cfg.max_outer >= 0 && cfg.gamma0 > 0.0 && cfg.a > 0.0 && cfg.a <= 1.0,
            "superiorize_run: need max_outer >= 0, gamma0 > 0, a in (0, 1]");
    if (tr.basic == BasicKind::CG) {
        require(cfg.mu > 0.0, std::string(tr.name) + ": mu must be positive");
    } else {
        require(cfg.lw_gamma > 0.0, std::string(tr.name) + ": lw_gamma must be positive");
    }
    if (tr.reduction == Reduction::Grad) {
        require(cfg.a < 1.0 && cfg.kappa >= 1, std::string(tr.name) + ": need a < 1, kappa >= 1");
    }

    const CountingOperator<SparseOperator> op(prob.op());
    const TerminationMode mode = tr.constrained ? TerminationMode::SupC : TerminationMode::SupU;
    const Monitor monitor(prob, mode, cfg.record_wall_time);
    const LWParams lw{cfg.lw_gamma};
    const double beta_bound = cfg.a < 1.0 ? cfg.gamma0 / (1.0 - cfg.a) : INFINITY;

    SupResult res;
    Vector y = x0;
    CGState cg;
    if (tr.basic == BasicKind::CG) {
        cg = cg_init(op, prob.b, cfg.mu, y);
    }
    long ell = 0;

    auto emit = [&](int k, int inner) {
        MetricsRecord rec = monitor.record(k, y, inner, op.products());
        res.records.push_back(rec);
        if (on_record) {
            on_record(rec);
        }
        return rec;
    };
    auto check = [&](int k, const MetricsRecord& rec) {
        if (res.stop_k < 0 && record_terminates(rec, y, mode, cfg.eps)) {
            res.stop_k = k;
            res.converged = true;
        }
        return res.converged && !cfg.run_past_stop;
    };

    MetricsRecord rec = emit(0, 0);
    if (check(0, rec)) {
        res.x = y;
        return res;
    }
    for (int k = 0; k < cfg.max_outer; ++k) {
        int inner = 0;
        if (tr.reduction == Reduction::Grad) {
            SGradResult s = s_grad(prob.shape, prob.tv, y, ell, cfg.a, cfg.gamma0, cfg.kappa);
            ell = s.ell;
            inner = static_cast<int>(s.trials);
            res.beta_sum += s.step_sum;
            res.exhausted = res.exhausted || s.exhausted;
            y = std::move(s.y);
        } else {
            const double beta = cfg.gamma0 * std::pow(cfg.a, static_cast<double>(k));
            ProxTVResult s = tr.reduction == Reduction::Prox
                                 ? s_prox(prob.shape, prob.tv, y, beta, cfg.prox_tol)
                                 : s_prox_plus(prob.shape, prob.tv, y, beta, cfg.prox_tol);
            inner = s.iterations;
            res.prox_warnings += s.warning ? 1 : 0;
            res.beta_sum += beta;
            y = std::move(s.z);
        }
        if (res.beta_sum > beta_bound * (1.0 + 1e-12)) {
            throw std::logic_error("superiorize_run: perturbation sum exceeds gamma0 / (1 - a)");
        }
        if (on_half) {
            on_half(k, y);
        }
        // ProxPlus variants are feasible only at the half step
        if (tr.reduction == Reduction::ProxPlus && res.stop_k < 0 &&
            check_termination(prob, y, mode, cfg.eps)) {
            res.stop_k = k;
            res.stop_at_half = true;
            res.converged = true;
            if (!cfg.run_past_stop) {
                break;
            }
        }
        switch (tr.basic) {
        case BasicKind::LW:
            y = lw_step(op, prob.b, lw, y);
            break;
        case BasicKind::LWPlus:
            y = lw_proj_step(op, prob.b, lw, y);
            break;
        case BasicKind::CG:
            cg.x = y;
            cg = cg_step(op, prob.b, cg);
            y = cg.x;
            break;
        }
        if (!all_finite(y)) {
            throw NumericalError(std::string(tr.name) + ": non-finite iterate at outer iteration " +
                                 std::to_string(k + 1));
        }
        res.outer_iterations = k + 1;
        rec = emit(k + 1, inner);
        if (check(k + 1, rec)) {
            break;
        }
    }
    res.cg_restarts = cg.restarts;
    res.x = std::move(y);
    return res;
}

} // namespace supfbs
