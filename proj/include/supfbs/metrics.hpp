// Problem instance, per-iteration metrics and stopping rules.
#pragma once

#include "basic.hpp"
#include "sparse.hpp"
#include "tv.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

namespace supfbs {

/// h_u(x) = 1/2 ||A x - b||^2 + lambda R_tau(x); h_c adds the indicator of x >= 0.
struct ProblemInstance {
    const SparseOperator* a = nullptr;
    Vector b;
    GridShape shape;
    SmoothedTVParams tv;
    bool nonneg = false;
    Vector x_true; ///< optional; empty disables err_scaled

    const SparseOperator& op() const
    {
        require(a != nullptr, "ProblemInstance: no operator");
        return *a;
    }

    void validate() const
    {
        shape.validate();
        require(op().cols() == shape.size(), "ProblemInstance: A columns != grid size");
        require(op().rows() == b.size(), "ProblemInstance: A rows != length of b");
        require(x_true.size() == 0 || x_true.size() == shape.size(),
                "ProblemInstance: x_true length mismatch");
        require(tv.tau > 0.0 && tv.lambda >= 0.0, "ProblemInstance: need tau > 0, lambda >= 0");
    }
};

inline double objective_u(const ProblemInstance& p, const Vector& x)
{
    return ls_value(p.op(), p.b, x) + p.tv.lambda * tv_smooth(p.shape, p.tv, x);
}

/// grad h_u(x) = A^T (A x - b) + lambda grad R_tau(x).
inline Vector objective_u_grad(const ProblemInstance& p, const Vector& x)
{
    return ls_gradient(p.op(), p.b, x) + p.tv.lambda * tv_smooth_grad(p.shape, p.tv, x);
}

enum class TerminationMode { SupU, SupC, OptU, OptC };

inline constexpr double opt_tolerance = 1e-3;
inline constexpr double feasibility_tolerance = -1e-8;

/// Value compared against its threshold by check_termination: g_u(x) for the
/// superiorization rules, the infinity norm of grad h_u(x) (or of
/// min(x, grad h_u(x))) for the optimization rules.
inline double termination_measure(const ProblemInstance& p, const Vector& x, TerminationMode mode)
{
    switch (mode) {
    case TerminationMode::SupU:
    case TerminationMode::SupC:
        return ls_value(p.op(), p.b, x);
    case TerminationMode::OptU:
        return objective_u_grad(p, x).lpNorm<Eigen::Infinity>();
    case TerminationMode::OptC:
        return x.cwiseMin(objective_u_grad(p, x)).lpNorm<Eigen::Infinity>();
    }
    return INFINITY;
}

inline bool check_termination(const ProblemInstance& p, const Vector& x, TerminationMode mode,
                              double eps)
{
    const double v = termination_measure(p, x, mode);
    switch (mode) {
    case TerminationMode::SupU:
        return v <= eps;
    case TerminationMode::SupC:
        return v <= eps && x.minCoeff() > feasibility_tolerance;
    case TerminationMode::OptU:
    case TerminationMode::OptC:
        return v <= opt_tolerance;
    }
    return false;
}

struct MetricsRecord {
    int k = 0;
    double residual_scaled = 0.0; ///< ||A x - b||^2 / (2m)
    double tv_scaled = 0.0;       ///< R_tau(x) / n
    double err_scaled = 0.0;      ///< ||x - x_true||^2 / n, NaN without x_true
    double objective = 0.0;       ///< h_u(x)
    double stop_measure = 0.0;    ///< termination_measure for the run's rule
    int inner_iters = 0;
    std::uint64_t cumulative_matvecs = 0;
    double wall_time = 0.0;       ///< seconds since the run started, 0 unless recorded
};

using MetricsCallback = std::function<void(const MetricsRecord&)>;

/// Evaluates MetricsRecord fields with the uncounted operator, so monitoring
/// never shows up in the matvec count.
class Monitor {
public:
    Monitor(const ProblemInstance& p, TerminationMode mode, bool record_wall_time = false)
        : p_(&p), mode_(mode), wall_(record_wall_time), start_(std::chrono::steady_clock::now())
    {
    }

    MetricsRecord record(int k, const Vector& x, int inner_iters, std::uint64_t matvecs) const
    {
        const ProblemInstance& p = *p_;
        MetricsRecord r;
        r.k = k;
        const Vector res = p.op().apply(x) - p.b;
        const double m = static_cast<double>(p.b.size());
        const double n = static_cast<double>(x.size());
        const double ls = 0.5 * res.squaredNorm();
        const double tv = tv_smooth(p.shape, p.tv, x);
        r.residual_scaled = ls / m;
        r.tv_scaled = tv / n;
        r.err_scaled = p.x_true.size() ? (x - p.x_true).squaredNorm() / n : NAN;
        r.objective = ls + p.tv.lambda * tv;
        r.stop_measure = termination_measure(p, x, mode_);
        r.inner_iters = inner_iters;
        r.cumulative_matvecs = matvecs;
        if (wall_) {
            r.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        }
        return r;
    }

    TerminationMode mode() const { return mode_; }

private:
    const ProblemInstance* p_;
    TerminationMode mode_;
    bool wall_;
    std::chrono::steady_clock::time_point start_;
};

/// Whether `rec` (measured for `x`) satisfies the rule `mode` with threshold eps.
inline bool record_terminates(const MetricsRecord& rec, const Vector& x, TerminationMode mode,
                              double eps)
{
    switch (mode) {
    case TerminationMode::SupU:
        return rec.stop_measure <= eps;
    case TerminationMode::SupC:
        return rec.stop_measure <= eps && x.minCoeff() > feasibility_tolerance;
    case TerminationMode::OptU:
    case TerminationMode::OptC:
        return rec.stop_measure <= opt_tolerance;
    }
    return false;
}

inline std::string to_string(TerminationMode m)
{
    switch (m) {
    case TerminationMode::SupU:
        return "sup_u";
    case TerminationMode::SupC:
        return "sup_c";
    case TerminationMode::OptU:
        return "opt_u";
    case TerminationMode::OptC:
        return "opt_c";
    }
    return "?";
}

} // namespace supfbs
