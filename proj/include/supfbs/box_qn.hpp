// Limited-memory quasi-Newton minimization with optional nonnegativity bounds.
//
// Projected L-BFGS: variables sitting on the bound with a gradient pushing
// outward are frozen, the two-loop recursion runs on the remaining free set,
// and an Armijo backtracking search runs along the projected path.
#pragma once

#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

namespace supfbs {

struct BoxQNOptions {
    int memory = 10;
    double pg_tol = 1e-6;  ///< stop when ||x - P(x - grad)||_inf <= pg_tol
    int max_iter = 500;
    int max_backtracks = 60;
};

struct BoxQNResult {
    Vector x;
    double value = 0.0;
    double pg_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool warning = false; ///< iteration cap hit or line search stalled
};

namespace detail {

inline Vector project_bounds(const Vector& x, bool nonneg)
{
    return nonneg ? Vector(x.cwiseMax(0.0)) : x;
}

inline Vector projected_gradient(const Vector& x, const Vector& g, bool nonneg)
{
    if (!nonneg) {
        return g;
    }
    return x - (x - g).cwiseMax(0.0);
}

} // namespace detail

/// Minimizes F over R^n (or R^n_+ when `nonneg`). `fg(x, grad)` returns F(x)
/// and writes its gradient. The start point is projected first; every accepted
/// step satisfies the Armijo condition, so F never increases.
template <typename ValueAndGrad>
BoxQNResult minimize_box_qn(ValueAndGrad&& fg, const Vector& x0, bool nonneg,
                            const BoxQNOptions& opt = {})
{
    struct Pair {
        Vector s, y;
    };
    std::deque<Pair> mem;

    BoxQNResult res;
    Vector x = detail::project_bounds(x0, nonneg);
    Vector g(x.size());
    double f = fg(x, g);
    res.evaluations = 1;

    Eigen::Array<bool, Eigen::Dynamic, 1> frozen(x.size());
    Vector xn(x.size()), gn(x.size());

    for (;;) {
        const Vector pg = detail::projected_gradient(x, g, nonneg);
        res.pg_norm = pg.size() ? pg.lpNorm<Eigen::Infinity>() : 0.0;
        if (res.pg_norm <= opt.pg_tol) {
            res.converged = true;
            break;
        }
        if (res.iterations >= opt.max_iter) {
            res.warning = true;
            break;
        }
        ++res.iterations;

        for (Index i = 0; i < x.size(); ++i) {
            frozen[i] = nonneg && x[i] <= 0.0 && g[i] > 0.0;
        }
        auto mask = [&](Vector v) {
            for (Index i = 0; i < v.size(); ++i) {
                if (frozen[i]) {
                    v[i] = 0.0;
                }
            }
            return v;
        };
        const Vector gf = mask(g);

        // two-loop recursion on the free variables
        Vector q = gf;
        std::vector<double> alphas(mem.size()), rhos(mem.size());
        double gamma = 0.0;
        for (std::size_t k = mem.size(); k-- > 0;) {
            const Vector sf = mask(mem[k].s);
            const Vector yf = mask(mem[k].y);
            const double sy = sf.dot(yf);
            rhos[k] = sy > 0.0 ? 1.0 / sy : 0.0;
            alphas[k] = rhos[k] * sf.dot(q);
            q -= alphas[k] * yf;
            if (gamma == 0.0 && sy > 0.0) {
                gamma = sy / yf.squaredNorm();
            }
        }
        bool steepest = gamma == 0.0;
        Vector d;
        if (!steepest) {
            Vector r = gamma * q;
            for (std::size_t k = 0; k < mem.size(); ++k) {
                const Vector sf = mask(mem[k].s);
                const Vector yf = mask(mem[k].y);
                const double beta = rhos[k] * yf.dot(r);
                r += (alphas[k] - beta) * sf;
            }
            d = -mask(r);
            if (d.dot(gf) >= 0.0) {
                steepest = true;
            }
        }
        double t = 1.0;
        if (steepest) {
            mem.clear();
            d = -gf;
            t = std::min(1.0, 1.0 / gf.lpNorm<Eigen::Infinity>());
        }

        bool accepted = false;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            xn = detail::project_bounds(x + t * d, nonneg);
            const double fnew = fg(xn, gn);
            ++res.evaluations;
            if (fnew <= f + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                Vector s = xn - x;
                Vector y = gn - g;
                if (s.dot(y) > 1e-16 * s.squaredNorm()) {
                    mem.push_back({std::move(s), std::move(y)});
                    if (static_cast<int>(mem.size()) > opt.memory) {
                        mem.pop_front();
                    }
                }
                x.swap(xn);
                g.swap(gn);
                f = fnew;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!mem.empty()) {
                mem.clear(); // retry from a steepest-descent step
                continue;
            }
            res.warning = true;
            break;
        }
    }
    res.x = std::move(x);
    res.value = f;
    return res;
}

} // namespace supfbs
