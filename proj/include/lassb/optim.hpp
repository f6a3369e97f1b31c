#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "lassb/common.hpp"

namespace lassb {

struct SimplexOptions {
    double initial_step = 0.5;
    double tol_f = 1e-10;
    double tol_x = 1e-8;
    int max_evals = 2000;
    int restarts = 1;  // automatic restarts with a shrunken step (at most 2)
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int evals = 0;
    bool converged = false;
};

namespace detail {

struct SimplexVertex {
    std::vector<double> x;
    double f;
};

// One Nelder-Mead run (maximization) with reflection 1, expansion 2,
// contraction 0.5, shrink 0.5.
inline void nm_run(const std::function<double(const std::vector<double>&)>& f,
                   const std::vector<double>& x0, double step, const SimplexOptions& opts,
                   SimplexResult& best) {
    const std::size_t d = x0.size();
    auto eval = [&](const std::vector<double>& x) {
        ++best.evals;
        const double v = f(x);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    };
    std::vector<SimplexVertex> simplex;
    simplex.push_back({x0, eval(x0)});
    for (std::size_t k = 0; k < d; ++k) {
        auto x = x0;
        x[k] += step;
        simplex.push_back({x, eval(x)});
    }
    auto record = [&](const SimplexVertex& v) {
        if (v.f > best.value) {
            best.value = v.f;
            best.x = v.x;
        }
    };
    for (const auto& v : simplex) record(v);

    while (best.evals < opts.max_evals) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const SimplexVertex& a, const SimplexVertex& b) { return a.f > b.f; });
        const double spread = simplex.front().f - simplex.back().f;
        double diam = 0.0;
        for (std::size_t k = 0; k < d; ++k)
            for (const auto& v : simplex)
                diam = std::max(diam, std::abs(v.x[k] - simplex.front().x[k]));
        if (spread < opts.tol_f || diam < opts.tol_x) {
            best.converged = true;
            return;
        }
        // centroid of all but the worst vertex
        std::vector<double> c(d, 0.0);
        for (std::size_t v = 0; v < d; ++v)
            for (std::size_t k = 0; k < d; ++k) c[k] += simplex[v].x[k] / double(d);
        auto& worst = simplex.back();
        auto point = [&](double t) {
            std::vector<double> x(d);
            for (std::size_t k = 0; k < d; ++k) x[k] = c[k] + t * (c[k] - worst.x[k]);
            return x;
        };
        auto xr = point(1.0);
        const double fr = eval(xr);
        record({xr, fr});
        if (fr > simplex.front().f) {
            auto xe = point(2.0);
            const double fe = eval(xe);
            record({xe, fe});
            worst = fe > fr ? SimplexVertex{xe, fe} : SimplexVertex{xr, fr};
        } else if (fr > simplex[d - 1].f) {
            worst = {xr, fr};
        } else {
            const bool outside = fr > worst.f;
            auto xc = outside ? point(0.5) : point(-0.5);
            const double fc = eval(xc);
            record({xc, fc});
            if (fc >= (outside ? fr : worst.f)) {
                worst = {xc, fc};
            } else {
                for (std::size_t v = 1; v <= d; ++v) {  // shrink towards the best vertex
                    for (std::size_t k = 0; k < d; ++k)
                        simplex[v].x[k] =
                            simplex[0].x[k] + 0.5 * (simplex[v].x[k] - simplex[0].x[k]);
                    simplex[v].f = eval(simplex[v].x);
                    record(simplex[v]);
                }
            }
        }
    }
}

}  // namespace detail

// Derivative-free maximizer for the 1- and 2-dimensional M-step sub-problems.
// The returned value never falls below f(x0).
inline SimplexResult nelder_mead_max(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& x0,
                                     const SimplexOptions& opts = {}) {
    const std::size_t d = x0.size();
    require_input(d >= 1 && d <= 2, "simplex maximizer supports 1 or 2 dimensions");
    require_input(opts.tol_f > 0 && opts.tol_x > 0, "tolerances must be positive");
    require_input(opts.max_evals >= int(d) + 1, "max_evals too small");
    require_input(opts.restarts >= 0 && opts.restarts <= 2, "at most two restarts");
    require_input(opts.initial_step > 0, "initial step must be positive");
    const double f0 = f(x0);
    require_input(std::isfinite(f0), "objective is not finite at the start");

    SimplexResult best;
    best.x = x0;
    best.value = f0;
    best.evals = 1;
    double step = opts.initial_step;
    detail::nm_run(f, x0, step, opts, best);
    for (int r = 0; r < opts.restarts && best.evals < opts.max_evals; ++r) {
        step *= 0.1;
        detail::nm_run(f, best.x, step, opts, best);
    }
    return best;
}

}  // namespace lassb
