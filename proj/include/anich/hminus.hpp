#pragma once

// Poisson-Neumann solution operator on mean-zero grid functions and the
// induced H^{-1}_(0) inner product <f,g>_{-1} = <grad u_f, grad u_g>_h.

#include <cmath>
#include <string>

#include "anich/errors.hpp"
#include "anich/grid.hpp"

namespace anich {

struct PoissonOptions {
    double tol = 1e-11;      // on l2(f + lap u), relative to l2(f)
    int max_iter = 0;        // 0: 4 * cells + 100
    bool project_mean = false; // remove mean(f) instead of rejecting incompatible data
};

struct PoissonSolveReport {
    int iterations = 0;
    double residual = 0.0;
    double tolerance = 0.0;
};

struct PoissonResult {
    Field u;
    PoissonSolveReport report;
};

namespace detail {

inline double mean_defect(const Field& f) { return std::abs(mean(f)) * std::sqrt(f.grid.measure()); }

} // namespace detail

/// Solves -lap u = f, mean(u) = 0, by conjugate gradients on the mean-zero subspace.
inline PoissonResult solve_poisson_neumann(Field f, const PoissonOptions& opt = {}) {
    const double fn0 = l2(f);
    if (detail::mean_defect(f) > 1e-10 * fn0) {
        if (!opt.project_mean)
            throw CompatibilityError("solve_poisson_neumann: right-hand side is not mean-zero (mean = " +
                                     std::to_string(mean(f)) + ")");
    }
    subtract_mean(f);
    const double fn = l2(f);
    PoissonResult res{Field(f.grid), {0, 0.0, opt.tol * fn}};
    if (fn == 0.0) return res;

    const int max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(4 * f.grid.cells() + 100);
    const double target = opt.tol * fn;
    Field& u = res.u;
    const std::size_t n = u.size();
    Field r = f, p(f.grid), ap(f.grid);
    auto project = [n](Field& x) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x[i];
        m /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) x[i] -= m;
    };
    int it = 0;
    for (int restart = 0;; ++restart) {
        p = r;
        double rr = inner(r, r);
        while (std::sqrt(rr) > target) {
            if (it >= max_iter)
                throw ConvergenceError("solve_poisson_neumann: no convergence after " + std::to_string(it) +
                                       " iterations (residual " + std::to_string(std::sqrt(rr)) + ")");
            lap_into(p, ap);
            ap *= -1.0;
            project(ap);
            const double alpha = rr / inner(p, ap);
            for (std::size_t i = 0; i < n; ++i) {
                u[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            const double rr_new = inner(r, r);
            const double beta = rr_new / rr;
            rr = rr_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
            ++it;
        }
        // Restart from the recomputed residual so that drift cannot hide.
        project(u);
        lap_into(u, r);
        r += f;
        project(r);
        const double rn = l2(r);
        if (rn <= target || restart >= 5) {
            if (rn > target)
                throw ConvergenceError("solve_poisson_neumann: residual stagnates at " + std::to_string(rn));
            res.report.iterations = it;
            res.report.residual = rn;
            return res;
        }
    }
}

inline double hminus_inner(const Field& f, const Field& g, const PoissonOptions& opt = {}) {
    const Field uf = solve_poisson_neumann(f, opt).u;
    const Field ug = solve_poisson_neumann(g, opt).u;
    return inner(grad(uf), grad(ug));
}

inline double hminus_norm(const Field& f, const PoissonOptions& opt = {}) {
    const Field uf = solve_poisson_neumann(f, opt).u;
    return std::sqrt(inner(grad(uf), grad(uf)));
}

} // namespace anich
