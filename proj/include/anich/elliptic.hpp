#pragma once

// Quasilinear Neumann problem -div a(x, grad u) = f on a box, with
// a(x,p) = R(x)^T A'(R(x) p) for a smooth rotation field R, solved by a
// Poisson-preconditioned Zarantonello iteration. Also a discrete H^2 norm and
// the mesh study of ||u||_H2 / (||f|| + ||u|| + 1).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "anich/anisotropy.hpp"
#include "anich/errors.hpp"
#include "anich/gradient_energy.hpp"
#include "anich/grid.hpp"
#include "anich/hminus.hpp"

namespace anich {

/// Rotation about the z axis by angle(x).
inline Mat3 rotation_z(double angle) {
    Mat3 r = Mat3::Identity();
    const double c = std::cos(angle), s = std::sin(angle);
    r(0, 0) = c;
    r(0, 1) = -s;
    r(1, 0) = s;
    r(1, 1) = c;
    return r;
}

struct QuasilinearFlux {
    AnisotropySpec base;
    std::function<double(const Vec3&)> angle; // rotation angle field
    double angle_lipschitz = 0.0;             // bound on |grad angle|
    double C_L = 0.0;
    double C_M = 0.0;
    double C_Q = 0.0;

    Mat3 rotation(const Vec3& x) const { return angle ? rotation_z(angle(x)) : Mat3::Identity(); }

    Vec3 eval(const Vec3& x, const Vec3& p) const {
        const Mat3 r = rotation(x);
        return r.transpose() * A_grad(base, r * p);
    }
};

struct FluxCheck {
    int samples = 0;
    int lipschitz_violations = 0;
    int monotone_violations = 0;
    int quasi_violations = 0;
    double worst_lipschitz = 0.0; // sampled sup |a(x,p)-a(x,q)| / |p-q|
    double worst_monotone = 0.0;  // sampled inf <a(x,p)-a(x,q), p-q> / |p-q|^2
    double worst_quasi = 0.0;     // sampled sup |a(x,p)-a(y,p)| / ((|p|+1)|x-y|)
    bool ok() const { return lipschitz_violations == 0 && monotone_violations == 0 && quasi_violations == 0; }
};

/// Samples random (x, y, p, q) in the box [0, extent] and |p|,|q| <= 10.
inline FluxCheck check_flux(const QuasilinearFlux& flux, const Vec3& extent, int samples = 10000,
                            std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    const int d = flux.base.dim;
    FluxCheck fc;
    fc.samples = samples;
    fc.worst_monotone = std::numeric_limits<double>::infinity();
    const double slack = 1e-12;
    auto point = [&] {
        Vec3 x = Vec3::Zero();
        for (int a = 0; a < d; ++a) x[a] = extent[a] * detail::unit_uniform(rng);
        return x;
    };
    auto vec = [&] {
        Vec3 p = Vec3::Zero();
        for (int a = 0; a < d; ++a) p[a] = 10.0 * (2.0 * detail::unit_uniform(rng) - 1.0);
        return p;
    };
    for (int i = 0; i < samples; ++i) {
        const Vec3 x = point(), y = point(), p = vec(), q = vec();
        const Vec3 ap = flux.eval(x, p), aq = flux.eval(x, q);
        const double dpq = (p - q).norm();
        if (dpq > 0.0) {
            const double lip = (ap - aq).norm() / dpq;
            const double mon = (ap - aq).dot(p - q) / (dpq * dpq);
            fc.worst_lipschitz = std::max(fc.worst_lipschitz, lip);
            fc.worst_monotone = std::min(fc.worst_monotone, mon);
            if (lip > flux.C_L * (1.0 + slack)) ++fc.lipschitz_violations;
            if (mon < flux.C_M * (1.0 - slack)) ++fc.monotone_violations;
        }
        const double dxy = (x - y).norm();
        if (dxy > 0.0) {
            const double qv = (ap - flux.eval(y, p)).norm() / ((p.norm() + 1.0) * dxy);
            fc.worst_quasi = std::max(fc.worst_quasi, qv);
            if (qv > flux.C_Q * (1.0 + slack)) ++fc.quasi_violations;
        }
    }
    return fc;
}

/// Ellipsoidal base A(p) = p.G p / 2 rotated by angle(x). The constants are
/// C_M = lambda_min(G), C_L = lambda_max(G) and, in 2D, C_Q = (lambda_max - lambda_min) * angle_lipschitz.
/// Construction aborts on any sampled violation.
inline QuasilinearFlux make_rotated_ellipsoidal(const Eigen::MatrixXd& G, std::function<double(const Vec3&)> angle,
                                                double angle_lipschitz, const Vec3& extent) {
    QuasilinearFlux flux;
    flux.base = make_ellipsoidal(G);
    flux.angle = std::move(angle);
    flux.angle_lipschitz = angle_lipschitz;
    const int d = flux.base.dim;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(flux.base.mats[0].topLeftCorner(d, d));
    flux.C_M = es.eigenvalues().minCoeff();
    flux.C_L = es.eigenvalues().maxCoeff();
    flux.C_Q = (d == 2 ? flux.C_L - flux.C_M : 2.0 * flux.C_L) * angle_lipschitz;
    const FluxCheck fc = check_flux(flux, extent);
    if (!fc.ok())
        throw ValidationError("flux", "sampled structure conditions violated (lipschitz " +
                                          std::to_string(fc.lipschitz_violations) + ", monotone " +
                                          std::to_string(fc.monotone_violations) + ", quasi-lipschitz " +
                                          std::to_string(fc.quasi_violations) + ")");
    return flux;
}

inline QuasilinearFlux make_isotropic_flux(int dim) {
    QuasilinearFlux flux;
    flux.base = make_isotropic(dim);
    flux.C_L = flux.C_M = 1.0;
    flux.C_Q = 0.0;
    return flux;
}

/// Cell-frozen density A(R(x_c) p) on a specific grid.
struct RotatedDensity {
    const QuasilinearFlux* flux;
    std::vector<Mat3> rot;

    RotatedDensity(const QuasilinearFlux& f, const Grid& g) : flux(&f), rot(g.cells()) {
        for (std::size_t c = 0; c < g.cells(); ++c) {
            const auto cc = g.coords(c);
            Vec3 x = Vec3::Zero();
            for (int a = 0; a < g.dim; ++a) x[a] = g.center(a, cc[a]);
            rot[c] = f.rotation(x);
        }
    }
    double value(std::size_t c, const Vec3& p) const { return A_val(flux->base, rot[c] * p); }
    Vec3 grad(std::size_t c, const Vec3& p) const { return rot[c].transpose() * A_grad(flux->base, rot[c] * p); }
    Mat3 hess(std::size_t c, const Vec3& p) const {
        return rot[c].transpose() * A_hess(flux->base, rot[c] * p) * rot[c];
    }
};

struct QuasilinearOptions {
    double tol = 1e-10; // on the dual norm of the weak-form residual
    int max_iter = 2000;
};

struct QuasilinearResult {
    Field u;
    int iterations = 0;
    double residual = 0.0;         // ||K(u) - f||_{-1}
    double contraction = 0.0;      // sqrt(1 - C_M^2 / C_L^2)
    std::vector<double> history;   // preconditioned residual per iteration
    bool strictly_decreasing = true;
};

/// Discrete operator K(u) = -div W(u), the weak form <W(u), grad v>_h.
inline Field quasilinear_operator(const RotatedDensity& dens, const Field& u) {
    Field k = div(gradient_flux(u, dens));
    k *= -1.0;
    return k;
}

inline QuasilinearResult solve_quasilinear(const QuasilinearFlux& flux, const Field& f,
                                           const QuasilinearOptions& opt = {}) {
    const Grid& g = f.grid;
    if (g.bc != Boundary::Neumann) throw ValidationError("grid.bc", "the quasilinear probe is posed with Neumann data");
    if (std::abs(mean(f)) > 1e-10) throw CompatibilityError("solve_quasilinear: mean(f) must vanish");
    if (!(flux.C_M > 0.0 && flux.C_L >= flux.C_M)) throw ValidationError("flux", "require 0 < C_M <= C_L");
    QuasilinearResult res;
    res.contraction = std::sqrt(1.0 - (flux.C_M * flux.C_M) / (flux.C_L * flux.C_L));
    if (!(res.contraction < 1.0)) throw StagnationError("solve_quasilinear: contraction factor estimate >= 1");

    const RotatedDensity dens(flux, g);
    const double step = flux.C_M / (flux.C_L * flux.C_L);
    PoissonOptions popt;
    popt.project_mean = true;
    res.u = Field(g);
    for (int it = 0;; ++it) {
        Field r = quasilinear_operator(dens, res.u);
        r -= f;
        const Field z = solve_poisson_neumann(r, popt).u;
        const double rn = l2(grad(z));
        if (!res.history.empty() && !(rn < res.history.back())) res.strictly_decreasing = false;
        res.history.push_back(rn);
        res.residual = rn;
        res.iterations = it;
        if (rn <= opt.tol) break;
        if (it >= opt.max_iter)
            throw StagnationError("solve_quasilinear: no convergence after " + std::to_string(it) +
                                  " iterations (residual " + std::to_string(rn) + ")");
        for (std::size_t i = 0; i < res.u.size(); ++i) res.u[i] -= step * z[i];
    }
    subtract_mean(res.u);
    return res;
}

/// <W(u), grad v>_h - <f, v>_h.
inline double weak_form_defect(const QuasilinearFlux& flux, const Field& u, const Field& f, const Field& v) {
    const RotatedDensity dens(flux, u.grid);
    return inner(gradient_flux(u, dens), grad(v)) - inner(f, v);
}

/// sqrt(||D^2 u||^2 + ||grad u||^2 + ||u||^2) from second differences. Pure
/// second differences are centered, shifted one cell inward at Neumann walls;
/// mixed differences live on interior vertices and count twice.
inline double h2_norm(const Field& u) {
    const Grid& g = u.grid;
    const double vol = g.cell_volume();
    double d2 = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const auto cc = g.coords(c);
        for (int a = 0; a < g.dim; ++a) {
            std::array<int, 3> m = cc;
            if (g.bc == Boundary::Neumann) {
                m[a] = std::clamp(cc[a], 1, g.n[a] - 2);
            }
            auto at = [&](int off) {
                std::array<int, 3> q = m;
                q[a] = (q[a] + off + g.n[a]) % g.n[a];
                return u[g.index(q[0], q[1], q[2])];
            };
            const double v = (at(1) - 2.0 * at(0) + at(-1)) / (g.h[a] * g.h[a]);
            d2 += v * v * vol;
        }
    }
    for (int a = 0; a < g.dim; ++a)
        for (int b = a + 1; b < g.dim; ++b) {
            const int ea = g.bc == Boundary::Neumann ? g.n[a] - 1 : g.n[a];
            const int eb = g.bc == Boundary::Neumann ? g.n[b] - 1 : g.n[b];
            const int other = 3 - a - b;
            const int eo = g.dim == 3 ? g.n[other] : 1;
            for (int k = 0; k < eo; ++k)
                for (int j = 0; j < eb; ++j)
                    for (int i = 0; i < ea; ++i) {
                        auto at = [&](int di, int dj) {
                            std::array<int, 3> q{0, 0, 0};
                            q[a] = (i + di) % g.n[a];
                            q[b] = (j + dj) % g.n[b];
                            if (g.dim == 3) q[other] = k;
                            return u[g.index(q[0], q[1], q[2])];
                        };
                        const double v = (at(1, 1) - at(1, 0) - at(0, 1) + at(0, 0)) / (g.h[a] * g.h[b]);
                        d2 += 2.0 * v * v * vol;
                    }
        }
    const VectorField gr = grad(u);
    return std::sqrt(d2 + inner(gr, gr) + inner(u, u));
}

struct H2StudyRow {
    int cells = 0;
    double ratio = 0.0;
    double h2 = 0.0;
    double f_l2 = 0.0;
    double u_l2 = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool strictly_decreasing = true;
};

struct H2Study {
    std::vector<H2StudyRow> rows;
    double spread = 1.0; // max ratio / min ratio
};

/// Solves on each uniform mesh of the box [0, extent]^d with f sampled at cell centers (mean removed).
inline H2Study h2_ratio_study(const QuasilinearFlux& flux, const std::function<double(double, double, double)>& f,
                              const std::vector<int>& meshes, double extent = 1.0,
                              const QuasilinearOptions& opt = {}) {
    H2Study st;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int m : meshes) {
        const Grid g = Grid::uniform(flux.base.dim, m, extent / m, Boundary::Neumann);
        Field fh = sample(g, f);
        subtract_mean(fh);
        const QuasilinearResult sol = solve_quasilinear(flux, fh, opt);
        H2StudyRow row;
        row.cells = m;
        row.h2 = h2_norm(sol.u);
        row.f_l2 = l2(fh);
        row.u_l2 = l2(sol.u);
        row.ratio = row.h2 / (row.f_l2 + row.u_l2 + 1.0);
        row.residual = sol.residual;
        row.iterations = sol.iterations;
        row.strictly_decreasing = sol.strictly_decreasing;
        lo = std::min(lo, row.ratio);
        hi = std::max(hi, row.ratio);
        st.rows.push_back(row);
    }
    st.spread = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    return st;
}

} // namespace anich
