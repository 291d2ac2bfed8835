#pragma once

// Discrete anisotropic gradient energy on the staggered grid.
//
// A convex density of the gradient is integrated with a corner-combination
// rule: in each cell the 2^d one-sided gradients p_sigma (pick the lower or
// upper face difference along each axis) are formed and
//
//     E_grad(phi) = sum_cells |cell| 2^-d sum_sigma A(x_cell, p_sigma).
//
// Its exact variational derivative is -div W with W the face-assembled
// A'(p_sigma), so <-div W, eta>_h = <W, grad eta>_h and the energy identity of
// the time stepper hold without quadrature error. For A = |p|^2/2 the rule
// reduces to W = grad phi, i.e. the standard (2d+1)-point Laplacian.

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Sparse>

#include "anich/anisotropy.hpp"
#include "anich/grid.hpp"

namespace anich {

template <class D>
concept GradientDensity = requires(const D& d, std::size_t cell, const Vec3& p) {
    { d.value(cell, p) } -> std::convertible_to<double>;
    { d.grad(cell, p) } -> std::convertible_to<Vec3>;
    { d.hess(cell, p) } -> std::convertible_to<Mat3>;
};

/// x-independent density A from an AnisotropySpec.
struct AnisotropicDensity {
    const AnisotropySpec* spec;
    double value(std::size_t, const Vec3& p) const { return A_val(*spec, p); }
    Vec3 grad(std::size_t, const Vec3& p) const { return A_grad(*spec, p); }
    Mat3 hess(std::size_t, const Vec3& p) const { return A_hess(*spec, p); }
};

namespace detail {

// Calls fn(cell, weight, p, faces, lo, hi) for every cell and sign combination.
// faces[a] is the face used along axis a; lo/hi are the adjacent cells or -1
// when the face is a Neumann wall (in which case p[a] = 0).
template <class Fn>
void for_each_corner(const Field& phi, const VectorField& g, Fn&& fn) {
    const Grid& grid = phi.grid;
    const int d = grid.dim;
    const int combos = 1 << d;
    const double weight = 1.0 / combos;
    for (std::size_t c = 0; c < grid.cells(); ++c) {
        const auto cc = grid.coords(c);
        std::array<std::size_t, 3> up_face{}, lo_face{};
        std::array<long, 3> up_nb{}, lo_nb{};
        for (int a = 0; a < d; ++a) {
            up_face[a] = grid.cell_face(cc, a, +1);
            lo_face[a] = grid.cell_face(cc, a, -1);
            up_nb[a] = grid.neighbour(cc, a, +1);
            lo_nb[a] = grid.neighbour(cc, a, -1);
        }
        for (int s = 0; s < combos; ++s) {
            Vec3 p = Vec3::Zero();
            std::array<std::size_t, 3> faces{};
            std::array<long, 3> lo{-1, -1, -1}, hi{-1, -1, -1};
            for (int a = 0; a < d; ++a) {
                const bool upper = (s >> a) & 1;
                faces[a] = upper ? up_face[a] : lo_face[a];
                p[a] = g.comp[a][faces[a]];
                const long nb = upper ? up_nb[a] : lo_nb[a];
                if (nb >= 0) {
                    lo[a] = upper ? static_cast<long>(c) : nb;
                    hi[a] = upper ? nb : static_cast<long>(c);
                }
            }
            fn(c, weight, p, faces, lo, hi);
        }
    }
}

} // namespace detail

template <GradientDensity D>
double gradient_energy(const Field& phi, const D& density) {
    const VectorField g = grad(phi);
    double e = 0.0;
    detail::for_each_corner(phi, g, [&](std::size_t c, double w, const Vec3& p, auto&, auto&, auto&) {
        e += w * density.value(c, p);
    });
    return e * phi.grid.cell_volume();
}

/// Face-assembled flux W(phi), the discrete A'(grad phi). Zero on Neumann walls.
template <GradientDensity D>
VectorField gradient_flux(const Field& phi, const D& density) {
    const Grid& grid = phi.grid;
    const VectorField g = grad(phi);
    VectorField w(grid);
    detail::for_each_corner(phi, g, [&](std::size_t c, double wt, const Vec3& p, const auto& faces, const auto& lo,
                                        auto&) {
        const Vec3 q = density.grad(c, p);
        for (int a = 0; a < grid.dim; ++a)
            if (lo[a] >= 0) w.comp[a][faces[a]] += wt * q[a];
    });
    return w;
}

/// Appends scale * d(-div W)/d(phi) as triplets at the given block offset.
template <GradientDensity D>
void add_gradient_hessian(const Field& phi, const D& density, double scale, long row_off, long col_off,
                          std::vector<Eigen::Triplet<double>>& out) {
    const Grid& grid = phi.grid;
    const VectorField g = grad(phi);
    const int d = grid.dim;
    detail::for_each_corner(phi, g, [&](std::size_t c, double wt, const Vec3& p, auto&, const auto& lo, const auto& hi) {
        const Mat3 H = density.hess(c, p);
        for (int a = 0; a < d; ++a) {
            if (lo[a] < 0) continue;
            for (int b = 0; b < d; ++b) {
                if (lo[b] < 0) continue;
                const double coef = scale * wt * H(a, b) / (grid.h[a] * grid.h[b]);
                // D_a = (e_hi - e_lo) / h_a, contribution coef * D_a D_b^T.
                out.emplace_back(row_off + hi[a], col_off + hi[b], coef);
                out.emplace_back(row_off + hi[a], col_off + lo[b], -coef);
                out.emplace_back(row_off + lo[a], col_off + hi[b], -coef);
                out.emplace_back(row_off + lo[a], col_off + lo[b], coef);
            }
        }
    });
}

/// Appends scale * div(coeff grad .) as triplets; coeff lives on faces.
inline void add_weighted_laplacian(const VectorField& coeff, double scale, long row_off, long col_off,
                                   std::vector<Eigen::Triplet<double>>& out) {
    const Grid& grid = coeff.grid;
    for (std::size_t c = 0; c < grid.cells(); ++c) {
        const auto cc = grid.coords(c);
        for (int a = 0; a < grid.dim; ++a) {
            const long nb = grid.neighbour(cc, a, +1);
            if (nb < 0) continue;
            const double m = coeff.comp[a][grid.cell_face(cc, a, +1)];
            const double k = scale * m / (grid.h[a] * grid.h[a]);
            const long lo = static_cast<long>(c);
            out.emplace_back(row_off + lo, col_off + nb, k);
            out.emplace_back(row_off + lo, col_off + lo, -k);
            out.emplace_back(row_off + nb, col_off + lo, k);
            out.emplace_back(row_off + nb, col_off + nb, -k);
        }
    }
}

} // namespace anich
