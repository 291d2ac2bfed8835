#pragma once

// Deterministic initial-data generators. Random smooth data are finite sums
// of boundary-compatible cosine modes evaluated at cell centers, so the
// same seed gives the same continuous function on every mesh of a box.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "anich/anisotropy.hpp"
#include "anich/errors.hpp"
#include "anich/grid.hpp"

namespace anich {

struct CosineMode {
    std::array<int, 3> k{0, 0, 0};
    double amplitude = 0.0;
};

struct RandomSmoothSpec {
    double mean = 0.0;
    double amplitude = 0.3;
    double radius = 2.0; // smoothing length; modes are damped by exp(-(|kappa| radius)^2 / 2)
    std::uint64_t seed = 1;
    double max_sup = 0.95; // |mean| + amplitude must not exceed this
};

inline Field constant_field(const Grid& g, double value) { return Field(g, value); }

namespace detail {

inline double wavenumber(const Grid& g, int a, int k) {
    const double L = g.extent(a);
    return (g.bc == Boundary::Neumann ? M_PI : 2.0 * M_PI) * k / L;
}

} // namespace detail

/// mean + sum_j amp_j prod_a cos(kappa_a x_a), kappa = pi k / L (Neumann) or 2 pi k / L (periodic).
inline Field cosine_modes(const Grid& g, double mean_value, const std::vector<CosineMode>& modes) {
    Field f(g, mean_value);
    for (const auto& m : modes) {
        for (std::size_t c = 0; c < g.cells(); ++c) {
            const auto cc = g.coords(c);
            double v = m.amplitude;
            for (int a = 0; a < g.dim; ++a) v *= std::cos(detail::wavenumber(g, a, m.k[a]) * g.center(a, cc[a]));
            f[c] += v;
        }
    }
    return f;
}

/// Mean-zero smooth random field with max |.| = 1 on the grid.
inline Field random_smooth_pattern(const Grid& g, double radius, std::uint64_t seed) {
    if (!(radius > 0.0)) throw ValidationError("initial.radius", "must be positive");
    std::mt19937_64 rng(seed);
    const int kmax = 12;
    struct Term {
        std::array<double, 3> kappa;
        std::array<double, 3> phase;
        double coef;
    };
    std::vector<Term> terms;
    const int kz_max = g.dim == 3 ? kmax : 0;
    for (int kz = 0; kz <= kz_max; ++kz)
        for (int ky = 0; ky <= kmax; ++ky)
            for (int kx = 0; kx <= kmax; ++kx) {
                // Draw for every lattice point so the sequence does not depend on the grid.
                const double u = detail::unit_uniform(rng);
                std::array<double, 3> ph{detail::unit_uniform(rng), detail::unit_uniform(rng), detail::unit_uniform(rng)};
                if (kx == 0 && ky == 0 && kz == 0) continue;
                const std::array<int, 3> k{kx, ky, kz};
                Term t{};
                double k2 = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    t.kappa[a] = detail::wavenumber(g, a, k[a]);
                    k2 += t.kappa[a] * t.kappa[a];
                    t.phase[a] = g.bc == Boundary::Periodic ? 2.0 * M_PI * ph[a] : 0.0;
                }
                const double w = std::exp(-0.5 * k2 * radius * radius);
                if (w < 1e-4) continue;
                t.coef = w * (2.0 * u - 1.0);
                terms.push_back(t);
            }
    Field f(g);
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const auto cc = g.coords(c);
        double s = 0.0;
        for (const auto& t : terms) {
            double v = t.coef;
            for (int a = 0; a < g.dim; ++a) v *= std::cos(t.kappa[a] * g.center(a, cc[a]) + t.phase[a]);
            s += v;
        }
        f[c] = s;
    }
    subtract_mean(f);
    const double m = linf(f);
    if (m > 0.0) f *= 1.0 / m;
    return f;
}

inline Field random_smooth(const Grid& g, const RandomSmoothSpec& spec) {
    if (!(spec.amplitude >= 0.0)) throw ValidationError("initial.amplitude", "must be non-negative");
    if (std::abs(spec.mean) + spec.amplitude > spec.max_sup)
        throw ValidationError("initial.amplitude", "|mean| + amplitude exceeds " + std::to_string(spec.max_sup));
    Field f = random_smooth_pattern(g, spec.radius, spec.seed);
    f *= spec.amplitude;
    // Shift so that the grid mean is exactly the requested value in floating point.
    const double shift = spec.mean - mean(f);
    for (double& x : f.v) x += shift;
    return f;
}

} // namespace anich
