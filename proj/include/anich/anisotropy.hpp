#pragma once

// Convex, positively two-homogeneous anisotropy densities A = gamma^2 / 2 built
// from ellipsoidal norms gamma(p) = sqrt(p^T G p), their exact gradients and
// generalized Hessians, and sampling estimators for the ellipticity constants.
//
// Vectors are stored in a fixed 3-component layout; for d = 2 the third
// component is zero and ignored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anich/errors.hpp"

namespace anich {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class AnisotropyKind { Isotropic, Ellipsoidal, SumOfEllipsoids };

struct AnisotropySpec {
    AnisotropyKind kind = AnisotropyKind::Isotropic;
    int dim = 2;
    std::vector<Mat3> mats; // one per ellipsoid, zero-padded beyond dim
};

struct AnisotropyConstants {
    double A0 = 0.0; // min of 2A on the unit sphere
    double A1 = 0.0; // max of 2A on the unit sphere
    double a0 = 0.0; // strong monotonicity of A'
    double a1 = 0.0; // growth bound |A'(p)| <= a1 |p|
};

namespace detail {

inline Mat3 validated_matrix(const Eigen::MatrixXd& g, int dim) {
    if (g.rows() != dim || g.cols() != dim)
        throw ValidationError("anisotropy.matrix", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                                                       " matrix");
    if (!g.allFinite()) throw ValidationError("anisotropy.matrix", "non-finite entries");
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
        throw ValidationError("anisotropy.matrix", "matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (!(es.eigenvalues().minCoeff() > 0.0))
        throw ValidationError("anisotropy.matrix", "matrix is not positive definite");
    Mat3 out = Mat3::Zero();
    out.topLeftCorner(dim, dim) = 0.5 * (g + g.transpose());
    return out;
}

inline void check_dim(int dim) {
    if (dim != 2 && dim != 3) throw ValidationError("anisotropy.dim", "dimension must be 2 or 3");
}

} // namespace detail

inline AnisotropySpec make_isotropic(int dim) {
    detail::check_dim(dim);
    return AnisotropySpec{AnisotropyKind::Isotropic, dim, {}};
}

inline AnisotropySpec make_ellipsoidal(const Eigen::MatrixXd& g) {
    const int dim = static_cast<int>(g.rows());
    detail::check_dim(dim);
    return AnisotropySpec{AnisotropyKind::Ellipsoidal, dim, {detail::validated_matrix(g, dim)}};
}

inline AnisotropySpec make_sum_of_ellipsoids(const std::vector<Eigen::MatrixXd>& gs) {
    if (gs.empty()) throw ValidationError("anisotropy.matrix", "sum of ellipsoids needs at least one matrix");
    const int dim = static_cast<int>(gs.front().rows());
    detail::check_dim(dim);
    AnisotropySpec spec{AnisotropyKind::SumOfEllipsoids, dim, {}};
    for (const auto& g : gs) spec.mats.push_back(detail::validated_matrix(g, dim));
    return spec;
}

inline std::string anisotropy_kind_name(AnisotropyKind k) {
    switch (k) {
    case AnisotropyKind::Isotropic: return "isotropic";
    case AnisotropyKind::Ellipsoidal: return "ellipsoidal";
    case AnisotropyKind::SumOfEllipsoids: return "sum_of_ellipsoids";
    }
    return "unknown";
}

inline double gamma(const AnisotropySpec& spec, const Vec3& p) {
    switch (spec.kind) {
    case AnisotropyKind::Isotropic: return p.norm();
    case AnisotropyKind::Ellipsoidal: return std::sqrt(std::max(0.0, p.dot(spec.mats[0] * p)));
    case AnisotropyKind::SumOfEllipsoids: {
        double g = 0.0;
        for (const auto& m : spec.mats) g += std::sqrt(std::max(0.0, p.dot(m * p)));
        return g;
    }
    }
    return 0.0;
}

inline double A_val(const AnisotropySpec& spec, const Vec3& p) {
    switch (spec.kind) {
    case AnisotropyKind::Isotropic: return 0.5 * p.squaredNorm();
    case AnisotropyKind::Ellipsoidal: return 0.5 * p.dot(spec.mats[0] * p);
    case AnisotropyKind::SumOfEllipsoids: {
        const double g = gamma(spec, p);
        return 0.5 * g * g;
    }
    }
    return 0.0;
}

/// Exact gradient A'(p); A'(0) = 0 for every kind.
inline Vec3 A_grad(const AnisotropySpec& spec, const Vec3& p) {
    switch (spec.kind) {
    case AnisotropyKind::Isotropic: return p;
    case AnisotropyKind::Ellipsoidal: return spec.mats[0] * p;
    case AnisotropyKind::SumOfEllipsoids: {
        double g = 0.0;
        Vec3 s = Vec3::Zero();
        for (const auto& m : spec.mats) {
            const Vec3 mp = m * p;
            const double gi = std::sqrt(std::max(0.0, p.dot(mp)));
            g += gi;
            if (gi > 0.0) s += mp / gi;
        }
        return g * s;
    }
    }
    return Vec3::Zero();
}

/// Hessian of A. For the sum of ellipsoids A is only C^{1,1}; the selection at
/// p = 0 comes from regularizing each p^T G_i p by 1e-14 |G_i|.
inline Mat3 A_hess(const AnisotropySpec& spec, const Vec3& p) {
    switch (spec.kind) {
    case AnisotropyKind::Isotropic: {
        Mat3 h = Mat3::Zero();
        h.topLeftCorner(spec.dim, spec.dim).setIdentity();
        return h;
    }
    case AnisotropyKind::Ellipsoidal: return spec.mats[0];
    case AnisotropyKind::SumOfEllipsoids: {
        double g = 0.0;
        Vec3 s = Vec3::Zero();
        Mat3 t = Mat3::Zero();
        for (const auto& m : spec.mats) {
            const Vec3 mp = m * p;
            const double reg = 1e-14 * m.norm() * std::max(1.0, p.squaredNorm());
            const double gi = std::sqrt(std::max(0.0, p.dot(mp)) + reg);
            g += gi;
            s += mp / gi;
            t += m / gi - (mp * mp.transpose()) / (gi * gi * gi);
        }
        return s * s.transpose() + g * t;
    }
    }
    return Mat3::Zero();
}

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(std::mt19937_64& rng) {
    // Box-Muller on our own uniforms so that sequences are library independent.
    double u1 = unit_uniform(rng);
    while (u1 <= 0.0) u1 = unit_uniform(rng);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Vec3 random_vector(std::mt19937_64& rng, int dim) {
    Vec3 v = Vec3::Zero();
    for (int a = 0; a < dim; ++a) v[a] = standard_normal(rng);
    return v;
}

inline Vec3 random_unit(std::mt19937_64& rng, int dim) {
    Vec3 v = random_vector(rng, dim);
    while (v.norm() == 0.0) v = random_vector(rng, dim);
    return v / v.norm();
}

// Deterministic quasi-uniform points on the unit circle / sphere.
inline std::vector<Vec3> sphere_points(int dim, int count) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(count));
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double t = 2.0 * M_PI * (i + 0.5) / count;
            pts.emplace_back(std::cos(t), std::sin(t), 0.0);
        }
    } else {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * i;
            pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
        }
    }
    return pts;
}

// Random-perturbation hill climbing of a scale-invariant objective on the sphere.
template <class Objective>
Vec3 refine_on_sphere(Vec3 start, int dim, Objective&& obj, std::mt19937_64& rng, bool maximize) {
    double best = obj(start);
    double step = 0.05;
    for (int it = 0; it < 400 && step > 1e-9; ++it) {
        Vec3 trial = start + step * random_vector(rng, dim);
        trial /= trial.norm();
        const double v = obj(trial);
        if (maximize ? v > best : v < best) {
            best = v;
            start = trial;
        } else if (it % 8 == 7) {
            step *= 0.5;
        }
    }
    return start;
}

} // namespace detail

/// Sampling estimates of the constants A0, A1, a0, a1. The values are
/// estimates from deterministic sphere sampling plus local refinement, not
/// certified bounds.
inline AnisotropyConstants estimate_constants(const AnisotropySpec& spec, int sample_count, std::uint64_t seed) {
    if (sample_count < 1000) throw PreconditionError("estimate_constants: sample_count must be >= 1000");
    const int dim = spec.dim;
    std::mt19937_64 rng(seed);

    auto twoA = [&](const Vec3& u) { return 2.0 * A_val(spec, u); };
    auto grad_growth = [&](const Vec3& u) { return A_grad(spec, u).norm(); };

    const auto pts = detail::sphere_points(dim, sample_count);
    Vec3 arg_min = pts[0], arg_max = pts[0], arg_growth = pts[0];
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin, gmax = -vmin;
    for (const auto& u : pts) {
        const double v = twoA(u);
        if (v < vmin) { vmin = v; arg_min = u; }
        if (v > vmax) { vmax = v; arg_max = u; }
        const double g = grad_growth(u);
        if (g > gmax) { gmax = g; arg_growth = u; }
    }
    AnisotropyConstants c;
    c.A0 = std::min(vmin, twoA(detail::refine_on_sphere(arg_min, dim, twoA, rng, false)));
    c.A1 = std::max(vmax, twoA(detail::refine_on_sphere(arg_max, dim, twoA, rng, true)));
    c.a1 = std::max(gmax, grad_growth(detail::refine_on_sphere(arg_growth, dim, grad_growth, rng, true)));

    // Strong monotonicity: the quotient is invariant under joint scaling of (p,q),
    // so pairs are drawn with |p| = 1 and q = p + r w for random r and direction w.
    auto quotient = [&](const Vec3& p, const Vec3& q) {
        const Vec3 d = p - q;
        return (A_grad(spec, p) - A_grad(spec, q)).dot(d) / d.squaredNorm();
    };
    double qmin = std::numeric_limits<double>::infinity();
    Vec3 best_p = Vec3::Zero(), best_q = Vec3::Zero();
    for (int i = 0; i < sample_count; ++i) {
        const Vec3 p = detail::random_unit(rng, dim);
        const double r = std::exp(4.0 * (detail::unit_uniform(rng) - 0.5)); // radii in (e^-2, e^2)
        const Vec3 q = p + r * detail::random_unit(rng, dim);
        if ((p - q).norm() == 0.0) continue;
        const double v = quotient(p, q);
        if (v < qmin) { qmin = v; best_p = p; best_q = q; }
    }
    double step = 0.05;
    for (int it = 0; it < 2000 && step > 1e-10; ++it) {
        const Vec3 p = best_p + step * detail::random_vector(rng, dim);
        const Vec3 q = best_q + step * detail::random_vector(rng, dim);
        if ((p - q).norm() < 1e-8) continue;
        const double v = quotient(p, q);
        if (v < qmin) {
            qmin = v;
            best_p = p;
            best_q = q;
        } else if (it % 10 == 9) {
            step *= 0.7;
        }
    }
    c.a0 = qmin;

    if (!(c.A0 > 0.0) || !(c.A1 > 0.0) || !(c.a0 > 0.0) || !(c.a1 > 0.0))
        throw DegenerateError("estimate_constants: non-positive constant estimate");
    return c;
}

} // namespace anich
