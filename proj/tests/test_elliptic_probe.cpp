#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "anich/elliptic.hpp"

using namespace anich;

namespace {

Eigen::MatrixXd G2() {
    Eigen::MatrixXd g(2, 2);
    g << 1.5, 0.0, 0.0, 1.0;
    return g;
}

double angle_field(const Vec3& x) { return 0.5 * std::sin(M_PI * x[0]) * std::cos(M_PI * x[1]); }
const double kAngleLip = 0.5 * M_PI * std::sqrt(2.0);

QuasilinearFlux rotated() { return make_rotated_ellipsoidal(G2(), angle_field, kAngleLip, Vec3(1, 1, 0)); }

Field smooth_source(const Grid& g) {
    Field f = sample(g, [](double x, double y, double) {
        return std::cos(M_PI * x) * std::cos(2 * M_PI * y) + 0.3 * std::cos(3 * M_PI * x) - std::sin(2 * M_PI * y);
    });
    subtract_mean(f);
    return f;
}

Field random_field(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Field v(g);
    for (auto& x : v.v) x = nd(rng);
    return v;
}

} // namespace

TEST(Flux, RotationIsOrthogonal) {
    for (double th : {0.0, 0.3, -1.2, 2.5}) {
        const Mat3 r = rotation_z(th);
        EXPECT_LE((r.transpose() * r - Mat3::Identity()).norm(), 1e-15);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-15);
    }
}

TEST(Flux, ConjugatedEllipsoid) {
    const auto flux = rotated();
    EXPECT_DOUBLE_EQ(flux.C_M, 1.0);
    EXPECT_DOUBLE_EQ(flux.C_L, 1.5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Vec3 x(u(rng), u(rng), 0), p(u(rng) - 0.5, u(rng) - 0.5, 0);
        const double th = angle_field(x);
        Eigen::Matrix2d R;
        R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        const Eigen::Vector2d ref = R.transpose() * G2() * R * p.head<2>();
        EXPECT_LE((flux.eval(x, p).head<2>() - ref).norm(), 1e-14);
    }
}

TEST(Flux, SampledAxiomsHold) {
    const auto flux = rotated();
    const auto fc = check_flux(flux, Vec3(1, 1, 0), 10000, 123);
    EXPECT_EQ(fc.samples, 10000);
    EXPECT_TRUE(fc.ok());
    EXPECT_LE(fc.worst_lipschitz, flux.C_L * (1 + 1e-12));
    EXPECT_GE(fc.worst_monotone, flux.C_M * (1 - 1e-12));
    EXPECT_LE(fc.worst_quasi, flux.C_Q * (1 + 1e-12));
}

TEST(Flux, UnderstatedConstantsAreDetected) {
    auto flux = rotated();
    flux.C_L *= 0.8;
    EXPECT_GT(check_flux(flux, Vec3(1, 1, 0)).lipschitz_violations, 0);
    flux = rotated();
    flux.C_M *= 1.2;
    EXPECT_GT(check_flux(flux, Vec3(1, 1, 0)).monotone_violations, 0);
    EXPECT_THROW(make_rotated_ellipsoidal(G2(), angle_field, 0.05, Vec3(1, 1, 0)), ValidationError);
}

TEST(Quasilinear, ZeroSource) {
    const Grid g = Grid::uniform(2, 16, 1.0 / 16, Boundary::Neumann);
    const auto res = solve_quasilinear(rotated(), Field(g));
    for (double x : res.u.v) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(res.iterations, 0);
}

TEST(Quasilinear, IsotropicMatchesPoisson) {
    const Grid g = Grid::uniform(2, 32, 1.0 / 32, Boundary::Neumann);
    const Field f = smooth_source(g);
    const auto q = solve_quasilinear(make_isotropic_flux(2), f);
    PoissonOptions opt;
    opt.tol = 1e-13;
    const auto p = solve_poisson_neumann(f, opt);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(q.u[i], p.u[i], 1e-9);
}

TEST(Quasilinear, WeakFormResidualConstantRotation) {
    const Grid g = Grid::uniform(2, 32, 1.0 / 32, Boundary::Neumann);
    Eigen::MatrixXd G(2, 2);
    G << 2.0, 0.4, 0.4, 1.0;
    const auto flux = make_rotated_ellipsoidal(G, [](const Vec3&) { return 0.7; }, 0.0, Vec3(1, 1, 0));
    const Field f = smooth_source(g);
    QuasilinearOptions opt;
    const auto res = solve_quasilinear(flux, f, opt);
    EXPECT_LE(res.residual, opt.tol);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        const Field v = random_field(g, rng);
        EXPECT_LE(std::abs(weak_form_defect(flux, res.u, f, v)), opt.tol * l2(grad(v)));
    }
}

TEST(Quasilinear, VariableRotationConvergesMonotonically) {
    const Grid g = Grid::uniform(2, 32, 1.0 / 32, Boundary::Neumann);
    const Field f = smooth_source(g);
    const auto flux = rotated();
    const auto res = solve_quasilinear(flux, f);
    EXPECT_TRUE(res.strictly_decreasing);
    for (std::size_t k = 1; k < res.history.size(); ++k) EXPECT_LT(res.history[k], res.history[k - 1]);
    EXPECT_NEAR(res.contraction, std::sqrt(1 - 1.0 / 2.25), 1e-15);
    EXPECT_NEAR(mean(res.u), 0.0, 1e-14);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        const Field v = random_field(g, rng);
        EXPECT_LE(std::abs(weak_form_defect(flux, res.u, f, v)), 1e-10 * l2(grad(v)));
    }
}

TEST(Quasilinear, Errors) {
    const Grid g = Grid::uniform(2, 8, 0.125, Boundary::Neumann);
    EXPECT_THROW(solve_quasilinear(rotated(), Field(g, 1.0)), CompatibilityError);
    EXPECT_THROW(solve_quasilinear(rotated(), Field(Grid::uniform(2, 8, 0.125, Boundary::Periodic))), ValidationError);
    auto bad = rotated();
    bad.C_M = 0.0;
    EXPECT_THROW(solve_quasilinear(bad, Field(g)), ValidationError);
    QuasilinearOptions opt;
    opt.max_iter = 2;
    EXPECT_THROW(solve_quasilinear(rotated(), smooth_source(g), opt), StagnationError);
}

TEST(Quasilinear, ThreeDimensional) {
    const Grid g = Grid::uniform(3, 8, 0.125, Boundary::Neumann);
    Eigen::MatrixXd G = Eigen::MatrixXd::Identity(3, 3);
    G(0, 0) = 1.3;
    G(2, 2) = 0.8;
    const auto flux = make_rotated_ellipsoidal(G, [](const Vec3& x) { return 0.3 * std::sin(M_PI * x[2]); },
                                               0.3 * M_PI, Vec3(1, 1, 1));
    Field f = sample(g, [](double x, double y, double z) { return std::cos(M_PI * x) + std::cos(M_PI * y) * std::cos(M_PI * z); });
    subtract_mean(f);
    const auto res = solve_quasilinear(flux, f);
    EXPECT_TRUE(res.strictly_decreasing);
    std::mt19937_64 rng(4);
    const Field v = random_field(g, rng);
    EXPECT_LE(std::abs(weak_form_defect(flux, res.u, f, v)), 1e-10 * l2(grad(v)));
}

TEST(H2, EigenmodeClosedForm) {
    for (int n : {16, 32}) {
        const double h = 1.0 / n, vol = h * h;
        const double sigma = (2.0 / (h * h)) * (1 - std::cos(M_PI * h));
        auto c = [&](int i) { return std::cos(M_PI * (i + 0.5) * h); };
        double sum_c2 = 0.0;
        for (int i = 0; i < n; ++i) sum_c2 += c(i) * c(i);
        const double f2 = n * vol * sum_c2;
        const double u2 = f2 / (sigma * sigma), g2 = f2 / sigma;
        const double d2 = n * vol * (sum_c2 - c(0) * c(0) - c(n - 1) * c(n - 1) + c(1) * c(1) + c(n - 2) * c(n - 2));
        const double expected = std::sqrt(d2 + g2 + u2) / (std::sqrt(f2) + std::sqrt(u2) + 1.0);

        const auto st = h2_ratio_study(make_isotropic_flux(2), [](double x, double, double) { return std::cos(M_PI * x); },
                                       {n});
        ASSERT_EQ(st.rows.size(), 1u);
        EXPECT_NEAR(st.rows[0].ratio, expected, 1e-8 * expected);
    }
}

TEST(H2, ZeroSourceGivesZeroRatio) {
    const auto st = h2_ratio_study(rotated(), [](double, double, double) { return 0.0; }, {16, 32});
    for (const auto& r : st.rows) EXPECT_EQ(r.ratio, 0.0);
    EXPECT_EQ(st.spread, 1.0);
}

TEST(H2, NormOfQuadraticIsExactInInterior) {
    // u = x^2 has D_xx u = 2 at every cell, shifted rows included.
    const Grid g = Grid::uniform(2, 8, 0.25, Boundary::Neumann);
    const Field u = sample(g, [](double x, double, double) { return x * x; });
    const VectorField gr = grad(u);
    const double expected = std::sqrt(4.0 * g.measure() + inner(gr, gr) + inner(u, u));
    EXPECT_NEAR(h2_norm(u), expected, 1e-12 * expected);
}

TEST(H2, MixedDerivativeOfBilinear) {
    // u = x y: only the mixed difference is non-zero, equal to 1 on (n-1)^2 vertices, counted twice.
    const Grid g = Grid::uniform(2, 8, 0.25, Boundary::Neumann);
    const Field u = sample(g, [](double x, double y, double) { return x * y; });
    const VectorField gr = grad(u);
    const double expected = std::sqrt(2.0 * 49 * g.cell_volume() + inner(gr, gr) + inner(u, u));
    EXPECT_NEAR(h2_norm(u), expected, 1e-12 * expected);
}

TEST(H2, RatioBoundedOnSmallLadder) {
    const auto st = h2_ratio_study(rotated(), [](double x, double y, double) { return std::cos(M_PI * x) * std::cos(M_PI * y); },
                                   {16, 32});
    EXPECT_LE(st.spread, 2.0);
    for (const auto& r : st.rows) {
        EXPECT_TRUE(r.strictly_decreasing);
        EXPECT_GT(r.ratio, 0.0);
    }
}
