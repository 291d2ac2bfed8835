#include <gtest/gtest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "anich/contraction.hpp"
#include "anich/diagnostics.hpp"
#include "anich/initial_data.hpp"
#include "anich/stepper.hpp"

using namespace anich;

namespace {

const LogParams kRef{1.0, 2.0};

PotentialSpec ladder(long mult) { return make_regularized(kRef, mult * ladder_min_index(kRef)); }

SolverConfig fixed_dt(double dt) {
    SolverConfig c;
    c.dt = dt;
    c.dt_max = dt;
    c.adaptive = false;
    return c;
}

Field smooth_data(const Grid& g, double mean, double amp, std::uint64_t seed) {
    RandomSmoothSpec s;
    s.mean = mean;
    s.amplitude = amp;
    s.seed = seed;
    return random_smooth(g, s);
}

// Continuum energy of a profile depending on x only, by composite midpoint.
double continuum_energy_1d(double L, double Ly, int pts) {
    const double w = std::sqrt(2.0);
    double e = 0.0;
    const double dx = L / pts;
    for (int i = 0; i < pts; ++i) {
        const double x = (i + 0.5) * dx;
        const double t = std::tanh((x - L / 2) / w);
        const double dp = (1 - t * t) / w;
        e += 0.5 * dp * dp + 0.25 * (t * t - 1) * (t * t - 1);
    }
    return e * dx * Ly;
}

} // namespace

TEST(Energy, ConstantExamples) {
    const Grid g(2, {8, 6, 1}, {0.5, 0.25, 1.0}, Boundary::Neumann);
    const auto iso = make_isotropic(2);
    for (double eps : {1.0, 0.5}) {
        EXPECT_NEAR(energy(Field(g), make_double_well(), iso, eps), g.measure() * 0.25 / eps, 1e-14);
        EXPECT_NEAR(energy(Field(g), make_logarithmic(1, 2), iso, eps), g.measure() * 1.0 / eps, 1e-14);
    }
}

TEST(Energy, DomainAndObstacle) {
    const Grid g = Grid::uniform(2, 8, 1.0, Boundary::Neumann);
    Field phi(g, 0.0);
    phi[5] = 1.2;
    EXPECT_THROW(energy(phi, make_logarithmic(1, 2), make_isotropic(2), 1.0), DomainError);
    EXPECT_EQ(energy(phi, DoubleObstacle{}, make_isotropic(2), 1.0), std::numeric_limits<double>::infinity());
    EXPECT_TRUE(std::isfinite(energy(phi, ladder(1), make_isotropic(2), 1.0)));
}

TEST(Energy, TanhProfileConvergesToContinuum) {
    const double L = 16.0;
    const double ref = continuum_energy_1d(L, L, 2000000);
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
        const Grid g = Grid::uniform(2, n, L / n, Boundary::Neumann);
        const Field phi = sample(g, [&](double x, double, double) { return std::tanh((x - L / 2) / std::sqrt(2.0)); });
        err.push_back(std::abs(energy(phi, make_double_well(), make_isotropic(2), 1.0) - ref));
    }
    EXPECT_LE(err[2] / ref, 1e-3);
    EXPECT_GE(std::log2(err[0] / err[1]), 1.8);
    EXPECT_GE(std::log2(err[1] / err[2]), 1.8);
}

TEST(Energy, LadderBelowExactLog) {
    const Grid g = Grid::uniform(2, 16, 1.0, Boundary::Neumann);
    RandomSmoothSpec s;
    s.amplitude = 1.0;
    s.max_sup = 1.0;
    s.radius = 1.0;
    const auto aniso = make_ellipsoidal(Eigen::Matrix2d{{1.5, 0.25}, {0.25, 1.0}});
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        s.seed = seed;
        const Field phi = random_smooth(g, s);
        ASSERT_LE(linf(phi), 1.0);
        const double exact = energy(phi, make_logarithmic(1, 2), aniso, 1.0);
        for (long m : {1L, 2L, 8L}) EXPECT_LE(energy(phi, ladder(m), aniso, 1.0), exact);
    }
}

TEST(Separation, Examples) {
    const Grid g = Grid::uniform(2, 8, 1.0, Boundary::Neumann);
    Field phi(g, 0.0);
    EXPECT_EQ(separation(phi).delta, 1.0);
    phi[9] = 0.97;
    EXPECT_NEAR(separation(phi).delta, 0.03, 1e-15);
    EXPECT_EQ(separation(phi).argmax, 9u);
    phi[4] = -1.25;
    EXPECT_NEAR(separation(phi).delta, -0.25, 1e-15);
}

TEST(Record, Fields) {
    const Grid g = Grid::uniform(2, 8, 0.5, Boundary::Neumann);
    const Field phi = smooth_data(g, 0.1, 0.4, 3);
    const auto pot = ladder(2);
    const Field mu = initial_mu(phi, pot, make_isotropic(2), SolverConfig{});
    const auto r = make_record(0.5, phi, mu, pot, make_isotropic(2), 1.0);
    EXPECT_EQ(r.t, 0.5);
    EXPECT_NEAR(r.mass, 0.1, 1e-15);
    EXPECT_EQ(r.phi_min, min_value(phi));
    EXPECT_EQ(r.phi_max, max_value(phi));
    EXPECT_EQ(r.delta, 1 - linf(phi));
    EXPECT_EQ(r.energy, energy(phi, make_logarithmic(1, 2), make_isotropic(2), 1.0));
    EXPECT_EQ(r.energy_n, energy(phi, pot, make_isotropic(2), 1.0));
    EXPECT_NEAR(r.gradmu_l2, l2(grad(mu)), 1e-15);
}

TEST(FprimeBound, ConstantEquilibrium) {
    const Grid g = Grid::uniform(2, 8, 1.0, Boundary::Neumann);
    const auto sum = run(Field(g, 0.3), 0.05, ladder(4), make_isotropic(2), MobilitySpec::constant(1.0), fixed_dt(1e-2));
    const auto rep = fprime_bound_check(sum.records, 0.5, 0.3, ladder(4));
    ASSERT_FALSE(rep.ratios.empty());
    EXPECT_TRUE(std::isfinite(rep.C_hat));
    EXPECT_EQ(rep.C_hat, rep.ratios.front());
    for (double r : rep.ratios) EXPECT_NEAR(r, rep.ratios.front(), 1e-14 * rep.C_hat);
    EXPECT_EQ(rep.kind, "regularized_log");
    EXPECT_NEAR(rep.R, 0.55, 1e-15);
}

TEST(FprimeBound, EnvelopeGrowsAsKappaShrinks) {
    const Grid g = Grid::uniform(2, 16, 1.0, Boundary::Neumann);
    const auto sum = run(smooth_data(g, 0.1, 0.5, 4), 0.2, ladder(4), make_isotropic(2), MobilitySpec::constant(1.0),
                         fixed_dt(1e-2));
    double prev = 0.0;
    for (double kappa : {0.85, 0.6, 0.3, 0.1}) {
        const auto rep = fprime_bound_check(sum.records, kappa, 0.1, ladder(4));
        const double env = rep.C_hat / (kappa * kappa);
        EXPECT_GE(env, prev * (1 - 4 * std::numeric_limits<double>::epsilon())); // ties where F_sup is attained at 0
        prev = env;
    }
    EXPECT_THROW(fprime_bound_check(sum.records, 0.95, 0.1, ladder(4)), PreconditionError);
    EXPECT_THROW(fprime_bound_check(sum.records, 0.0, 0.1, ladder(4)), PreconditionError);
}

TEST(FprimeBound, ViolationsAgainstReference) {
    const Grid g = Grid::uniform(2, 16, 1.0, Boundary::Neumann);
    const auto sum = run(smooth_data(g, 0.0, 0.5, 5), 0.1, ladder(4), make_isotropic(2), MobilitySpec::constant(1.0),
                         fixed_dt(1e-2));
    const auto cal = fprime_bound_check(sum.records, 0.5, 0.0, ladder(4));
    EXPECT_EQ(fprime_bound_check(sum.records, 0.5, 0.0, ladder(4), cal.C_hat).violations, 0);
    const auto strict = fprime_bound_check(sum.records, 0.5, 0.0, ladder(4), cal.C_hat / 4);
    EXPECT_GT(strict.violations, 0);
}

TEST(Contraction, IdenticalDataIsReproducible) {
    const Grid g = Grid::uniform(2, 24, 1.0, Boundary::Neumann);
    const Field phi0 = smooth_data(g, 0.0, 0.3, 6);
    const auto aniso = make_ellipsoidal(Eigen::Matrix2d{{1.5, 0.25}, {0.25, 1.0}});
    const auto rep = contraction_probe(phi0, phi0, ladder(4), aniso, MobilitySpec::constant(1.0), fixed_dt(1e-2), 0.2);
    EXPECT_EQ(rep.steps, 20);
    EXPECT_LE(rep.max_distance, 1e-9);
    const auto again = contraction_probe(phi0, phi0, ladder(4), aniso, MobilitySpec::constant(1.0), fixed_dt(1e-2), 0.2);
    EXPECT_EQ(rep.hminus_distance, again.hminus_distance);
    EXPECT_EQ(rep.times, again.times);
}

TEST(Contraction, InitialDistanceIsPerturbationNorm) {
    const Grid g = Grid::uniform(2, 24, 1.0, Boundary::Neumann);
    const Field phi0 = smooth_data(g, 0.0, 0.3, 6);
    Field pert = random_smooth_pattern(g, 2.0, 99);
    pert *= 1e-3;
    const Field phi1 = phi0 + pert;
    const auto rep = contraction_probe(phi0, phi1, ladder(4), make_isotropic(2), MobilitySpec::constant(1.0),
                                       fixed_dt(1e-2), 0.1);
    PoissonOptions opt;
    opt.project_mean = true;
    EXPECT_NEAR(rep.initial_distance, hminus_norm(pert, opt), 1e-9 * rep.initial_distance);
    EXPECT_EQ(rep.hminus_distance.front(), rep.initial_distance);
    for (double d : rep.hminus_distance) EXPECT_GE(d, 0.0);
    EXPECT_TRUE(std::isfinite(rep.rate));
    EXPECT_GE(rep.fit_residual, 0.0);
    for (std::size_t k = 0; k < rep.times.size(); ++k)
        EXPECT_LE(rep.hminus_distance[k], rep.initial_distance * std::exp(rep.rate * rep.times[k]) * (1 + 1e-12));
}

TEST(Contraction, Preconditions) {
    const Grid g = Grid::uniform(2, 8, 1.0, Boundary::Neumann);
    const Field a = smooth_data(g, 0.0, 0.3, 1);
    const Field b = smooth_data(g, 0.01, 0.3, 1);
    EXPECT_THROW(contraction_probe(a, b, ladder(1), make_isotropic(2), MobilitySpec::constant(1.0), fixed_dt(1e-2), 0.1),
                 PreconditionError);
    EXPECT_THROW(contraction_probe(a, a, ladder(1), make_isotropic(2), MobilitySpec::gaussian(0.5, 1.0), fixed_dt(1e-2),
                                   0.1),
                 PreconditionError);
    const Field c = smooth_data(Grid::uniform(2, 10, 1.0, Boundary::Neumann), 0.0, 0.3, 1);
    EXPECT_THROW(contraction_probe(a, c, ladder(1), make_isotropic(2), MobilitySpec::constant(1.0), fixed_dt(1e-2), 0.1),
                 PreconditionError);
}

TEST(Collector, ConcurrentAppends) {
    RecordCollector col;
    std::vector<std::thread> ts;
    for (std::size_t t = 0; t < 4; ++t)
        ts.emplace_back([&col, t] {
            auto sink = col.sink(t);
            for (int k = 0; k < 1000; ++k) {
                DiagnosticsRecord r;
                r.t = k;
                sink(r);
            }
        });
    for (auto& t : ts) t.join();
    for (std::size_t t = 0; t < 4; ++t) {
        const auto recs = col.records(t);
        ASSERT_EQ(recs.size(), 1000u);
        for (int k = 0; k < 1000; ++k) EXPECT_EQ(recs[static_cast<std::size_t>(k)].t, k);
    }
}
