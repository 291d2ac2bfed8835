// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anich/anich.hpp"
#include "spectral_oracle.hpp"

using namespace anich;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- criterion 1 ----------------------------------------------------------------

long double log_F(long double s, long double th, long double thc) {
    auto xl = [](long double x) { return x == 0 ? 0.0L : x * std::log(x); };
    return 0.5L * th * (xl(1 + s) + xl(1 - s)) + 0.5L * thc * (1 - s * s);
}

// Second-order Taylor extension of x log x about x0 = 1/n, then x -> 1 - |s|.
struct Outer {
    long double v, d1, d2;
};
Outer outer_branch(long double s, long n, long double th, long double thc) {
    const long double x0 = 1.0L / n, x = 1 - std::abs(s), sg = s < 0 ? -1 : 1;
    const long double h = x0 * std::log(x0) + (std::log(x0) + 1) * (x - x0) + (x - x0) * (x - x0) / (2 * x0);
    const long double hp = std::log(x0) + 1 + (x - x0) / x0;
    const long double other = 1 + std::abs(s);
    const long double v = 0.5L * th * (h + other * std::log(other)) + 0.5L * thc * (1 - s * s);
    const long double d1 = 0.5L * th * (-sg * hp + sg * (std::log(other) + 1)) - thc * s;
    const long double d2 = 0.5L * th * (1 / x0 + 1 / other) - thc;
    return {v, d1, d2};
}

Outcome criterion1() {
    const double th = 1.0, thc = 2.0;
    long N = 1;
    while (!(std::log(static_cast<double>(N)) > 2 * thc / th)) ++N;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> pts(10000);
    for (auto& x : pts) x = u(rng);
    const auto F = make_logarithmic(th, thc);
    int below = 0, bit = 0, curv = 0;
    double match = 0.0;
    for (long n : {N, 2 * N, 8 * N}) {
        const auto G = make_regularized({th, thc}, n);
        const double b = 1.0 - 1.0 / static_cast<double>(n);
        for (double s : pts) {
            const double g = eval_Gn(G, s);
            if (!(g <= static_cast<double>(log_F(s, th, thc)) * (1 + 1e-15) + 1e-15)) ++below;
            if (std::abs(s) <= b && (g != eval_F(F, s) || eval_Gnp(G, s) != eval_Fp(F, s) ||
                                     eval_Gnpp(G, s) != eval_F1pp(F, s) + eval_F2pp(F)))
                ++bit;
            const double gpp = eval_Gnpp(G, s);
            if (gpp < -thc * (1 + 1e-15) || gpp > (th * n - thc) * (1 + 1e-15)) ++curv;
        }
        for (double sg : {-1.0, 1.0}) {
            const long double s = sg * (1.0L - 1.0L / n);
            const Outer o = outer_branch(s, n, th, thc);
            const long double x = 1 - s * s;
            const long double in_v = log_F(s, th, thc);
            const long double in_d1 = 0.5L * th * std::log((1 + s) / (1 - s)) - thc * s;
            const long double in_d2 = th / x - thc;
            for (auto [a, c] : {std::pair{o.v, in_v}, std::pair{o.d1, in_d1}, std::pair{o.d2, in_d2}})
                match = std::max(match, static_cast<double>(std::abs(a - c) / std::max(1.0L, std::abs(c))));
            // library branch values just outside the breakpoint against the oracle
            const double so = static_cast<double>(s) * (1 + 1e-9);
            const Outer lib = outer_branch(so, n, th, thc);
            match = std::max(match, std::abs(eval_Gn(G, so) - static_cast<double>(lib.v)) /
                                        std::max(1.0, std::abs(static_cast<double>(lib.v))));
        }
    }
    const bool ok = N == 55 && ladder_min_index({th, thc}) == N && below == 0 && bit == 0 && curv == 0 && match <= 1e-12;
    return {ok, "N " + std::to_string(N) + ", below-F violations " + std::to_string(below) + ", shared-branch mismatches " +
                    std::to_string(bit) + ", curvature violations " + std::to_string(curv) + fmt(", C2 match %.2e", match)};
}

// ---- criterion 2 ----------------------------------------------------------------

Field randn(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Field f(g);
    for (auto& x : f.v) x = n(rng);
    return f;
}

VectorField randn_faces(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    VectorField v(g);
    for (int a = 0; a < g.dim; ++a)
        for (auto& x : v.comp[a]) x = n(rng);
    if (g.bc == Boundary::Neumann)
        for (int a = 0; a < g.dim; ++a) {
            const auto fd = g.face_dims(a);
            for (int k = 0; k < fd[2]; ++k)
                for (int j = 0; j < fd[1]; ++j)
                    for (int i = 0; i < fd[0]; ++i) {
                        std::array<int, 3> q{i, j, k};
                        if (q[a] == 0 || q[a] == g.n[a]) v.comp[a][g.face_index(a, q)] = 0.0;
                    }
        }
    return v;
}

Outcome criterion2() {
    std::mt19937_64 rng(77);
    double sbp = 0.0, lapmean = 0.0;
    for (Boundary bc : {Boundary::Neumann, Boundary::Periodic})
        for (int d : {2, 3}) {
            const Grid g(d, {d == 2 ? 24 : 10, d == 2 ? 20 : 9, d == 2 ? 1 : 8}, {0.3, 0.45, d == 2 ? 1.0 : 0.6}, bc);
            for (int t = 0; t < 100; ++t) {
                const VectorField v = randn_faces(g, rng);
                const Field q = randn(g, rng);
                const VectorField gq = grad(q);
                const Field dv = div(v);
                const double res = std::abs(inner(dv, q) + inner(v, gq));
                sbp = std::max(sbp, res / (l2(dv) * l2(q) + l2(v) * l2(gq)));
                const Field lf = lap(q);
                lapmean = std::max(lapmean, std::abs(mean(lf)) / std::max(1.0, linf(lf)));
            }
        }
    // dense bordered LU on a 16^2 Neumann grid
    const Grid g(2, {16, 16, 1}, {0.3, 0.3, 1.0}, Boundary::Neumann);
    const int n = 256;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double w = 1.0 / (0.3 * 0.3);
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) {
            const int r = i + 16 * j;
            for (auto [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
                const int ii = i + di, jj = j + dj;
                if (ii < 0 || ii > 15 || jj < 0 || jj > 15) continue;
                K(r, r) += w;
                K(r, ii + 16 * jj) -= w;
            }
            K(r, n) = K(n, r) = 1.0;
        }
    const auto lu = K.fullPivLu();
    double hm = 0.0;
    for (int t = 0; t < 10; ++t) {
        Field f = randn(g, rng);
        subtract_mean(f);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
        for (int r = 0; r < n; ++r) b[r] = f[static_cast<std::size_t>(r)];
        const Eigen::VectorXd x = lu.solve(b);
        double fu = 0.0;
        for (int r = 0; r < n; ++r) fu += f[static_cast<std::size_t>(r)] * x[r];
        const double ref = std::sqrt(fu * g.cell_volume());
        hm = std::max(hm, std::abs(hminus_norm(f) - ref) / ref);
    }
    const bool ok = sbp <= 1e-13 && lapmean <= 1e-13 && hm <= 1e-10;
    return {ok, fmt("SBP %.2e", sbp) + fmt(", mean(lap) %.2e", lapmean) + fmt(", H^-1 vs dense LU %.2e", hm)};
}

// ---- criteria 3, 4, 5, 8 ------------------------------------------------------------

struct ReferenceRuns {
    ReferenceScenario rs64;
    RunSummary run64;
    bool have = false;
};

ReferenceRuns& reference_runs() {
    static ReferenceRuns r;
    if (!r.have) {
        r.rs64 = reference_spinodal(64);
        r.run64 = run_reference(r.rs64);
        r.have = true;
    }
    return r;
}

Outcome criterion3() {
    const auto& r = reference_runs();
    const double e0 = std::abs(r.run64.energy0);
    const bool ok = r.run64.steps == 200 && r.run64.max_energy_increase <= 1e-10 && r.run64.max_ledger <= 1e-8 * e0;
    return {ok, std::to_string(r.run64.steps) + " steps" + fmt(", max E_n increase %.2e", r.run64.max_energy_increase) +
                    fmt(", max ledger %.2e", r.run64.max_ledger) + fmt(" (limit %.2e)", 1e-8 * e0)};
}

Outcome criterion4() {
    const auto& r = reference_runs();
    const double m0 = mean(r.rs64.phi0);
    const double limit = 1e-10 * std::max(1.0, std::abs(m0));
    return {r.run64.max_mass_drift <= limit, fmt("max mass drift %.2e", r.run64.max_mass_drift) + fmt(" (limit %.2e)", limit)};
}

Outcome criterion5() {
    const auto& r = reference_runs();
    const ReferenceScenario lr = reference_spinodal(64, 1, 500, 0.1);
    const RunSummary s = run_reference(lr);
    double running = 1.0;
    std::vector<double> rmin;
    for (const auto& rec : s.records) rmin.push_back(running = std::min(running, rec.delta));
    const std::size_t q = rmin.size() - rmin.size() / 4 - 1;
    const double dstar = rmin.back();
    const double var = dstar > 0 ? (rmin[q] - dstar) / dstar : INFINITY;
    const bool ok = r.run64.min_delta > 0 && s.min_delta > 0 && s.steps == 500 && var < 0.1;
    return {ok, fmt("min delta (reference) %.4f", r.run64.min_delta) + ", long run " + std::to_string(s.steps) +
                    " steps" + fmt(", observed delta* %.4f", dstar) + fmt(", last-quartile variation %.2e", var)};
}

Outcome criterion8() {
    const auto& r = reference_runs();
    const ReferenceScenario fine = reference_spinodal(128);
    const RunSummary s128 = run_reference(fine);
    const double kappa = 0.5;
    const auto c64 = fprime_bound_check(r.run64.records, kappa, mean(r.rs64.phi0), r.rs64.potential);
    const auto c128 = fprime_bound_check(s128.records, kappa, mean(fine.phi0), fine.potential);
    const double rel = std::abs(c128.C_hat / c64.C_hat - 1.0);
    const bool ok = std::isfinite(c64.C_hat) && std::isfinite(c128.C_hat) && c64.C_hat > 0 && rel <= 0.3;
    return {ok, fmt("C_hat(64) %.4e", c64.C_hat) + fmt(", C_hat(128) %.4e", c128.C_hat) + fmt(", relative change %.3f", rel)};
}

// ---- criterion 6 ----------------------------------------------------------------

Outcome criterion6() {
    const ContractionStudy st = contraction_study(1);
    const bool ok = st.identical.max_distance <= 1e-9 && st.rate_spread <= 0.2 && st.halving_deviation <= 0.05;
    return {ok, fmt("identical %.2e", st.identical.max_distance) + fmt(", rates %.4f", st.perturbed[0].rate) +
                    fmt(" / %.4f", st.perturbed[1].rate) + fmt(" (spread %.3f)", st.rate_spread) +
                    fmt(", halving deviation %.2e", st.halving_deviation)};
}

// ---- criterion 7 ----------------------------------------------------------------

Outcome criterion7() {
    const int n = 64, steps = 20;
    const double h = 0.5, tau = 1e-2;
    const Grid g = Grid::uniform(2, n, h, Boundary::Periodic);
    RandomSmoothSpec init;
    init.amplitude = 0.6;
    init.seed = 3;
    const Field phi0 = random_smooth(g, init);
    SolverConfig cfg;
    cfg.dt = cfg.dt_max = tau;
    cfg.adaptive = false;
    Stepper st(make_double_well(), make_isotropic(2), MobilitySpec::constant(1.0), cfg);
    oracle::SpectralDoubleWell sp(n, n, h, h, 1.0);
    SolverState s = st.make_state(phi0);
    std::vector<double> ref = phi0.v;
    double dev = 0.0;
    for (int k = 0; k < steps; ++k) {
        s = st.step(s);
        ref = sp.step(ref, tau);
        for (std::size_t i = 0; i < ref.size(); ++i) dev = std::max(dev, std::abs(ref[i] - s.phi[i]));
    }
    return {dev <= 1e-8, std::to_string(steps) + fmt(" steps at dt %.0e", tau) + fmt(", max l-inf deviation %.2e", dev)};
}

// ---- criterion 9 ----------------------------------------------------------------

Outcome criterion9() {
    const H2Study st = h2_ratio_study(reference_flux(), reference_source, {32, 64, 128});
    bool res_ok = true, dec = true;
    std::string rows;
    for (const auto& r : st.rows) {
        res_ok = res_ok && r.residual <= 1e-8;
        dec = dec && r.strictly_decreasing;
        rows += std::to_string(r.cells) + ": ratio " + fmt("%.4f", r.ratio) + fmt(" res %.1e", r.residual) + " it " +
                std::to_string(r.iterations) + "; ";
    }
    return {res_ok && dec && st.spread <= 2.0, rows + fmt("spread %.4f", st.spread)};
}

// ---- criterion 10 ---------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion10() {
    const fs::path dir = fs::temp_directory_path() / ("anich_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "det.ini");
        cfg << "[grid]\ncells = 48\nspacing = 0.5\n"
               "[potential]\ntheta = 1\ntheta_c = 2\nladder = auto*4\n"
               "[anisotropy]\nkind = ellipsoidal\nmatrix = 1.5 0.25; 0.25 1\n"
               "[solver]\ndt = 1e-3\ndt_max = 1e-2\nsteps = 120\n"
               "[initial]\nkind = random\namplitude = 0.3\nseed = 11\n";
    }
    std::vector<std::string> series;
    bool exits_ok = true;
    int k = 0;
    for (const char* threads : {"1", "4", "1", "3"}) {
        const fs::path out = dir / ("run" + std::to_string(k++));
        const std::string cmd = std::string(ANICH_CLI_PATH) + " run " + (dir / "det.ini").string() + " --threads " +
                                threads + " --out-dir " + out.string() + " >/dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        exits_ok = exits_ok && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
        series.push_back(slurp(out / "series.csv"));
    }
    bool same = !series[0].empty();
    for (const auto& s : series) same = same && s == series[0];
    fs::remove_all(dir);
    return {exits_ok && same, std::to_string(series.size()) + " runs (threads 1, 4, 1, 3), " +
                                  std::to_string(series[0].size()) + " bytes, " + (same ? "identical" : "DIFFERENT")};
}

} // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %zu: %s  %s  [%.2f s]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), sec);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
