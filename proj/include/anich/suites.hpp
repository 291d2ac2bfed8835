#pragma once

// Named acceptance bundles with machine-readable reports: dissipation,
// separation, contraction, ladder, elliptic, and all of them.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "anich/contraction.hpp"
#include "anich/diagnostics.hpp"
#include "anich/elliptic.hpp"
#include "anich/initial_data.hpp"
#include "anich/stepper.hpp"

namespace anich {

class UsageError : public Error {
public:
    using Error::Error;
};

// ---- reference scenarios ------------------------------------------------------

struct ReferenceScenario {
    Grid grid;
    LogParams params{1.0, 2.0};
    long N = 0;
    long n = 0;
    PotentialSpec potential;
    AnisotropySpec anisotropy;
    MobilitySpec mobility = MobilitySpec::constant(1.0);
    SolverConfig solver;
    Field phi0;
    long steps = 200;
    double horizon() const { return solver.dt * static_cast<double>(steps); }
};

inline Eigen::MatrixXd reference_anisotropy_matrix() {
    Eigen::MatrixXd G(2, 2);
    G << 1.5, 0.25, 0.25, 1.0;
    return G;
}

/// Spinodal decomposition on the box [0,32]^2 with theta = 1, theta_c = 2, ladder 4N,
/// random smooth data of mean 0 and amplitude 0.3.
inline ReferenceScenario reference_spinodal(int cells = 64, std::uint64_t seed = 1, long steps = 200,
                                            double dt = 1e-3) {
    ReferenceScenario rs;
    rs.grid = Grid::uniform(2, cells, 32.0 / cells, Boundary::Neumann);
    rs.N = ladder_min_index(rs.params);
    rs.n = 4 * rs.N;
    rs.potential = make_regularized(rs.params, rs.n);
    rs.anisotropy = make_ellipsoidal(reference_anisotropy_matrix());
    rs.solver.dt = dt;
    rs.solver.dt_max = dt;
    rs.steps = steps;
    RandomSmoothSpec init;
    init.mean = 0.0;
    init.amplitude = 0.3;
    init.radius = 2.0;
    init.seed = seed;
    rs.phi0 = random_smooth(rs.grid, init);
    return rs;
}

inline RunSummary run_reference(const ReferenceScenario& rs) {
    Stepper stepper(rs.potential, rs.anisotropy, rs.mobility, rs.solver);
    RunOptions opt;
    opt.horizon = rs.horizon();
    opt.max_steps = rs.steps;
    return run(stepper, rs.phi0, opt);
}

/// Rotated ellipsoidal flux on [0,1]^2: G = diag(1.5, 1), angle(x) = 0.5 sin(pi x) cos(pi y).
inline QuasilinearFlux reference_flux() {
    Eigen::MatrixXd G(2, 2);
    G << 1.5, 0.0, 0.0, 1.0;
    auto angle = [](const Vec3& x) { return 0.5 * std::sin(M_PI * x[0]) * std::cos(M_PI * x[1]); };
    return make_rotated_ellipsoidal(G, angle, 0.5 * M_PI * std::sqrt(2.0), Vec3(1.0, 1.0, 0.0));
}

inline double reference_source(double x, double y, double) {
    return std::cos(M_PI * x) * std::cos(M_PI * y) + 0.5 * std::cos(2.0 * M_PI * x) - 0.25 * std::cos(3.0 * M_PI * y);
}

// ---- report -------------------------------------------------------------------

struct SuiteCheck {
    std::string name;
    bool pass = false;
    nlohmann::ordered_json measured;
};

struct SuiteReport {
    std::string suite;
    std::vector<SuiteCheck> checks;
    std::vector<SuiteReport> members; // for "all"
    double seconds = 0.0;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        for (const auto& m : members)
            if (!m.pass()) return false;
        return true;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["suite"] = suite;
        j["pass"] = pass();
        j["seconds"] = seconds;
        j["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : checks) {
            nlohmann::ordered_json cj;
            cj["name"] = c.name;
            cj["pass"] = c.pass;
            cj["measured"] = c.measured;
            j["checks"].push_back(cj);
        }
        if (!members.empty()) {
            j["members"] = nlohmann::ordered_json::array();
            for (const auto& m : members) j["members"].push_back(m.to_json());
        }
        return j;
    }
};

struct SuiteOptions {
    std::uint64_t seed = 1;
    int threads = 1;
};

namespace detail {

inline SuiteCheck check(std::string name, bool pass, nlohmann::ordered_json measured) {
    return SuiteCheck{std::move(name), pass, std::move(measured)};
}

// JSON cannot hold inf/nan; report them as strings.
inline nlohmann::ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

/// Running minimum of delta over time; relative spread over the last quarter of records.
inline std::pair<double, double> observed_delta_star(const std::vector<DiagnosticsRecord>& recs) {
    std::vector<double> running;
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : recs) running.push_back(m = std::min(m, r.delta));
    const std::size_t q = running.size() - running.size() / 4 - 1;
    const double hi = running[q], lo = running.back();
    return {lo, lo > 0.0 ? (hi - lo) / lo : std::numeric_limits<double>::infinity()};
}

} // namespace detail

// ---- bundles ------------------------------------------------------------------

inline SuiteReport dissipation_suite(const SuiteOptions& opt) {
    SuiteReport rep{"dissipation", {}, {}, 0.0};
    const ReferenceScenario rs = reference_spinodal(64, opt.seed);
    const RunSummary s = run_reference(rs);
    const double e0 = std::abs(s.energy0);
    rep.checks.push_back(detail::check("per_step_energy_increase", s.max_energy_increase <= 1e-10,
                                       {{"max_increase", detail::num(s.max_energy_increase)}, {"limit", 1e-10}}));
    rep.checks.push_back(detail::check("dissipation_ledger", s.max_ledger <= 1e-8 * e0,
                                       {{"max_ledger", detail::num(s.max_ledger)}, {"limit", 1e-8 * e0}}));
    const double mass_limit = 1e-10 * std::max(1.0, std::abs(mean(rs.phi0)));
    rep.checks.push_back(detail::check("mass_drift", s.max_mass_drift <= mass_limit,
                                       {{"max_drift", detail::num(s.max_mass_drift)}, {"limit", mass_limit}}));
    rep.checks.push_back(detail::check("delta_positive", s.min_delta > 0.0, {{"min_delta", detail::num(s.min_delta)}}));
    return rep;
}

inline SuiteReport separation_suite(const SuiteOptions& opt) {
    SuiteReport rep{"separation", {}, {}, 0.0};
    {
        const RunSummary s = run_reference(reference_spinodal(64, opt.seed));
        rep.checks.push_back(
            detail::check("delta_positive_reference", s.min_delta > 0.0, {{"min_delta", detail::num(s.min_delta)}}));
    }
    const ReferenceScenario rs = reference_spinodal(64, opt.seed, 500, 0.1);
    const RunSummary s = run_reference(rs);
    const auto [dstar, spread] = detail::observed_delta_star(s.records);
    rep.checks.push_back(detail::check("delta_positive_long", s.min_delta > 0.0,
                                       {{"min_delta", detail::num(s.min_delta)}, {"steps", s.steps}}));
    rep.checks.push_back(detail::check("observed_delta_star_stable", spread < 0.1,
                                       {{"observed_delta_star", detail::num(dstar)},
                                        {"last_quartile_variation", detail::num(spread)},
                                        {"limit", 0.1}}));
    return rep;
}

struct ContractionStudy {
    ContractionReport identical;
    std::vector<double> amplitudes;
    std::vector<ContractionReport> perturbed;
    double rate_spread = 0.0;     // |C1 - C2| / max(|C1|, |C2|) over the first two amplitudes
    double halving_deviation = 0.0; // max |d_{a/2}(t) / d_a(t) - 0.5| against the last amplitude
};

/// Perturbations a * (mean-zero smooth pattern) added to the reference data.
inline ContractionStudy contraction_study(std::uint64_t seed, const std::vector<double>& amplitudes = {1e-4, 1e-3},
                                          int cells = 64, long steps = 200) {
    const ReferenceScenario rs = reference_spinodal(cells, seed, steps);
    SolverConfig cfg = rs.solver;
    cfg.adaptive = false;
    ContractionStudy st;
    st.identical = contraction_probe(rs.phi0, rs.phi0, rs.potential, rs.anisotropy, rs.mobility, cfg, rs.horizon());
    const Field pattern = random_smooth_pattern(rs.grid, 2.0, seed + 1000);
    std::vector<double> amps = amplitudes;
    amps.push_back(0.5 * amplitudes.back());
    for (double a : amps) {
        Field b = rs.phi0;
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += a * pattern[i];
        st.amplitudes.push_back(a);
        st.perturbed.push_back(contraction_probe(rs.phi0, b, rs.potential, rs.anisotropy, rs.mobility, cfg,
                                                 rs.horizon()));
    }
    const double c1 = st.perturbed[0].rate, c2 = st.perturbed[1].rate;
    st.rate_spread = std::abs(c1 - c2) / std::max({std::abs(c1), std::abs(c2), 1e-300});
    const auto& full = st.perturbed[amplitudes.size() - 1].hminus_distance;
    const auto& half = st.perturbed.back().hminus_distance;
    for (std::size_t i = 0; i < std::min(full.size(), half.size()); ++i)
        if (full[i] > 0.0) st.halving_deviation = std::max(st.halving_deviation, std::abs(half[i] / full[i] - 0.5));
    return st;
}

inline SuiteReport contraction_suite(const SuiteOptions& opt) {
    SuiteReport rep{"contraction", {}, {}, 0.0};
    const ContractionStudy st = contraction_study(opt.seed);
    rep.checks.push_back(detail::check("identical_data_distance", st.identical.max_distance <= 1e-9,
                                       {{"max_distance", detail::num(st.identical.max_distance)}, {"limit", 1e-9}}));
    nlohmann::ordered_json rates = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < st.perturbed.size(); ++i)
        rates.push_back({{"amplitude", st.amplitudes[i]},
                         {"initial_distance", detail::num(st.perturbed[i].initial_distance)},
                         {"rate", detail::num(st.perturbed[i].rate)},
                         {"rate_lsq", detail::num(st.perturbed[i].rate_lsq)},
                         {"fit_residual", detail::num(st.perturbed[i].fit_residual)}});
    rep.checks.push_back(detail::check("rate_stable_across_amplitudes", st.rate_spread <= 0.2,
                                       {{"spread", detail::num(st.rate_spread)}, {"limit", 0.2}, {"fits", rates}}));
    rep.checks.push_back(detail::check("linear_in_amplitude", st.halving_deviation <= 0.05,
                                       {{"max_deviation_from_half", detail::num(st.halving_deviation)},
                                        {"limit", 0.05}}));
    return rep;
}

/// Initial data reaching into the regularized branches, so that the members actually differ.
inline LadderSweepResult ladder_study(std::uint64_t seed, int threads, int cells = 32, long steps = 100) {
    const LogParams params{1.0, 2.0};
    const Grid g = Grid::uniform(2, cells, 16.0 / cells, Boundary::Neumann);
    RandomSmoothSpec init;
    init.amplitude = 0.999;
    init.max_sup = 0.9995;
    init.radius = 1.5;
    init.seed = seed;
    const Field phi0 = random_smooth(g, init);
    SolverConfig cfg;
    cfg.dt = cfg.dt_max = 1e-3;
    return ladder_sweep(phi0, params, {1, 2, 4, 8}, make_ellipsoidal(reference_anisotropy_matrix()),
                        MobilitySpec::constant(1.0), cfg, cfg.dt * static_cast<double>(steps), threads);
}

inline SuiteReport ladder_suite(const SuiteOptions& opt) {
    SuiteReport rep{"ladder", {}, {}, 0.0};
    const LadderSweepResult res = ladder_study(opt.seed, opt.threads);
    nlohmann::ordered_json dist = nlohmann::ordered_json::array();
    for (double d : res.distances) dist.push_back(detail::num(d));
    bool nonincreasing = true;
    double worst_factor = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < res.distances.size(); ++k) {
        nonincreasing = nonincreasing && res.distances[k + 1] <= res.distances[k];
        if (res.distances[k + 1] > 0.0) worst_factor = std::min(worst_factor, res.distances[k] / res.distances[k + 1]);
    }
    nlohmann::ordered_json idx = nlohmann::ordered_json::array();
    for (long n : res.indices) idx.push_back(n);
    rep.checks.push_back(detail::check("distances_nonincreasing", nonincreasing, {{"indices", idx}, {"distances", dist}}));
    rep.checks.push_back(detail::check("decrease_factor", worst_factor >= 1.5,
                                       {{"worst_factor", detail::num(worst_factor)}, {"limit", 1.5}}));
    double mass_spread = 0.0;
    for (double m : res.final_masses) mass_spread = std::max(mass_spread, std::abs(m - res.final_masses.front()));
    rep.checks.push_back(detail::check("mass_identical", mass_spread <= 1e-12,
                                       {{"max_difference", detail::num(mass_spread)}, {"limit", 1e-12}}));
    return rep;
}

inline SuiteReport elliptic_suite(const SuiteOptions&) {
    SuiteReport rep{"elliptic", {}, {}, 0.0};
    const QuasilinearFlux flux = reference_flux();
    const H2Study st = h2_ratio_study(flux, reference_source, {32, 64, 128});
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    bool residual_ok = true, decreasing = true;
    for (const auto& r : st.rows) {
        rows.push_back({{"cells", r.cells},
                        {"ratio", detail::num(r.ratio)},
                        {"residual", detail::num(r.residual)},
                        {"iterations", r.iterations}});
        residual_ok = residual_ok && r.residual <= 1e-8;
        decreasing = decreasing && r.strictly_decreasing;
    }
    rep.checks.push_back(detail::check("weak_form_residual", residual_ok, {{"rows", rows}, {"limit", 1e-8}}));
    rep.checks.push_back(detail::check("h2_ratio_spread", st.spread <= 2.0,
                                       {{"spread", detail::num(st.spread)}, {"limit", 2.0}}));
    rep.checks.push_back(detail::check("residual_strictly_decreasing", decreasing, nlohmann::ordered_json::object()));
    return rep;
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"dissipation", "separation", "contraction", "ladder", "elliptic", "all"};
    return names;
}

inline SuiteReport run_suite(const std::string& name, const SuiteOptions& opt = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto timed = [&](SuiteReport r) {
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    };
    if (name == "dissipation") return timed(dissipation_suite(opt));
    if (name == "separation") return timed(separation_suite(opt));
    if (name == "contraction") return timed(contraction_suite(opt));
    if (name == "ladder") return timed(ladder_suite(opt));
    if (name == "elliptic") return timed(elliptic_suite(opt));
    if (name != "all") throw UsageError("unknown suite '" + name + "'");

    const std::vector<std::string> parts(suite_names().begin(), suite_names().end() - 1);
    SuiteReport all{"all", {}, std::vector<SuiteReport>(parts.size()), 0.0};
    std::vector<std::exception_ptr> errors(parts.size());
    SuiteOptions inner = opt;
    inner.threads = 1;
    auto member = [&](std::size_t i) {
        try {
            all.members[i] = run_suite(parts[i], inner);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opt.threads, 1)), 1,
                                                        parts.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < parts.size(); i = next++) member(i);
        });
    for (std::size_t i = next++; i < parts.size(); i = next++) member(i);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return timed(std::move(all));
}

} // namespace anich
