#pragma once

// Two-trajectory probe: both runs share every configuration and the step
// sequence, and the H^-1 distance of the difference is recorded per step.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "anich/errors.hpp"
#include "anich/hminus.hpp"
#include "anich/stepper.hpp"

namespace anich {

struct ContractionReport {
    std::vector<double> times;
    std::vector<double> hminus_distance;
    double initial_distance = 0.0;
    double max_distance = 0.0;
    double rate = 0.0;         // envelope: smallest C with d(t) <= d(0) exp(C t)
    double rate_lsq = 0.0;     // least-squares slope of log(d/d0) through the origin
    double fit_residual = 0.0; // rms of log(d/d0) - rate_lsq t
    long steps = 0;
};

namespace detail {

inline void fit_rates(ContractionReport& rep) {
    const double d0 = rep.initial_distance;
    if (!(d0 > 0.0)) return;
    double st2 = 0.0, sty = 0.0;
    double env = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 1; i < rep.times.size(); ++i) {
        const double t = rep.times[i];
        const double d = rep.hminus_distance[i];
        if (!(t > 0.0) || !(d > 0.0)) continue;
        const double y = std::log(d / d0);
        env = std::max(env, y / t);
        st2 += t * t;
        sty += t * y;
        pts.emplace_back(t, y);
    }
    if (pts.empty()) return;
    rep.rate = env;
    rep.rate_lsq = sty / st2;
    double ss = 0.0;
    for (const auto& [t, y] : pts) ss += (y - rep.rate_lsq * t) * (y - rep.rate_lsq * t);
    rep.fit_residual = std::sqrt(ss / static_cast<double>(pts.size()));
}

} // namespace detail

/// Advances both initial states in lockstep to the horizon. A failed step in
/// either trajectory halves dt for both.
inline ContractionReport contraction_probe(const Field& phi0_a, const Field& phi0_b, const PotentialSpec& pot,
                                           const AnisotropySpec& aniso, const MobilitySpec& mob,
                                           const SolverConfig& cfg, double horizon) {
    if (!mob.is_constant()) throw PreconditionError("contraction_probe: requires constant mobility");
    if (!(phi0_a.grid == phi0_b.grid)) throw PreconditionError("contraction_probe: grids differ");
    if (!(horizon > 0.0)) throw PreconditionError("contraction_probe: horizon must be positive");
    const double dm = std::abs(mean(phi0_a) - mean(phi0_b));
    if (dm > 1e-12)
        throw PreconditionError("contraction_probe: initial means differ by " + std::to_string(dm));

    Stepper sa(pot, aniso, mob, cfg), sb(pot, aniso, mob, cfg);
    SolverState a = sa.make_state(phi0_a);
    SolverState b = sb.make_state(phi0_b);
    PoissonOptions popt;
    popt.project_mean = true;

    ContractionReport rep;
    auto record = [&] {
        rep.times.push_back(a.t);
        const double d = hminus_norm(a.phi - b.phi, popt);
        rep.hminus_distance.push_back(d);
        rep.max_distance = std::max(rep.max_distance, d);
    };
    record();
    rep.initial_distance = rep.hminus_distance.front();

    double dt = cfg.dt;
    int successes = 0;
    const double t_end = horizon * (1.0 - 1e-12);
    while (a.t < t_end) {
        auto na = sa.try_step(a, dt);
        auto nb = na ? sb.try_step(b, dt) : std::nullopt;
        if (!na || !nb) {
            if (dt * 0.5 < cfg.dt_min)
                throw StepFailure("contraction_probe: step failed at t = " + std::to_string(a.t));
            dt *= 0.5;
            successes = 0;
            continue;
        }
        a = std::move(*na);
        b = std::move(*nb);
        ++rep.steps;
        record();
        if (cfg.adaptive && ++successes >= 5) {
            dt = std::min(cfg.dt_max, 1.2 * dt);
            successes = 0;
        }
    }
    detail::fit_rates(rep);
    return rep;
}

} // namespace anich
