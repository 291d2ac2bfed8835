#pragma once

// Convex-concave splitting of the anisotropic Cahn-Hilliard system
//
//     phi+ - phi = tau div( M(grad phi, phi) grad mu+ ),
//     mu+        = -eps div A'(grad phi+) + eps^-1 ( F1'(phi+) + F2'(phi) ),
//
// with the convex parts (A and F1, or F_{1,n} on the regularization ladder)
// implicit, the concave F2 explicit and the mobility lagged. Each step is a
// Newton solve on the stacked unknown (phi+, mu+) with a sparse LU of the
// Jacobian; failed steps are retried with halved tau.

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "anich/anisotropy.hpp"
#include "anich/diagnostics.hpp"
#include "anich/errors.hpp"
#include "anich/gradient_energy.hpp"
#include "anich/grid.hpp"
#include "anich/potentials.hpp"

namespace anich {

#ifndef ANICH_LU_ORDERING
#define ANICH_LU_ORDERING Eigen::COLAMDOrdering<int>
#endif
using Ordering = ANICH_LU_ORDERING;

struct MobilitySpec {
    enum class Kind { Constant, Bounded };
    Kind kind = Kind::Constant;
    double M = 1.0;
    double M0 = 1.0;
    double M1 = 1.0;
    std::function<double(const Vec3& p, double s)> fn; // Bounded only
    std::string descriptor = "constant";

    static MobilitySpec constant(double m) {
        if (!(m > 0.0)) throw ValidationError("mobility.M", "must be a positive real");
        return MobilitySpec{Kind::Constant, m, m, m, {}, "constant"};
    }

    static MobilitySpec bounded(std::function<double(const Vec3&, double)> f, double m0, double m1,
                                std::string descriptor) {
        if (!(m0 > 0.0) || !(m1 >= m0)) throw ValidationError("mobility.M0", "require 0 < M0 <= M1");
        return MobilitySpec{Kind::Bounded, 0.5 * (m0 + m1), m0, m1, std::move(f), std::move(descriptor)};
    }

    // M(p,s) = M0 + (M1 - M0) exp(-|p|^2) (1 - min(s^2, 1)); bounded by construction.
    static MobilitySpec gaussian(double m0, double m1) {
        return bounded(
            [m0, m1](const Vec3& p, double s) {
                return m0 + (m1 - m0) * std::exp(-p.squaredNorm()) * (1.0 - std::min(s * s, 1.0));
            },
            m0, m1, "gaussian");
    }

    bool is_constant() const { return kind == Kind::Constant; }
};

/// Face values of the mobility evaluated at face-averaged cell-centered (grad phi, phi).
inline VectorField mobility_faces(const MobilitySpec& mob, const Field& phi) {
    const Grid& g = phi.grid;
    VectorField out(g);
    if (mob.is_constant()) {
        for (int a = 0; a < g.dim; ++a) std::fill(out.comp[a].begin(), out.comp[a].end(), mob.M);
        return out;
    }
    const VectorField gf = grad(phi);
    std::vector<Vec3> cell_grad(g.cells(), Vec3::Zero());
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const auto cc = g.coords(c);
        for (int a = 0; a < g.dim; ++a)
            cell_grad[c][a] = 0.5 * (gf.comp[a][g.cell_face(cc, a, -1)] + gf.comp[a][g.cell_face(cc, a, +1)]);
    }
    for (std::size_t c = 0; c < g.cells(); ++c) {
        const auto cc = g.coords(c);
        for (int a = 0; a < g.dim; ++a) {
            const long nb = g.neighbour(cc, a, +1);
            if (nb < 0) continue;
            const Vec3 p = 0.5 * (cell_grad[c] + cell_grad[nb]);
            const double s = 0.5 * (phi[c] + phi[nb]);
            const double m = mob.fn(p, s);
            if (!(m >= mob.M0 && m <= mob.M1))
                throw BoundViolation("mobility value " + std::to_string(m) + " outside declared bounds [" +
                                     std::to_string(mob.M0) + ", " + std::to_string(mob.M1) + "]");
            out.comp[a][g.cell_face(cc, a, +1)] = m;
        }
    }
    return out;
}

struct SolverConfig {
    double dt = 1e-3;
    double dt_min = 1e-8;
    double dt_max = 1e-3;
    double newton_tol = 1e-10; // l2 norm of the stacked residual
    int newton_max = 50;
    double linear_tol = 1e-12; // mass-conservation tolerance per step
    double epsilon = 1.0;
    bool allow_exact_log = false; // simulate Logarithmic directly (safeguarded Newton)
    bool adaptive = true;         // grow dt by 1.2 after 5 consecutive successes

    void validate() const {
        if (!(dt > 0.0)) throw ValidationError("solver.dt", "must be positive");
        if (!(dt_min > 0.0) || !(dt_max > 0.0)) throw ValidationError("solver.dt_min", "dt bounds must be positive");
        if (!(dt_min <= dt && dt <= dt_max)) throw ValidationError("solver.dt", "require dt_min <= dt <= dt_max");
        if (!(newton_tol > 0.0)) throw ValidationError("solver.newton_tol", "must be positive");
        if (newton_max < 1) throw ValidationError("solver.newton_max", "must be >= 1");
        if (!(linear_tol > 0.0)) throw ValidationError("solver.linear_tol", "must be positive");
        if (!(epsilon > 0.0)) throw ValidationError("solver.epsilon", "must be positive");
    }
};

struct SolverState {
    Field phi;
    Field mu;
    double t = 0.0;
    long step_index = 0;
    int last_newton_iters = 0;
    double dt = 0.0; // step size proposed for the next step
    int consecutive_successes = 0;
};

struct StepStats {
    double dt = 0.0;
    int newton_iters = 0;
    double residual = 0.0;
    double dissipation = 0.0; // dt <M grad mu+, grad mu+>
    int retries = 0;
    int factorizations = 0;
    long total_factorizations = 0;
};

// Exact-log iterates are kept inside this interval.
inline constexpr double kExactLogMargin = 1e-12;

/// mu_0 = -eps div A'(grad phi_0) + eps^-1 F'(phi_0).
inline Field initial_mu(const Field& phi0, const PotentialSpec& pot, const AnisotropySpec& aniso,
                        const SolverConfig& cfg) {
    if (!phi0.all_finite()) throw DomainError("initial_mu: phi0 has non-finite values");
    if (std::holds_alternative<Logarithmic>(pot) && linf(phi0) >= 1.0)
        throw DomainError("initial_mu: phi0 touches +-1 under the exact logarithmic potential");
    Field mu = div(gradient_flux(phi0, AnisotropicDensity{&aniso}));
    const double eps = cfg.epsilon;
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = -eps * mu[i] + eval_Fp(pot, phi0[i]) / eps;
    return mu;
}

class Stepper {
public:
    Stepper(PotentialSpec pot, AnisotropySpec aniso, MobilitySpec mob, SolverConfig cfg)
        : pot_(std::move(pot)), aniso_(std::move(aniso)), mob_(std::move(mob)), cfg_(cfg) {
        cfg_.validate();
        if (std::holds_alternative<DoubleObstacle>(pot_))
            throw ValidationError("potential.kind", "double obstacle supports evaluation only");
        if (std::holds_alternative<Logarithmic>(pot_) && !cfg_.allow_exact_log)
            throw ValidationError("potential.kind",
                                  "exact logarithmic dynamics require solver.exact_log = true (use the ladder)");
        if (std::holds_alternative<RegularizedLog>(pot_)) detail::require_ladder(pot_);
    }

    const PotentialSpec& potential() const { return pot_; }
    const AnisotropySpec& anisotropy() const { return aniso_; }
    const MobilitySpec& mobility() const { return mob_; }
    const SolverConfig& config() const { return cfg_; }
    const StepStats& last_stats() const { return stats_; }

    SolverState make_state(const Field& phi0) const {
        if (phi0.grid.dim != aniso_.dim) throw ValidationError("anisotropy.dim", "does not match grid dimension");
        SolverState s;
        s.phi = phi0;
        s.mu = initial_mu(phi0, pot_, aniso_, cfg_);
        s.dt = cfg_.dt;
        return s;
    }

    /// One Newton solve with step size dt. Returns the new state, or nullopt if Newton fails.
    std::optional<SolverState> try_step(const SolverState& in, double dt) {
        const Grid& g = in.phi.grid;
        const std::size_t n = g.cells();
        const double eps = cfg_.epsilon;
        const bool exact_log = std::holds_alternative<Logarithmic>(pot_);
        const VectorField mface = mobility_faces(mob_, in.phi);
        const AnisotropicDensity dens{&aniso_};

        // Explicit concave contribution.
        std::vector<double> concave(n);
        for (std::size_t i = 0; i < n; ++i) concave[i] = eval_F2p(pot_, in.phi[i]) / eps;

        Field phi = in.phi;
        Field mu = in.mu;

        auto residual = [&](const Field& ph, const Field& m, Eigen::VectorXd& r) -> double {
            r.resize(static_cast<Eigen::Index>(2 * n));
            const Field flux_div = div(scale_faces(grad(m), mface));
            const Field aniso_div = div(gradient_flux(ph, dens));
            try {
                for (std::size_t i = 0; i < n; ++i) {
                    r[static_cast<Eigen::Index>(i)] = ph[i] - in.phi[i] - dt * flux_div[i];
                    r[static_cast<Eigen::Index>(n + i)] =
                        m[i] - (-eps * aniso_div[i] + eval_F1p(pot_, ph[i]) / eps + concave[i]);
                }
            } catch (const DomainError&) {
                return std::numeric_limits<double>::infinity();
            }
            const double nrm = std::sqrt(r.squaredNorm() * g.cell_volume());
            return std::isfinite(nrm) ? nrm : std::numeric_limits<double>::infinity();
        };

        Eigen::VectorXd r;
        double rn = residual(phi, mu, r);
        stats_ = StepStats{};
        stats_.dt = dt;
        stats_.total_factorizations = total_factorizations_;
        if (!std::isfinite(rn)) return std::nullopt;

        // A factorization from an earlier step stays usable as a chord Jacobian when
        // the step size and the mobility block are unchanged.
        bool have_factor = lu_ && mob_.is_constant() && factor_dt_ == dt && pattern_grid_ == g;
        stale_ = have_factor;
        for (int it = 0;; ++it) {
            if (rn <= cfg_.newton_tol) {
                stats_.newton_iters = it;
                stats_.residual = rn;
                break;
            }
            if (it >= cfg_.newton_max) return std::nullopt;
            if (!have_factor) {
                if (!factorize(phi, mface, dt)) return std::nullopt;
                have_factor = true;
            }
            Eigen::VectorXd delta = lu_->solve(-r);
            if (lu_->info() != Eigen::Success || !delta.allFinite()) return std::nullopt;

            double alpha = 1.0;
            if (exact_log) {
                for (int k = 0; k < 60; ++k) {
                    bool inside = true;
                    for (std::size_t i = 0; i < n && inside; ++i)
                        inside = std::abs(phi[i] + alpha * delta[static_cast<Eigen::Index>(i)]) < 1.0 - kExactLogMargin;
                    if (inside) break;
                    alpha *= 0.5;
                }
            }
            Field phi_t(g), mu_t(g);
            Eigen::VectorXd r_t;
            double rn_t = std::numeric_limits<double>::infinity();
            for (int k = 0; k < 12; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    phi_t[i] = phi[i] + alpha * delta[static_cast<Eigen::Index>(i)];
                    mu_t[i] = mu[i] + alpha * delta[static_cast<Eigen::Index>(n + i)];
                }
                rn_t = residual(phi_t, mu_t, r_t);
                if (rn_t < (1.0 - 1e-4 * alpha) * rn) break;
                alpha *= 0.5;
            }
            if (!(rn_t < rn)) {
                if (stale_) {
                    // Jacobian from an earlier iterate: refresh and retry from the same point.
                    have_factor = false;
                    stale_ = false;
                    continue;
                }
                return std::nullopt;
            }
            // Chord iterations reuse the factorization while convergence is fast.
            const double ratio = rn_t / rn;
            phi = std::move(phi_t);
            mu = std::move(mu_t);
            r = std::move(r_t);
            rn = rn_t;
            stale_ = true;
            if (ratio > 0.2 || alpha < 1.0) have_factor = false;
        }

        SolverState out = in;
        out.phi = std::move(phi);
        out.mu = std::move(mu);
        const double drift = std::abs(mean(out.phi) - mean(in.phi));
        if (drift > cfg_.linear_tol * std::max(1.0, std::abs(mean(in.phi))))
            throw StepFailure("mass conservation violated in step: drift " + std::to_string(drift));
        out.t = in.t + dt;
        out.step_index = in.step_index + 1;
        out.last_newton_iters = stats_.newton_iters;
        const VectorField gm = grad(out.mu);
        stats_.dissipation = dt * inner(scale_faces(gm, mface), gm);
        return out;
    }

    /// Adaptive step: halve dt on failure down to dt_min, grow by 1.2 after five successes.
    SolverState step(const SolverState& in) {
        double dt = in.dt > 0.0 ? in.dt : cfg_.dt;
        int retries = 0;
        for (;;) {
            auto out = try_step(in, dt);
            if (out) {
                out->consecutive_successes = in.consecutive_successes + 1;
                double next = dt;
                if (cfg_.adaptive && out->consecutive_successes >= 5) {
                    next = std::min(cfg_.dt_max, 1.2 * dt);
                    out->consecutive_successes = 0;
                }
                if (retries > 0) out->consecutive_successes = 0;
                out->dt = next;
                stats_.retries = retries;
                return *std::move(out);
            }
            if (dt * 0.5 < cfg_.dt_min)
                throw StepFailure("step failed to converge at t = " + std::to_string(in.t) + " down to dt_min = " +
                                  std::to_string(cfg_.dt_min));
            dt *= 0.5;
            ++retries;
        }
    }

private:
    bool factorize(const Field& phi, const VectorField& mface, double dt) {
        const Grid& g = phi.grid;
        const long n = static_cast<long>(g.cells());
        const double eps = cfg_.epsilon;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(n) * (g.dim == 2 ? 80 : 300));
        for (long i = 0; i < n; ++i) {
            trip.emplace_back(i, i, 1.0);
            trip.emplace_back(n + i, n + i, 1.0);
            double f1pp;
            try {
                f1pp = eval_F1pp(pot_, phi[static_cast<std::size_t>(i)]);
            } catch (const DomainError&) {
                return false;
            }
            trip.emplace_back(n + i, i, -f1pp / eps);
        }
        add_weighted_laplacian(mface, -dt, 0, n, trip);
        add_gradient_hessian(phi, AnisotropicDensity{&aniso_}, -eps, n, 0, trip);
        Eigen::SparseMatrix<double> J(2 * n, 2 * n);
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();
        if (!lu_ || pattern_grid_ != g || pattern_nnz_ != J.nonZeros()) {
            lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Ordering>>();
            lu_->analyzePattern(J);
            pattern_grid_ = g;
            pattern_nnz_ = J.nonZeros();
        }
        lu_->factorize(J);
        ++stats_.factorizations;
        stats_.total_factorizations = ++total_factorizations_;
        factor_dt_ = dt;
        stale_ = false;
        if (lu_->info() != Eigen::Success) {
            factor_dt_ = -1.0;
            return false;
        }
        return true;
    }

    PotentialSpec pot_;
    AnisotropySpec aniso_;
    MobilitySpec mob_;
    SolverConfig cfg_;
    StepStats stats_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Ordering>> lu_;
    Grid pattern_grid_;
    Eigen::Index pattern_nnz_ = -1;
    double factor_dt_ = -1.0;
    long total_factorizations_ = 0;
    bool stale_ = false;
};

/// Convenience single step with a throw-away stepper.
inline SolverState step(const SolverState& state, const PotentialSpec& pot, const AnisotropySpec& aniso,
                        const MobilitySpec& mob, const SolverConfig& cfg) {
    Stepper s(pot, aniso, mob, cfg);
    return s.step(state);
}

// ---- trajectories -------------------------------------------------------------

struct RunOptions {
    double horizon = 0.0;
    long max_steps = -1;     // stop early after this many accepted steps (if >= 0)
    bool keep_states = false; // retain phi after every accepted step
    DiagnosticsSink sink;
    std::function<void(const SolverState&)> observer; // called with every recorded state
};

struct RunSummary {
    SolverState final_state;
    std::vector<DiagnosticsRecord> records; // index 0 is the initial state
    std::vector<Field> states;              // phi per record when keep_states
    double max_energy_increase = -std::numeric_limits<double>::infinity();
    double max_mass_drift = 0.0;
    double min_delta = std::numeric_limits<double>::infinity();
    double max_ledger = -std::numeric_limits<double>::infinity();
    double energy0 = 0.0;
    long steps = 0;
};

/// Advances until t >= horizon, emitting one record per accepted step (plus the initial one).
inline RunSummary run(Stepper& stepper, const Field& phi0, const RunOptions& opt) {
    if (!(opt.horizon > 0.0) && opt.max_steps < 0) throw PreconditionError("run: horizon must be positive");
    const double eps = stepper.config().epsilon;
    RunSummary sum;
    SolverState state = stepper.make_state(phi0);
    const double mass0 = mean(phi0);

    auto emit = [&](const SolverState& s, double ledger, double dt, int iters) {
        DiagnosticsRecord rec = make_record(s.t, s.phi, s.mu, stepper.potential(), stepper.anisotropy(), eps);
        rec.ledger = ledger;
        rec.dt = dt;
        rec.newton_iters = iters;
        sum.max_mass_drift = std::max(sum.max_mass_drift, std::abs(rec.mass - mass0));
        sum.min_delta = std::min(sum.min_delta, rec.delta);
        sum.max_ledger = std::max(sum.max_ledger, ledger);
        if (!sum.records.empty())
            sum.max_energy_increase = std::max(sum.max_energy_increase, rec.energy_n - sum.records.back().energy_n);
        if (opt.sink) opt.sink(rec);
        sum.records.push_back(rec);
        if (opt.keep_states) sum.states.push_back(s.phi);
        if (opt.observer) opt.observer(s);
    };

    emit(state, 0.0, 0.0, 0);
    sum.energy0 = sum.records.front().energy_n;
    double dissipated = 0.0;
    const double t_end = opt.horizon * (1.0 - 1e-12);
    while ((opt.horizon > 0.0 ? state.t < t_end : true) && (opt.max_steps < 0 || sum.steps < opt.max_steps)) {
        state = stepper.step(state);
        ++sum.steps;
        dissipated += stepper.last_stats().dissipation;
        const double en = energy(state.phi, stepper.potential(), stepper.anisotropy(), eps);
        emit(state, en + dissipated - sum.energy0, stepper.last_stats().dt, stepper.last_stats().newton_iters);
    }
    if (sum.steps == 0) sum.max_energy_increase = 0.0;
    sum.final_state = std::move(state);
    return sum;
}

inline RunSummary run(const Field& phi0, double horizon, const PotentialSpec& pot, const AnisotropySpec& aniso,
                      const MobilitySpec& mob, const SolverConfig& cfg, DiagnosticsSink sink = {}) {
    Stepper stepper(pot, aniso, mob, cfg);
    RunOptions opt;
    opt.horizon = horizon;
    opt.sink = std::move(sink);
    return run(stepper, phi0, opt);
}

// ---- regularization ladder sweep ------------------------------------------------

struct LadderSweepResult {
    std::vector<long> indices;
    std::vector<RunSummary> runs;
    std::vector<double> distances; // max over matched times of l2(phi_{n_i} - phi_{n_{i+1}})
    std::vector<double> final_masses;
};

/// Runs one trajectory per multiple of N. Members are independent, so up to
/// `threads` of them advance concurrently without affecting the results.
inline LadderSweepResult ladder_sweep(const Field& phi0, const LogParams& params, const std::vector<long>& multipliers,
                                      const AnisotropySpec& aniso, const MobilitySpec& mob, const SolverConfig& cfg,
                                      double horizon, int threads = 1) {
    const long base = ladder_min_index(params);
    LadderSweepResult res;
    const std::size_t m = multipliers.size();
    res.runs.resize(m);
    std::vector<std::exception_ptr> errors(m);
    for (long k : multipliers) res.indices.push_back(k * base);
    auto member = [&](std::size_t i) {
        try {
            Stepper stepper(make_regularized(params, res.indices[i]), aniso, mob, cfg);
            RunOptions opt;
            opt.horizon = horizon;
            opt.keep_states = true;
            res.runs[i] = run(stepper, phi0, opt);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, m);
    if (workers <= 1) {
        for (std::size_t i = 0; i < m; ++i) member(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < m; i = next++) member(i);
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (const auto& r : res.runs) res.final_masses.push_back(mean(r.final_state.phi));
    for (std::size_t k = 0; k + 1 < res.runs.size(); ++k) {
        const auto& a = res.runs[k];
        const auto& b = res.runs[k + 1];
        double d = 0.0;
        std::size_t j = 0;
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            const double tol = 1e-12 * std::max(1.0, a.records[i].t);
            while (j < b.records.size() && b.records[j].t < a.records[i].t - tol) ++j;
            if (j >= b.records.size()) break;
            if (std::abs(b.records[j].t - a.records[i].t) > tol) continue;
            d = std::max(d, l2(a.states[i] - b.states[j]));
        }
        res.distances.push_back(d);
    }
    return res;
}

} // namespace anich
