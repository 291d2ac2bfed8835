#pragma once

// Observables evaluated along a trajectory: the discrete energy, separation
// from the pure states, the per-step diagnostics record and the fitted
// envelope constant of the F' a-priori bound.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "anich/anisotropy.hpp"
#include "anich/errors.hpp"
#include "anich/gradient_energy.hpp"
#include "anich/grid.hpp"
#include "anich/potentials.hpp"

namespace anich {

struct DiagnosticsRecord {
    double t = 0.0;
    double energy = 0.0;   // exact energy (NaN where the log potential is undefined)
    double energy_n = 0.0; // energy of the simulated potential (E_n on the ladder)
    double mass = 0.0;
    double phi_min = 0.0;
    double phi_max = 0.0;
    double delta = 1.0; // 1 - max|phi|; negative values are violations and are kept
    double fprime_l2 = 0.0;
    double gradmu_l2 = 0.0;
    double ledger = 0.0; // E_n(phi) + sum dt <M grad mu, grad mu> - E_n(phi_0)
    double dt = 0.0;
    int newton_iters = 0;
};

using DiagnosticsSink = std::function<void(const DiagnosticsRecord&)>;

/// Collects records from any number of trajectories; appends are serialized.
class RecordCollector {
public:
    DiagnosticsSink sink(std::size_t trajectory) {
        std::lock_guard lock(mutex_);
        if (records_.size() <= trajectory) records_.resize(trajectory + 1);
        return [this, trajectory](const DiagnosticsRecord& r) {
            std::lock_guard lock(mutex_);
            records_[trajectory].push_back(r);
        };
    }
    std::vector<DiagnosticsRecord> records(std::size_t trajectory) const {
        std::lock_guard lock(mutex_);
        return trajectory < records_.size() ? records_[trajectory] : std::vector<DiagnosticsRecord>{};
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::vector<DiagnosticsRecord>> records_;
};

/// E(phi) = int eps A(grad phi) + eps^-1 F(phi), with the corner-combination
/// rule for the gradient part. Returns +inf for the double obstacle outside [-1,1].
inline double energy(const Field& phi, const PotentialSpec& pot, const AnisotropySpec& aniso, double eps) {
    if (std::holds_alternative<Logarithmic>(pot) && linf(phi) > 1.0)
        throw DomainError("energy: logarithmic potential requires |phi| <= 1");
    double bulk = 0.0;
    for (double s : phi.v) bulk += eval_F(pot, s);
    bulk *= phi.grid.cell_volume();
    const double grad_part = gradient_energy(phi, AnisotropicDensity{&aniso});
    return eps * grad_part + bulk / eps;
}

struct Separation {
    double delta = 1.0;
    std::size_t argmax = 0; // cell attaining max |phi|
};

inline Separation separation(const Field& phi) {
    Separation s;
    double m = -1.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double a = std::abs(phi[i]);
        if (a > m) {
            m = a;
            s.argmax = i;
        }
    }
    s.delta = 1.0 - std::max(m, 0.0);
    return s;
}

/// l2 norm of F'(phi) for the simulated potential (G_n' on the ladder); +inf if undefined.
inline double fprime_l2(const Field& phi, const PotentialSpec& pot) {
    Field fp(phi.grid);
    try {
        for (std::size_t i = 0; i < phi.size(); ++i) fp[i] = eval_Fp(pot, phi[i]);
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
    return l2(fp);
}

inline DiagnosticsRecord make_record(double t, const Field& phi, const Field& mu, const PotentialSpec& pot,
                                     const AnisotropySpec& aniso, double eps) {
    DiagnosticsRecord r;
    r.t = t;
    r.energy_n = energy(phi, pot, aniso, eps);
    if (std::holds_alternative<RegularizedLog>(pot)) {
        r.energy = linf(phi) <= 1.0 ? energy(phi, exact_counterpart(pot), aniso, eps)
                                    : std::numeric_limits<double>::quiet_NaN();
    } else {
        r.energy = r.energy_n;
    }
    r.mass = mean(phi);
    r.phi_min = min_value(phi);
    r.phi_max = max_value(phi);
    r.delta = separation(phi).delta;
    r.fprime_l2 = fprime_l2(phi, pot);
    r.gradmu_l2 = l2(grad(mu));
    return r;
}

// ---- F' bound envelope --------------------------------------------------------

struct FprimeBoundReport {
    double C_hat = 0.0; // smallest C with ||F'||^2 <= C/kappa^2 (1 + ||F||_inf,[-R,R]^2 + ||grad mu||^2)
    double kappa = 1.0;
    double R = 0.0;
    double F_sup = 0.0;
    std::string kind; // potential whose derivative enters the bound
    std::vector<double> ratios;
    int violations = 0; // ratios above 2 * reference C (when given)
};

inline double sup_abs_on_interval(const PotentialSpec& pot, double R) {
    double m = std::max(std::abs(eval_F(pot, R)), std::abs(eval_F(pot, -R)));
    m = std::max(m, std::abs(eval_F(pot, 0.0)));
    const int samples = 2000;
    for (int i = 0; i <= samples; ++i) {
        const double s = -R + 2.0 * R * i / samples;
        m = std::max(m, std::abs(eval_F(pot, s)));
    }
    return m;
}

inline FprimeBoundReport fprime_bound_check(const std::vector<DiagnosticsRecord>& records, double kappa,
                                            double initial_mean, const PotentialSpec& pot,
                                            std::optional<double> reference_C = std::nullopt) {
    if (!(kappa > 0.0 && kappa <= 1.0)) throw PreconditionError("fprime_bound_check: kappa must lie in (0,1]");
    if (std::abs(initial_mean) > 1.0 - kappa)
        throw PreconditionError("fprime_bound_check: |mean(phi_0)| must not exceed 1 - kappa");
    FprimeBoundReport rep;
    rep.kappa = kappa;
    rep.R = std::abs(initial_mean) + 0.5 * kappa;
    rep.F_sup = sup_abs_on_interval(pot, rep.R);
    rep.kind = potential_kind_name(pot);
    for (const auto& r : records) {
        const double ratio =
            r.fprime_l2 * r.fprime_l2 * kappa * kappa / (1.0 + rep.F_sup * rep.F_sup + r.gradmu_l2 * r.gradmu_l2);
        rep.ratios.push_back(ratio);
        rep.C_hat = std::max(rep.C_hat, ratio);
        if (reference_C && ratio > 2.0 * *reference_C) ++rep.violations;
    }
    return rep;
}

} // namespace anich
