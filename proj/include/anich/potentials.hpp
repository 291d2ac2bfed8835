#pragma once

// Free-energy densities: the Flory-Huggins logarithmic potential split into
// its convex and concave parts, the C^2 regularization ladder G_n that
// replaces the singular branches by quadratic Taylor extensions, and the
// polynomial double-well / double-obstacle comparison potentials.

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>

#include "anich/errors.hpp"

namespace anich {

struct LogParams {
    double theta = 1.0;   // absolute temperature
    double theta_c = 2.0; // critical temperature

    // Informational only; evaluation never depends on it.
    bool phase_separating() const noexcept { return theta < theta_c; }

    void validate() const {
        if (!(theta > 0.0) || !std::isfinite(theta))
            throw ValidationError("potential.theta", "must be a positive real");
        if (!(theta_c > 0.0) || !std::isfinite(theta_c))
            throw ValidationError("potential.theta_c", "must be a positive real");
    }
};

struct LadderIndex {
    long n = 1;
};

struct Logarithmic {
    LogParams params;
};

struct RegularizedLog {
    LogParams params;
    LadderIndex index;
};

struct DoubleWell {
    double alpha = 1.0;
    double p = 4.0; // growth exponent tag, must lie in [2,6)
};

// Evaluation only; there is no time stepping for this potential.
struct DoubleObstacle {};

using PotentialSpec = std::variant<Logarithmic, RegularizedLog, DoubleWell, DoubleObstacle>;

namespace detail {

inline double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

// F_1 for the logarithmic potential, continuous extension at s = +-1.
inline double log_convex(double theta, double s) {
    return 0.5 * theta * (xlogx(1.0 + s) + xlogx(1.0 - s));
}

inline double log_concave(double theta_c, double s) { return 0.5 * theta_c * (1.0 - s * s); }

inline double log_convex_d1(double theta, double s) {
    return 0.5 * theta * (std::log1p(s) - std::log1p(-s));
}

inline double log_convex_d2(double theta, double s) { return theta / ((1.0 - s) * (1.0 + s)); }

inline void require_open_interval(double s, const char* what) {
    if (!(std::abs(s) < 1.0))
        throw DomainError(std::string(what) + ": argument must lie in (-1,1), got " + std::to_string(s));
}

inline double ladder_breakpoint(long n) { return 1.0 - 1.0 / static_cast<double>(n); }

} // namespace detail

/// Smallest integer m with m > exp(2 theta_c / theta).
inline long ladder_min_index(const LogParams& params) {
    params.validate();
    const double x = std::exp(2.0 * params.theta_c / params.theta);
    if (!std::isfinite(x) || x >= 9.0e15)
        throw OverflowError("ladder_min_index: exp(2 theta_c/theta) exceeds the representable index range");
    return static_cast<long>(std::floor(x)) + 1;
}

inline Logarithmic make_logarithmic(double theta, double theta_c) {
    LogParams p{theta, theta_c};
    p.validate();
    return Logarithmic{p};
}

inline RegularizedLog make_regularized(const LogParams& params, long n) {
    const long n_min = ladder_min_index(params);
    if (n < n_min)
        throw LadderError("ladder index n = " + std::to_string(n) + " is below the minimum N = " +
                          std::to_string(n_min));
    return RegularizedLog{params, LadderIndex{n}};
}

inline DoubleWell make_double_well(double alpha = 1.0, double p = 4.0) {
    if (!(alpha > 0.0)) throw ValidationError("potential.alpha", "must be a positive real");
    if (!(p >= 2.0 && p < 6.0)) throw ValidationError("potential.p", "growth exponent must lie in [2,6)");
    return DoubleWell{alpha, p};
}

/// Second-order Taylor polynomial of s ln s at 1/n.
inline double eval_Hn(LadderIndex idx, double s) {
    const double n = static_cast<double>(idx.n);
    return -0.5 / n - s * std::log(n) + 0.5 * n * s * s;
}

// ---- ladder branches -------------------------------------------------------

namespace detail {

inline double ladder_convex(const RegularizedLog& r, double s) {
    const double theta = r.params.theta;
    const double b = ladder_breakpoint(r.index.n);
    if (s < -b) return 0.5 * theta * (xlogx(1.0 - s) + eval_Hn(r.index, 1.0 + s));
    if (s > b) return 0.5 * theta * (eval_Hn(r.index, 1.0 - s) + xlogx(1.0 + s));
    return log_convex(theta, s);
}

inline double ladder_convex_d1(const RegularizedLog& r, double s) {
    const double theta = r.params.theta;
    const double n = static_cast<double>(r.index.n);
    const double b = ladder_breakpoint(r.index.n);
    if (s < -b) return 0.5 * theta * (-std::log1p(-s) + n * (s + 1.0) - 1.0 - std::log(n));
    if (s > b) return 0.5 * theta * (std::log1p(s) + n * (s - 1.0) + 1.0 + std::log(n));
    return log_convex_d1(theta, s);
}

inline double ladder_convex_d2(const RegularizedLog& r, double s) {
    const double theta = r.params.theta;
    const double n = static_cast<double>(r.index.n);
    const double b = ladder_breakpoint(r.index.n);
    if (s < -b) return 0.5 * theta * (1.0 / (1.0 - s) + n);
    if (s > b) return 0.5 * theta * (1.0 / (1.0 + s) + n);
    return log_convex_d2(theta, s);
}

inline const RegularizedLog& require_ladder(const PotentialSpec& spec) {
    if (const auto* r = std::get_if<RegularizedLog>(&spec)) {
        const long n_min = ladder_min_index(r->params);
        if (r->index.n < n_min)
            throw LadderError("ladder index n = " + std::to_string(r->index.n) + " is below N = " +
                              std::to_string(n_min));
        return *r;
    }
    throw Error("ladder evaluation requires a RegularizedLog potential");
}

} // namespace detail

// ---- convex / concave parts -------------------------------------------------

/// Convex part F_1 (F_{1,n} on the ladder, alpha s^4/4 for the double well).
inline double eval_F1(const PotentialSpec& spec, double s) {
    return std::visit(
        [s](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Logarithmic>) {
                if (std::abs(s) > 1.0) throw DomainError("logarithmic F: |s| > 1");
                return detail::log_convex(k.params.theta, s);
            } else if constexpr (std::is_same_v<K, RegularizedLog>) {
                return detail::ladder_convex(k, s);
            } else if constexpr (std::is_same_v<K, DoubleWell>) {
                return 0.25 * k.alpha * s * s * s * s;
            } else {
                return std::abs(s) <= 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
            }
        },
        spec);
}

/// Concave part F_2.
inline double eval_F2(const PotentialSpec& spec, double s) {
    return std::visit(
        [s](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Logarithmic> || std::is_same_v<K, RegularizedLog>) {
                return detail::log_concave(k.params.theta_c, s);
            } else if constexpr (std::is_same_v<K, DoubleWell>) {
                return 0.25 * k.alpha * (1.0 - 2.0 * s * s);
            } else {
                return 0.5 * (1.0 - s * s);
            }
        },
        spec);
}

/// F(s) as an extended real; +inf outside [-1,1] for the double obstacle.
inline double eval_F(const PotentialSpec& spec, double s) {
    if (std::holds_alternative<DoubleObstacle>(spec))
        return std::abs(s) <= 1.0 ? 0.5 * (1.0 - s * s) : std::numeric_limits<double>::infinity();
    return eval_F1(spec, s) + eval_F2(spec, s);
}

inline double eval_F1p(const PotentialSpec& spec, double s) {
    return std::visit(
        [s](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Logarithmic>) {
                detail::require_open_interval(s, "logarithmic F1'");
                return detail::log_convex_d1(k.params.theta, s);
            } else if constexpr (std::is_same_v<K, RegularizedLog>) {
                return detail::ladder_convex_d1(k, s);
            } else if constexpr (std::is_same_v<K, DoubleWell>) {
                return k.alpha * s * s * s;
            } else {
                if (std::abs(s) > 1.0) throw DomainError("double obstacle: |s| > 1");
                return 0.0;
            }
        },
        spec);
}

inline double eval_F2p(const PotentialSpec& spec, double s) {
    return std::visit(
        [s](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Logarithmic> || std::is_same_v<K, RegularizedLog>) {
                return -k.params.theta_c * s;
            } else if constexpr (std::is_same_v<K, DoubleWell>) {
                return -k.alpha * s;
            } else {
                return -s;
            }
        },
        spec);
}

inline double eval_Fp(const PotentialSpec& spec, double s) { return eval_F1p(spec, s) + eval_F2p(spec, s); }

/// Second derivative of the convex part; used by the Newton linearization.
inline double eval_F1pp(const PotentialSpec& spec, double s) {
    return std::visit(
        [s](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Logarithmic>) {
                detail::require_open_interval(s, "logarithmic F1''");
                return detail::log_convex_d2(k.params.theta, s);
            } else if constexpr (std::is_same_v<K, RegularizedLog>) {
                return detail::ladder_convex_d2(k, s);
            } else if constexpr (std::is_same_v<K, DoubleWell>) {
                return 3.0 * k.alpha * s * s;
            } else {
                throw Error("double obstacle has no second derivative");
            }
        },
        spec);
}

inline double eval_F2pp(const PotentialSpec& spec) {
    return std::visit(
        [](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Logarithmic> || std::is_same_v<K, RegularizedLog>) {
                return -k.params.theta_c;
            } else if constexpr (std::is_same_v<K, DoubleWell>) {
                return -k.alpha;
            } else {
                return -1.0;
            }
        },
        spec);
}

// ---- ladder G_n = F_{1,n} + F_2 --------------------------------------------

inline double eval_Gn(const PotentialSpec& spec, double s) {
    const auto& r = detail::require_ladder(spec);
    return detail::ladder_convex(r, s) + detail::log_concave(r.params.theta_c, s);
}

inline double eval_Gnp(const PotentialSpec& spec, double s) {
    const auto& r = detail::require_ladder(spec);
    return detail::ladder_convex_d1(r, s) - r.params.theta_c * s;
}

inline double eval_Gnpp(const PotentialSpec& spec, double s) {
    const auto& r = detail::require_ladder(spec);
    return detail::ladder_convex_d2(r, s) - r.params.theta_c;
}

// ---- descriptors -------------------------------------------------------------

inline bool is_logarithmic_family(const PotentialSpec& spec) {
    return std::holds_alternative<Logarithmic>(spec) || std::holds_alternative<RegularizedLog>(spec);
}

inline std::string potential_kind_name(const PotentialSpec& spec) {
    return std::visit(
        [](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Logarithmic>) return "logarithmic";
            else if constexpr (std::is_same_v<K, RegularizedLog>) return "regularized_log";
            else if constexpr (std::is_same_v<K, DoubleWell>) return "double_well";
            else return "double_obstacle";
        },
        spec);
}

// The exact logarithmic potential associated with a ladder member (identity otherwise).
inline PotentialSpec exact_counterpart(const PotentialSpec& spec) {
    if (const auto* r = std::get_if<RegularizedLog>(&spec)) return Logarithmic{r->params};
    return spec;
}

} // namespace anich
