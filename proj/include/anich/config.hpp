#pragma once

// Scenario configuration: a flat INI file with the sections
//
//   [grid] [potential] [anisotropy] [mobility] [solver] [initial] [output]
//
// Unknown sections and keys are rejected with their line number so that a
// typo never silently falls back to a default.

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "anich/anisotropy.hpp"
#include "anich/errors.hpp"
#include "anich/grid.hpp"
#include "anich/initial_data.hpp"
#include "anich/potentials.hpp"
#include "anich/stepper.hpp"

namespace anich {

// ---- INI document -----------------------------------------------------------

struct IniEntry {
    std::string value;
    int line = 0;
};

class IniDocument {
public:
    static IniDocument parse(std::istream& in) {
        IniDocument doc;
        std::string raw;
        std::string section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string s = strip(raw);
            if (s.empty() || s[0] == ';' || s[0] == '#') continue;
            if (const auto hash = s.find('#'); hash != std::string::npos) s = strip(s.substr(0, hash));
            if (s.front() == '[') {
                if (s.back() != ']') throw ParseError(line, "unterminated section header '" + s + "'");
                section = lower(strip(s.substr(1, s.size() - 2)));
                if (section.empty()) throw ParseError(line, "empty section name");
                if (doc.sections_.count(section) && doc.header_line_.count(section))
                    throw ParseError(line, "duplicate section [" + section + "]");
                doc.sections_[section];
                doc.header_line_[section] = line;
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ParseError(line, "expected 'key = value', got '" + s + "'");
            if (section.empty()) throw ParseError(line, "key outside of any section");
            const std::string key = lower(strip(s.substr(0, eq)));
            if (key.empty()) throw ParseError(line, "empty key");
            auto& sec = doc.sections_[section];
            if (sec.count(key)) throw ParseError(line, "duplicate key '" + section + "." + key + "'");
            sec[key] = IniEntry{strip(s.substr(eq + 1)), line};
        }
        return doc;
    }

    static IniDocument parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    const IniEntry* find(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

    /// Throws on the first section or key not listed in `allowed` ("section" -> keys).
    void require_known(const std::map<std::string, std::vector<std::string>>& allowed) const {
        for (const auto& [name, keys] : sections_) {
            const auto a = allowed.find(name);
            if (a == allowed.end()) {
                const auto hl = header_line_.find(name);
                throw ParseError(hl == header_line_.end() ? 0 : hl->second, "unknown section [" + name + "]");
            }
            for (const auto& [key, entry] : keys) {
                bool ok = false;
                for (const auto& k : a->second) ok = ok || k == key;
                if (!ok) throw ParseError(entry.line, "unknown key '" + name + "." + key + "'");
            }
        }
    }

    static std::string strip(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }
    static std::string lower(std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }

private:
    std::map<std::string, std::map<std::string, IniEntry>> sections_;
    std::map<std::string, int> header_line_;
};

// ---- value conversion -------------------------------------------------------

namespace detail {

inline std::string at_line(const IniEntry& e, const std::string& what) {
    return "line " + std::to_string(e.line) + ": " + what;
}

// Re-raises a library validation error tagged with the config line it came from.
[[noreturn]] inline void relocate(const ValidationError& err, const IniEntry* e) {
    const std::string prefix = "validation error: " + err.field() + ": ";
    std::string what = err.what();
    if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
    if (!e || what.rfind("line ", 0) == 0) throw err;
    throw ValidationError(err.field(), at_line(*e, what));
}

inline double to_double(const std::string& field, const IniEntry& e, const std::string& text) {
    const std::string t = IniDocument::strip(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ValidationError(field, at_line(e, "'" + t + "' is not a real number"));
    return v;
}

inline long to_long(const std::string& field, const IniEntry& e, const std::string& text) {
    const std::string t = IniDocument::strip(text);
    long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ValidationError(field, at_line(e, "'" + t + "' is not an integer"));
    return v;
}

inline std::vector<std::string> split(const std::string& s, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (seps.find(c) != std::string::npos) {
            if (!IniDocument::strip(cur).empty()) out.push_back(IniDocument::strip(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!IniDocument::strip(cur).empty()) out.push_back(IniDocument::strip(cur));
    return out;
}

inline bool to_bool(const std::string& field, const IniEntry& e) {
    const std::string v = IniDocument::lower(e.value);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ValidationError(field, at_line(e, "'" + e.value + "' is not a boolean"));
}

class Reader {
public:
    Reader(const IniDocument& doc, std::string section) : doc_(doc), section_(std::move(section)) {}

    const IniEntry* entry(const std::string& key) const { return doc_.find(section_, key); }
    std::string field(const std::string& key) const { return section_ + "." + key; }

    std::string str(const std::string& key, const std::string& def) const {
        const auto* e = entry(key);
        return e ? e->value : def;
    }
    std::string word(const std::string& key, const std::string& def) const { return IniDocument::lower(str(key, def)); }
    double real(const std::string& key, double def) const {
        const auto* e = entry(key);
        return e ? to_double(field(key), *e, e->value) : def;
    }
    double required_real(const std::string& key, const std::string& why) const {
        const auto* e = entry(key);
        if (!e) throw ValidationError(field(key), "missing (" + why + ")");
        return to_double(field(key), *e, e->value);
    }
    long integer(const std::string& key, long def) const {
        const auto* e = entry(key);
        return e ? to_long(field(key), *e, e->value) : def;
    }
    bool boolean(const std::string& key, bool def) const {
        const auto* e = entry(key);
        return e ? to_bool(field(key), *e) : def;
    }
    template <class T>
    T check(const std::string& key, T value, bool ok, const std::string& what) const {
        if (ok) return value;
        const auto* e = entry(key);
        throw ValidationError(field(key), e ? at_line(*e, what) : what);
    }

private:
    const IniDocument& doc_;
    std::string section_;
};

} // namespace detail

// ---- scenario ---------------------------------------------------------------

struct GridConfig {
    int dim = 2;
    std::array<int, 3> cells{64, 64, 1};
    std::array<double, 3> spacing{0.5, 0.5, 1.0};
    Boundary bc = Boundary::Neumann;

    Grid make() const { return Grid(dim, cells, spacing, bc); }
};

struct PotentialConfig {
    std::string kind = "logarithmic"; // logarithmic | double_well | double_obstacle
    double theta = 1.0;
    double theta_c = 2.0;
    double alpha = 1.0;
    double p = 4.0;
    std::string ladder = "auto*4"; // "auto", "auto*k", an integer, or "exact"
    long ladder_multiplier = 4;    // 0 when the index is given explicitly
    long ladder_min = 0;           // N (logarithmic kind only)
    long ladder_n = 0;             // resolved index; 0 for the exact potential
    PotentialSpec spec;
};

struct AnisotropyConfig {
    std::string kind = "isotropic";
    std::vector<Eigen::MatrixXd> matrices;
    int samples = 2000;
    std::uint64_t seed = 1;
    AnisotropySpec spec;
    AnisotropyConstants constants;
};

struct MobilityConfig {
    std::string kind = "constant"; // constant | gaussian
    double M = 1.0;
    double M0 = 1.0;
    double M1 = 1.0;

    MobilitySpec make() const { return kind == "constant" ? MobilitySpec::constant(M) : MobilitySpec::gaussian(M0, M1); }
};

struct InitialConfig {
    std::string kind = "random"; // constant | cosine | random
    double value = 0.0;          // constant and cosine mean
    std::vector<CosineMode> modes;
    RandomSmoothSpec random;

    Field make(const Grid& g) const {
        if (kind == "constant") return constant_field(g, value);
        if (kind == "cosine") return cosine_modes(g, value, modes);
        return random_smooth(g, random);
    }
};

struct OutputConfig {
    std::string dir = "out";
    std::string series = "series.csv";
    std::string manifest = "manifest.json";
    std::string snapshot_prefix = "snapshot";
    long snapshot_every = 0; // accepted steps between snapshots; 0 writes initial and final only
    bool csv_export = false; // also write 2D snapshots as CSV
};

struct ScenarioConfig {
    std::string name = "scenario";
    GridConfig grid;
    PotentialConfig potential;
    AnisotropyConfig anisotropy;
    MobilityConfig mobility;
    SolverConfig solver;
    double horizon = 0.0;
    long max_steps = -1;
    InitialConfig initial;
    OutputConfig output;
};

namespace detail {

inline const std::map<std::string, std::vector<std::string>>& scenario_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"scenario", {"name"}},
        {"grid", {"dim", "cells", "spacing", "bc"}},
        {"potential", {"kind", "theta", "theta_c", "alpha", "p", "ladder"}},
        {"anisotropy", {"kind", "matrix", "matrices", "samples", "seed"}},
        {"mobility", {"kind", "m", "m0", "m1"}},
        {"solver",
         {"dt", "dt_min", "dt_max", "newton_tol", "newton_max", "linear_tol", "epsilon", "horizon", "steps",
          "exact_log", "adaptive"}},
        {"initial", {"kind", "value", "mean", "amplitude", "radius", "seed", "max_sup", "modes"}},
        {"output", {"dir", "series", "manifest", "snapshot_prefix", "snapshot_every", "csv_export"}},
    };
    return keys;
}

template <std::size_t K, class T, class Conv>
std::array<T, K> per_axis(const Reader& r, const std::string& key, int dim, std::array<T, K> def, Conv conv) {
    const auto* e = r.entry(key);
    if (!e) {
        for (int a = 1; a < dim; ++a) def[a] = def[0];
        return def;
    }
    const auto parts = split(e->value, " ,\t");
    if (parts.size() != 1 && static_cast<int>(parts.size()) != dim)
        throw ValidationError(r.field(key), at_line(*e, "expected 1 or " + std::to_string(dim) + " values"));
    std::array<T, K> out = def;
    for (int a = 0; a < dim; ++a) out[a] = conv(r.field(key), *e, parts[parts.size() == 1 ? 0 : a]);
    return out;
}

inline Eigen::MatrixXd parse_matrix(const std::string& field, const IniEntry& e, const std::string& text, int dim) {
    const auto rows = split(text, ";");
    if (static_cast<int>(rows.size()) != dim)
        throw ValidationError(field, at_line(e, "matrix needs " + std::to_string(dim) + " rows separated by ';'"));
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const auto cols = split(rows[i], " ,\t");
        if (static_cast<int>(cols.size()) != dim)
            throw ValidationError(field, at_line(e, "matrix row " + std::to_string(i + 1) + " needs " +
                                                        std::to_string(dim) + " entries"));
        for (int j = 0; j < dim; ++j) m(i, j) = to_double(field, e, cols[j]);
    }
    return m;
}

// "auto" -> (1, 0), "auto*k" / "auto×k" -> (k, 0), "n" -> (0, n), "exact" -> (0, 0).
inline std::pair<long, long> parse_ladder(const std::string& field, const IniEntry* e, const std::string& text) {
    std::string t = IniDocument::lower(IniDocument::strip(text));
    const auto fail = [&](const std::string& what) {
        return ValidationError(field, e ? at_line(*e, what) : what);
    };
    if (t == "exact") return {0, 0};
    if (t.rfind("auto", 0) == 0) {
        std::string rest = IniDocument::strip(t.substr(4));
        if (rest.empty()) return {1, 0};
        if (rest.rfind("*", 0) == 0) rest = rest.substr(1);
        else if (rest.rfind("\xC3\x97", 0) == 0) rest = rest.substr(2);
        else throw fail("expected 'auto', 'auto*k' or an integer index, got '" + text + "'");
        long k = 0;
        rest = IniDocument::strip(rest);
        const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), k);
        if (rest.empty() || res.ec != std::errc() || res.ptr != rest.data() + rest.size() || k < 1)
            throw fail("ladder multiplier must be a positive integer, got '" + text + "'");
        return {k, 0};
    }
    long n = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), n);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw fail("expected 'auto', 'auto*k' or an integer index, got '" + text + "'");
    return {0, n};
}

} // namespace detail

/// Parses and validates; the returned config holds resolved potential,
/// anisotropy (with estimated constants) and the ladder index.
inline ScenarioConfig parse_scenario(const IniDocument& doc) {
    using detail::Reader;
    doc.require_known(detail::scenario_keys());
    ScenarioConfig sc;
    sc.name = Reader(doc, "scenario").str("name", sc.name);

    // grid
    {
        Reader r(doc, "grid");
        auto& g = sc.grid;
        g.dim = static_cast<int>(r.integer("dim", 2));
        r.check("dim", g.dim, g.dim == 2 || g.dim == 3, "dimension must be 2 or 3");
        g.cells = detail::per_axis<3, int>(r, "cells", g.dim, std::array<int, 3>{64, 64, 64},
                                           [](const std::string& f, const IniEntry& e, const std::string& t) {
                                               return static_cast<int>(detail::to_long(f, e, t));
                                           });
        g.spacing = detail::per_axis<3, double>(r, "spacing", g.dim, std::array<double, 3>{0.5, 0.5, 0.5},
                                                detail::to_double);
        if (g.dim == 2) {
            g.cells[2] = 1;
            g.spacing[2] = 1.0;
        }
        for (int a = 0; a < g.dim; ++a) {
            r.check("cells", 0, g.cells[a] >= 4, "every cell count must be >= 4");
            r.check("spacing", 0, g.spacing[a] > 0.0 && std::isfinite(g.spacing[a]), "spacing must be positive");
        }
        const std::string bc = r.word("bc", "neumann");
        r.check("bc", 0, bc == "neumann" || bc == "periodic", "must be 'neumann' or 'periodic'");
        g.bc = bc == "neumann" ? Boundary::Neumann : Boundary::Periodic;
    }

    // solver (before the potential: the exact-log flag gates the ladder)
    {
        Reader r(doc, "solver");
        auto& s = sc.solver;
        s.dt = r.real("dt", s.dt);
        s.dt_min = r.real("dt_min", std::min(s.dt_min, s.dt));
        s.dt_max = r.real("dt_max", s.dt);
        s.newton_tol = r.real("newton_tol", s.newton_tol);
        s.newton_max = static_cast<int>(r.integer("newton_max", s.newton_max));
        s.linear_tol = r.real("linear_tol", s.linear_tol);
        s.epsilon = r.real("epsilon", s.epsilon);
        s.allow_exact_log = r.boolean("exact_log", false);
        s.adaptive = r.boolean("adaptive", true);
        sc.horizon = r.real("horizon", 0.0);
        sc.max_steps = r.integer("steps", -1);
        r.check("horizon", 0, sc.horizon > 0.0 || sc.max_steps > 0, "a positive horizon or step count is required");
        r.check("steps", 0, sc.max_steps == -1 || sc.max_steps > 0, "must be a positive integer");
        try {
            s.validate();
        } catch (const ValidationError& e) {
            detail::relocate(e, r.entry(e.field().substr(e.field().find('.') + 1)));
        }
    }

    // potential
    {
        Reader r(doc, "potential");
        auto& p = sc.potential;
        p.kind = r.word("kind", "logarithmic");
        if (p.kind == "logarithmic") {
            p.theta = r.required_real("theta", "needed by the logarithmic potential");
            p.theta_c = r.required_real("theta_c", "needed by the logarithmic potential");
            r.check("theta", 0, p.theta > 0.0, "must be a positive real");
            r.check("theta_c", 0, p.theta_c > 0.0, "must be a positive real");
            const LogParams lp{p.theta, p.theta_c};
            p.ladder = r.str("ladder", "auto*4");
            const auto [mult, n] = detail::parse_ladder(r.field("ladder"), r.entry("ladder"), p.ladder);
            p.ladder_min = ladder_min_index(lp);
            p.ladder_multiplier = mult;
            if (mult == 0 && n == 0) {
                if (!sc.solver.allow_exact_log)
                    throw ValidationError("potential.ladder", "'exact' requires solver.exact_log = true");
                p.ladder_n = 0;
                p.spec = make_logarithmic(p.theta, p.theta_c);
            } else {
                p.ladder_n = mult > 0 ? mult * p.ladder_min : n;
                if (p.ladder_n < p.ladder_min) {
                    const auto* e = r.entry("ladder");
                    const std::string what = "index " + std::to_string(p.ladder_n) + " is below the minimum N = " +
                                             std::to_string(p.ladder_min);
                    throw ValidationError("potential.ladder", e ? detail::at_line(*e, what) : what);
                }
                p.spec = make_regularized(lp, p.ladder_n);
            }
        } else if (p.kind == "double_well") {
            p.alpha = r.real("alpha", 1.0);
            p.p = r.real("p", 4.0);
            r.check("alpha", 0, p.alpha > 0.0, "must be a positive real");
            r.check("p", 0, p.p >= 2.0 && p.p < 6.0, "growth exponent must lie in [2,6)");
            p.ladder.clear();
            p.ladder_multiplier = 0;
            p.spec = make_double_well(p.alpha, p.p);
        } else if (p.kind == "double_obstacle") {
            throw ValidationError("potential.kind", "double_obstacle supports evaluation only, not time stepping");
        } else {
            r.check("kind", 0, false, "unknown potential kind '" + p.kind + "'");
        }
    }

    // anisotropy
    {
        Reader r(doc, "anisotropy");
        auto& a = sc.anisotropy;
        a.kind = r.word("kind", "isotropic");
        a.samples = static_cast<int>(r.integer("samples", 2000));
        a.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
        r.check("samples", 0, a.samples >= 1000, "at least 1000 samples are required");
        const int d = sc.grid.dim;
        try {
            if (a.kind == "isotropic") {
                a.spec = make_isotropic(d);
            } else if (a.kind == "ellipsoidal") {
                const auto* e = r.entry("matrix");
                if (!e) throw ValidationError("anisotropy.matrix", "missing (needed by the ellipsoidal kind)");
                a.matrices = {detail::parse_matrix("anisotropy.matrix", *e, e->value, d)};
                a.spec = make_ellipsoidal(a.matrices[0]);
            } else if (a.kind == "sum_of_ellipsoids") {
                const auto* e = r.entry("matrices");
                if (!e) throw ValidationError("anisotropy.matrices", "missing (needed by the sum_of_ellipsoids kind)");
                for (const auto& part : detail::split(e->value, "|"))
                    a.matrices.push_back(detail::parse_matrix("anisotropy.matrices", *e, part, d));
                a.spec = make_sum_of_ellipsoids(a.matrices);
            } else {
                r.check("kind", 0, false, "unknown anisotropy kind '" + a.kind + "'");
            }
        } catch (const ValidationError& e) {
            detail::relocate(e, r.entry(a.kind == "ellipsoidal" ? "matrix" : "matrices"));
        }
        a.constants = estimate_constants(a.spec, a.samples, a.seed);
    }

    // mobility
    {
        Reader r(doc, "mobility");
        auto& m = sc.mobility;
        m.kind = r.word("kind", "constant");
        if (m.kind == "constant") {
            m.M = r.real("m", 1.0);
            r.check("m", 0, m.M > 0.0, "must be a positive real");
            m.M0 = m.M1 = m.M;
        } else if (m.kind == "gaussian") {
            m.M0 = r.required_real("m0", "needed by the gaussian mobility");
            m.M1 = r.required_real("m1", "needed by the gaussian mobility");
            r.check("m0", 0, m.M0 > 0.0 && m.M1 >= m.M0, "require 0 < M0 <= M1");
            m.M = 0.5 * (m.M0 + m.M1);
        } else {
            r.check("kind", 0, false, "unknown mobility kind '" + m.kind + "'");
        }
    }

    // initial data
    {
        Reader r(doc, "initial");
        auto& i = sc.initial;
        i.kind = r.word("kind", "random");
        if (i.kind == "constant") {
            i.value = r.required_real("value", "needed by constant initial data");
        } else if (i.kind == "cosine") {
            i.value = r.real("mean", 0.0);
            const auto* e = r.entry("modes");
            if (!e) throw ValidationError("initial.modes", "missing (needed by cosine initial data)");
            for (const auto& m : detail::split(e->value, ";")) {
                const auto parts = detail::split(m, " ,\t");
                if (static_cast<int>(parts.size()) != sc.grid.dim + 1)
                    throw ValidationError("initial.modes",
                                          detail::at_line(*e, "each mode needs " + std::to_string(sc.grid.dim) +
                                                                  " wave numbers and an amplitude"));
                CosineMode cm;
                for (int a = 0; a < sc.grid.dim; ++a)
                    cm.k[a] = static_cast<int>(detail::to_long("initial.modes", *e, parts[a]));
                cm.amplitude = detail::to_double("initial.modes", *e, parts.back());
                i.modes.push_back(cm);
            }
        } else if (i.kind == "random") {
            i.random.mean = r.real("mean", 0.0);
            i.random.amplitude = r.real("amplitude", 0.3);
            i.random.radius = r.real("radius", 2.0);
            i.random.seed = static_cast<std::uint64_t>(r.integer("seed", 1));
            i.random.max_sup = r.real("max_sup", 0.95);
            r.check("amplitude", 0, i.random.amplitude >= 0.0, "must be non-negative");
            r.check("radius", 0, i.random.radius > 0.0, "must be positive");
            r.check("max_sup", 0, i.random.max_sup > 0.0 && i.random.max_sup < 1.0, "must lie in (0,1)");
            r.check("amplitude", 0, std::abs(i.random.mean) + i.random.amplitude <= i.random.max_sup,
                    "|mean| + amplitude exceeds " + std::to_string(i.random.max_sup));
        } else {
            r.check("kind", 0, false, "unknown initial-data kind '" + i.kind + "'");
        }
    }

    // output
    {
        Reader r(doc, "output");
        auto& o = sc.output;
        o.dir = r.str("dir", o.dir);
        o.series = r.str("series", o.series);
        o.manifest = r.str("manifest", o.manifest);
        o.snapshot_prefix = r.str("snapshot_prefix", o.snapshot_prefix);
        o.snapshot_every = r.integer("snapshot_every", 0);
        o.csv_export = r.boolean("csv_export", false);
        r.check("snapshot_every", 0, o.snapshot_every >= 0, "must be non-negative");
    }
    return sc;
}

inline ScenarioConfig parse_scenario_string(const std::string& text) {
    return parse_scenario(IniDocument::parse_string(text));
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config", "cannot open '" + path + "'");
    return parse_scenario(IniDocument::parse(in));
}

} // namespace anich
