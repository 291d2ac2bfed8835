#pragma once

// Persistent formats: CSV time series, binary field snapshots (with an
// optional CSV export for 2D) and the JSON run manifest.
//
// Snapshot layout, little-endian:
//   0   char[8]  magic "ANICH1\0\0"
//   8   u32      dimension
//   12  u32[3]   cell counts (unused axes are 1)
//   24  f64[3]   spacing (unused axes are 1)
//   48  u32      boundary code (0 neumann, 1 periodic)
//   52  u32      reserved, zero
//   56  f64      time
//   64  f64[]    values, x fastest

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anich/config.hpp"
#include "anich/diagnostics.hpp"
#include "anich/errors.hpp"
#include "anich/grid.hpp"

namespace anich {

class IoError : public Error {
public:
    using Error::Error;
};

// ---- time series ------------------------------------------------------------

inline constexpr const char* kSeriesHeader =
    "t,energy,energy_n,mass,phi_min,phi_max,delta,fprime_l2,gradmu_l2,ledger,dt,newton_iters";

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string series_row(const DiagnosticsRecord& r) {
    std::string s;
    for (double v : {r.t, r.energy, r.energy_n, r.mass, r.phi_min, r.phi_max, r.delta, r.fprime_l2, r.gradmu_l2,
                     r.ledger, r.dt}) {
        s += format_real(v);
        s += ',';
    }
    s += std::to_string(r.newton_iters);
    return s;
}

/// Streams records to a CSV file; flushes every row so that partial runs keep their output.
class SeriesWriter {
public:
    explicit SeriesWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
        out_ << kSeriesHeader << '\n';
    }
    void write(const DiagnosticsRecord& r) {
        out_ << series_row(r) << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

inline void write_series(std::ostream& out, const std::vector<DiagnosticsRecord>& records) {
    out << kSeriesHeader << '\n';
    for (const auto& r : records) out << series_row(r) << '\n';
}

// ---- snapshots --------------------------------------------------------------

struct Snapshot {
    Field field;
    double time = 0.0;
};

namespace detail {

template <class T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

template <class T>
void put(std::vector<unsigned char>& buf, std::size_t off, T v) {
    v = to_le(v);
    std::memcpy(buf.data() + off, &v, sizeof(T));
}

template <class T>
T get(const std::vector<unsigned char>& buf, std::size_t off) {
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    return to_le(v);
}

inline constexpr char kMagic[8] = {'A', 'N', 'I', 'C', 'H', '1', '\0', '\0'};

} // namespace detail

inline std::vector<unsigned char> encode_snapshot(const Field& f, double time) {
    const Grid& g = f.grid;
    std::vector<unsigned char> buf(64 + 8 * f.size(), 0);
    std::memcpy(buf.data(), detail::kMagic, 8);
    detail::put<std::uint32_t>(buf, 8, static_cast<std::uint32_t>(g.dim));
    for (int a = 0; a < 3; ++a) {
        detail::put<std::uint32_t>(buf, 12 + 4 * a, static_cast<std::uint32_t>(g.n[a]));
        detail::put<double>(buf, 24 + 8 * a, g.h[a]);
    }
    detail::put<std::uint32_t>(buf, 48, g.bc == Boundary::Neumann ? 0u : 1u);
    detail::put<std::uint32_t>(buf, 52, 0u);
    detail::put<double>(buf, 56, time);
    for (std::size_t i = 0; i < f.size(); ++i) detail::put<double>(buf, 64 + 8 * i, f[i]);
    return buf;
}

inline Snapshot decode_snapshot(const std::vector<unsigned char>& buf) {
    if (buf.size() < 64) throw IoError("snapshot: truncated header");
    if (std::memcmp(buf.data(), detail::kMagic, 8) != 0) throw IoError("snapshot: bad magic");
    const auto d = detail::get<std::uint32_t>(buf, 8);
    if (d != 2 && d != 3) throw IoError("snapshot: unsupported dimension " + std::to_string(d));
    std::array<int, 3> n{};
    std::array<double, 3> h{};
    for (int a = 0; a < 3; ++a) {
        n[a] = static_cast<int>(detail::get<std::uint32_t>(buf, 12 + 4 * a));
        h[a] = detail::get<double>(buf, 24 + 8 * a);
    }
    const auto bc = detail::get<std::uint32_t>(buf, 48);
    if (bc > 1) throw IoError("snapshot: unknown boundary code " + std::to_string(bc));
    Grid g;
    try {
        g = Grid(static_cast<int>(d), n, h, bc == 0 ? Boundary::Neumann : Boundary::Periodic);
    } catch (const Error& e) {
        throw IoError(std::string("snapshot: invalid grid: ") + e.what());
    }
    if (buf.size() != 64 + 8 * g.cells())
        throw IoError("snapshot: expected " + std::to_string(64 + 8 * g.cells()) + " bytes, got " +
                      std::to_string(buf.size()));
    Snapshot s{Field(g), detail::get<double>(buf, 56)};
    for (std::size_t i = 0; i < g.cells(); ++i) s.field[i] = detail::get<double>(buf, 64 + 8 * i);
    return s;
}

inline void write_snapshot(const std::string& path, const Field& f, double time) {
    const auto buf = encode_snapshot(f, time);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_snapshot(buf);
}

/// 2D only: one row per y index, x along the row.
inline void write_snapshot_csv(const std::string& path, const Field& f) {
    const Grid& g = f.grid;
    if (g.dim != 2) throw IoError("CSV export is available for 2D fields only");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (int j = 0; j < g.n[1]; ++j) {
        for (int i = 0; i < g.n[0]; ++i) {
            if (i) out << ',';
            out << format_real(f[g.index(i, j)]);
        }
        out << '\n';
    }
}

// ---- manifest ---------------------------------------------------------------

inline nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

/// Fully resolved configuration including the computed ladder indices and anisotropy constants.
inline nlohmann::ordered_json manifest_json(const ScenarioConfig& sc) {
    using json = nlohmann::ordered_json;
    json m;
    m["format"] = "anich-manifest-1";
    m["name"] = sc.name;

    const auto& g = sc.grid;
    json grid;
    grid["dim"] = g.dim;
    grid["cells"] = json::array();
    grid["spacing"] = json::array();
    for (int a = 0; a < g.dim; ++a) {
        grid["cells"].push_back(g.cells[a]);
        grid["spacing"].push_back(g.spacing[a]);
    }
    grid["bc"] = boundary_name(g.bc);
    m["grid"] = grid;

    const auto& p = sc.potential;
    json pot;
    pot["kind"] = p.kind;
    if (p.kind == "logarithmic") {
        pot["theta"] = p.theta;
        pot["theta_c"] = p.theta_c;
        pot["ladder"] = p.ladder;
        pot["ladder_multiplier"] = p.ladder_multiplier;
        pot["N"] = p.ladder_min;
        pot["n"] = p.ladder_n;
        pot["simulated"] = potential_kind_name(p.spec);
    } else {
        pot["alpha"] = p.alpha;
        pot["p"] = p.p;
    }
    m["potential"] = pot;

    const auto& a = sc.anisotropy;
    json an;
    an["kind"] = a.kind;
    an["matrices"] = json::array();
    for (const auto& mat : a.matrices) an["matrices"].push_back(matrix_json(mat));
    an["samples"] = a.samples;
    an["seed"] = a.seed;
    an["A0"] = a.constants.A0;
    an["A1"] = a.constants.A1;
    an["a0"] = a.constants.a0;
    an["a1"] = a.constants.a1;
    m["anisotropy"] = an;

    json mob;
    mob["kind"] = sc.mobility.kind;
    mob["M"] = sc.mobility.M;
    mob["M0"] = sc.mobility.M0;
    mob["M1"] = sc.mobility.M1;
    m["mobility"] = mob;

    const auto& s = sc.solver;
    json sol;
    sol["dt"] = s.dt;
    sol["dt_min"] = s.dt_min;
    sol["dt_max"] = s.dt_max;
    sol["newton_tol"] = s.newton_tol;
    sol["newton_max"] = s.newton_max;
    sol["linear_tol"] = s.linear_tol;
    sol["epsilon"] = s.epsilon;
    sol["exact_log"] = s.allow_exact_log;
    sol["adaptive"] = s.adaptive;
    sol["horizon"] = sc.horizon;
    sol["steps"] = sc.max_steps;
    m["solver"] = sol;

    const auto& i = sc.initial;
    json init;
    init["kind"] = i.kind;
    if (i.kind == "constant") {
        init["value"] = i.value;
    } else if (i.kind == "cosine") {
        init["mean"] = i.value;
        init["modes"] = json::array();
        for (const auto& mode : i.modes) {
            json jm;
            jm["k"] = json::array();
            for (int ax = 0; ax < g.dim; ++ax) jm["k"].push_back(mode.k[ax]);
            jm["amplitude"] = mode.amplitude;
            init["modes"].push_back(jm);
        }
    } else {
        init["mean"] = i.random.mean;
        init["amplitude"] = i.random.amplitude;
        init["radius"] = i.random.radius;
        init["seed"] = i.random.seed;
        init["max_sup"] = i.random.max_sup;
    }
    m["initial"] = init;

    json out;
    out["dir"] = sc.output.dir;
    out["series"] = sc.output.series;
    out["manifest"] = sc.output.manifest;
    out["snapshot_prefix"] = sc.output.snapshot_prefix;
    out["snapshot_every"] = sc.output.snapshot_every;
    out["csv_export"] = sc.output.csv_export;
    m["output"] = out;
    return m;
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

} // namespace anich
