#pragma once

// Uniform cell-centered tensor grids on boxes with face-centered fluxes.
//
// Layout: cell (i,j,k) has linear index i + n0*(j + n1*k). Along axis a the
// faces are numbered so that cell c has its lower face at c_a and its upper
// face at c_a + 1 (Neumann, n_a + 1 faces, boundary faces carry zero flux) or
// (c_a + 1) mod n_a (periodic, n_a faces).

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "anich/errors.hpp"

namespace anich {

enum class Boundary { Neumann = 0, Periodic = 1 };

inline std::string boundary_name(Boundary bc) { return bc == Boundary::Neumann ? "neumann" : "periodic"; }

struct Grid {
    int dim = 2;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> h{1.0, 1.0, 1.0};
    Boundary bc = Boundary::Neumann;

    Grid() = default;

    Grid(int d, std::array<int, 3> cells, std::array<double, 3> spacing, Boundary b)
        : dim(d), n(cells), h(spacing), bc(b) {
        if (dim != 2 && dim != 3) throw ValidationError("grid.dims", "dimension must be 2 or 3");
        for (int a = 0; a < 3; ++a) {
            if (a >= dim) {
                n[a] = 1;
                h[a] = 1.0;
                continue;
            }
            if (n[a] < 4) throw ValidationError("grid.dims", "every cell count must be >= 4");
            if (!(h[a] > 0.0) || !std::isfinite(h[a]))
                throw ValidationError("grid.spacing", "every spacing must be a positive real");
        }
    }

    /// Square/cubic grid with equal counts and spacing.
    static Grid uniform(int d, int cells, double spacing, Boundary b) {
        return Grid(d, {cells, cells, d == 3 ? cells : 1}, {spacing, spacing, d == 3 ? spacing : 1.0}, b);
    }

    std::size_t cells() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= h[a];
        return v;
    }
    double extent(int a) const { return n[a] * h[a]; }
    double measure() const {
        double m = 1.0;
        for (int a = 0; a < dim; ++a) m *= extent(a);
        return m;
    }

    std::size_t index(int i, int j, int k = 0) const {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n[0]) * (j + static_cast<std::size_t>(n[1]) * k);
    }
    std::array<int, 3> coords(std::size_t idx) const {
        const int i = static_cast<int>(idx % n[0]);
        const std::size_t r = idx / n[0];
        return {i, static_cast<int>(r % n[1]), static_cast<int>(r / n[1])};
    }
    double center(int a, int i) const { return (i + 0.5) * h[a]; }

    // Face arrays.
    std::array<int, 3> face_dims(int a) const {
        std::array<int, 3> fd = n;
        if (bc == Boundary::Neumann) fd[a] += 1;
        return fd;
    }
    std::size_t faces(int a) const {
        const auto fd = face_dims(a);
        return static_cast<std::size_t>(fd[0]) * fd[1] * fd[2];
    }
    std::size_t face_index(int a, std::array<int, 3> f) const {
        const auto fd = face_dims(a);
        return static_cast<std::size_t>(f[0]) + static_cast<std::size_t>(fd[0]) * (f[1] + static_cast<std::size_t>(fd[1]) * f[2]);
    }
    bool boundary_face(int a, int fa) const { return bc == Boundary::Neumann && (fa == 0 || fa == n[a]); }

    // Cell index of the neighbour across the upper (dir = +1) or lower (dir = -1) face, or -1 at a Neumann wall.
    long neighbour(std::array<int, 3> c, int a, int dir) const {
        c[a] += dir;
        if (c[a] < 0 || c[a] >= n[a]) {
            if (bc == Boundary::Neumann) return -1;
            c[a] = (c[a] + n[a]) % n[a];
        }
        return static_cast<long>(index(c[0], c[1], c[2]));
    }
    // Face index of the upper (dir = +1) or lower (dir = -1) face of a cell.
    std::size_t cell_face(std::array<int, 3> c, int a, int dir) const {
        if (dir > 0) {
            c[a] += 1;
            if (bc == Boundary::Periodic && c[a] == n[a]) c[a] = 0;
        }
        return face_index(a, c);
    }

    bool operator==(const Grid& o) const { return dim == o.dim && n == o.n && h == o.h && bc == o.bc; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double value = 0.0) : grid(g), v(g.cells(), value) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    Field& operator+=(const Field& o) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
        return *this;
    }
    Field& operator*=(double s) {
        for (double& x : v) x *= s;
        return *this;
    }
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(double s, Field a) { return a *= s; }

struct VectorField {
    Grid grid;
    std::array<std::vector<double>, 3> comp;

    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g) {
        for (int a = 0; a < g.dim; ++a) comp[a].assign(g.faces(a), 0.0);
    }
};

/// Fill a field from a function of the cell-center coordinates.
template <class Fn>
Field sample(const Grid& g, Fn&& fn) {
    Field f(g);
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                const double x = g.center(0, i), y = g.center(1, j);
                const double z = g.dim == 3 ? g.center(2, k) : 0.0;
                f[g.index(i, j, k)] = fn(x, y, z);
            }
    return f;
}

/// Face-centered difference of adjacent cell values; zero on Neumann walls.
inline VectorField grad(const Field& f) {
    const Grid& g = f.grid;
    VectorField out(g);
    for (int a = 0; a < g.dim; ++a) {
        const auto fd = g.face_dims(a);
        const double inv_h = 1.0 / g.h[a];
        auto& comp = out.comp[a];
        for (int k = 0; k < fd[2]; ++k)
            for (int j = 0; j < fd[1]; ++j)
                for (int i = 0; i < fd[0]; ++i) {
                    std::array<int, 3> fc{i, j, k};
                    const std::size_t fi = g.face_index(a, fc);
                    if (g.boundary_face(a, fc[a])) {
                        comp[fi] = 0.0;
                        continue;
                    }
                    std::array<int, 3> hi = fc, lo = fc;
                    lo[a] = (fc[a] - 1 + g.n[a]) % g.n[a];
                    comp[fi] = (f[g.index(hi[0], hi[1], hi[2])] - f[g.index(lo[0], lo[1], lo[2])]) * inv_h;
                }
    }
    return out;
}

/// Discrete divergence; the negative adjoint of grad for zero-flux walls.
inline Field div(const VectorField& v) {
    const Grid& g = v.grid;
    Field out(g);
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                const std::array<int, 3> c{i, j, k};
                double s = 0.0;
                for (int a = 0; a < g.dim; ++a)
                    s += (v.comp[a][g.cell_face(c, a, +1)] - v.comp[a][g.cell_face(c, a, -1)]) / g.h[a];
                out[g.index(i, j, k)] = s;
            }
    return out;
}

inline Field lap(const Field& f) { return div(grad(f)); }

/// out = lap(f) by the direct (2d+1)-point stencil, without temporaries.
inline void lap_into(const Field& f, Field& out) {
    const Grid& g = f.grid;
    const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(g.n[0]),
                                            static_cast<std::size_t>(g.n[0]) * g.n[1]};
    std::array<double, 3> w{};
    for (int a = 0; a < g.dim; ++a) w[a] = 1.0 / (g.h[a] * g.h[a]);
    const bool periodic = g.bc == Boundary::Periodic;
    std::size_t c = 0;
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i, ++c) {
                const std::array<int, 3> cc{i, j, k};
                const double fc = f[c];
                double s = 0.0;
                for (int a = 0; a < g.dim; ++a) {
                    const std::size_t st = stride[a];
                    const std::size_t span = st * g.n[a];
                    if (cc[a] + 1 < g.n[a]) s += w[a] * (f[c + st] - fc);
                    else if (periodic) s += w[a] * (f[c + st - span] - fc);
                    if (cc[a] > 0) s += w[a] * (f[c - st] - fc);
                    else if (periodic) s += w[a] * (f[c - st + span] - fc);
                }
                out[c] = s;
            }
}

inline double inner(const Field& f, const Field& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.v.size(); ++i) s += f.v[i] * g.v[i];
    return s * f.grid.cell_volume();
}

/// Inner product of face fields, each face weighted by the cell volume.
inline double inner(const VectorField& u, const VectorField& w) {
    double s = 0.0;
    for (int a = 0; a < u.grid.dim; ++a)
        for (std::size_t i = 0; i < u.comp[a].size(); ++i) s += u.comp[a][i] * w.comp[a][i];
    return s * u.grid.cell_volume();
}

inline double mean(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s / static_cast<double>(f.v.size());
}

inline double l2(const Field& f) { return std::sqrt(inner(f, f)); }
inline double l2(const VectorField& u) { return std::sqrt(inner(u, u)); }

inline double linf(const Field& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

inline void subtract_mean(Field& f) {
    const double m = mean(f);
    for (double& x : f.v) x -= m;
}

inline double min_value(const Field& f) {
    double m = f.v.empty() ? 0.0 : f.v[0];
    for (double x : f.v) m = std::min(m, x);
    return m;
}

inline double max_value(const Field& f) {
    double m = f.v.empty() ? 0.0 : f.v[0];
    for (double x : f.v) m = std::max(m, x);
    return m;
}

/// Pointwise product of a face field with face coefficients.
inline VectorField scale_faces(const VectorField& v, const VectorField& coeff) {
    VectorField out = v;
    for (int a = 0; a < v.grid.dim; ++a)
        for (std::size_t i = 0; i < v.comp[a].size(); ++i) out.comp[a][i] *= coeff.comp[a][i];
    return out;
}

} // namespace anich
