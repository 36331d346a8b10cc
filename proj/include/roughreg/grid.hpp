#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughreg {

// Uniform grid t_k = k*T/N on [0, T].
struct Grid {
    double horizon = 1.0;  // T
    int steps = 1;         // N

    Grid() = default;
    Grid(double T, int N) : horizon(T), steps(N) {
        if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("Grid: horizon must be positive");
        if (N < 2) throw std::invalid_argument("Grid: need at least 2 steps");
    }

    double dt() const { return horizon / steps; }

    double node(int k) const {
        if (k >= steps) return horizon;  // t_N == T exactly
        return horizon * static_cast<double>(k) / static_cast<double>(steps);
    }

    // Node index of a time that must sit on the grid.
    int index_of(double t) const {
        double j = t / dt();
        int k = static_cast<int>(std::llround(j));
        if (k < 0 || k > steps || std::fabs(j - k) > 1e-9 * std::max(1.0, static_cast<double>(steps)))
            throw std::invalid_argument("Grid: t=" + std::to_string(t) + " is not a grid node");
        return k;
    }

    // Window width eps must be a positive integer multiple of dt, at most T.
    int eps_multiple(double eps) const {
        double r = eps / dt();
        int m = static_cast<int>(std::llround(r));
        if (m < 1 || m > steps || std::fabs(r - m) > 1e-9 * std::max(1.0, static_cast<double>(steps)))
            throw std::invalid_argument("Grid: eps=" + std::to_string(eps) + " is not a grid multiple");
        return m;
    }

    bool operator==(const Grid& o) const { return horizon == o.horizon && steps == o.steps; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

// Sampled path on a grid: (N+1) x dim values, row-major. Reads past the
// horizon clamp to the final row, which realizes the convention that a path
// is extended constantly beyond T.
struct GridPath {
    Grid grid;
    int dim = 1;
    std::vector<double> values;  // (steps+1) * dim

    GridPath() = default;
    GridPath(const Grid& g, int d) : grid(g), dim(d), values(static_cast<size_t>(g.steps + 1) * d, 0.0) {
        if (d < 1) throw std::invalid_argument("GridPath: dim must be >= 1");
    }
    GridPath(const Grid& g, int d, std::vector<double> vals) : grid(g), dim(d), values(std::move(vals)) {
        if (d < 1) throw std::invalid_argument("GridPath: dim must be >= 1");
        if (values.size() != static_cast<size_t>(g.steps + 1) * d)
            throw std::invalid_argument("GridPath: value count does not match (N+1)*dim");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("GridPath: non-finite value");
    }

    int nodes() const { return grid.steps + 1; }

    std::span<const double> row(int k) const {
        return {values.data() + static_cast<size_t>(k) * dim, static_cast<size_t>(dim)};
    }
    // Continuity extension: any index beyond N reads row N.
    std::span<const double> row_clamped(int k) const { return row(k > grid.steps ? grid.steps : k); }

    double at(int k, int j) const { return values[static_cast<size_t>(k) * dim + j]; }
    double at_clamped(int k, int j) const { return at(k > grid.steps ? grid.steps : k, j); }
    void set(int k, int j, double v) { values[static_cast<size_t>(k) * dim + j] = v; }

    bool same_grid(const GridPath& o) const { return grid == o.grid; }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

// Scalar path holding one coordinate of a multi-dimensional path.
inline GridPath component(const GridPath& p, int c) {
    if (c < 0 || c >= p.dim) throw std::invalid_argument("component: index out of range");
    GridPath out(p.grid, 1);
    for (int k = 0; k < p.nodes(); ++k) out.set(k, 0, p.at(k, c));
    return out;
}

inline void require_scalar(const GridPath& x, const char* where) {
    if (x.dim != 1) throw std::invalid_argument(std::string(where) + ": path must be scalar");
}

}  // namespace roughreg
