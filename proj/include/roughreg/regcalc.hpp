#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "mat.hpp"

namespace roughreg {

// Window widths eps_i = m_i * dt, strictly decreasing. The harness default is
// eps_i = T * 2^{-(i+2)}, i = 1..K; the bare default is m_i = 2^{K-i}.
struct EpsSchedule {
    std::vector<int> multiples;

    EpsSchedule() = default;
    explicit EpsSchedule(std::vector<int> m) : multiples(std::move(m)) { validate(); }

    static EpsSchedule pow2(int levels) {
        std::vector<int> m;
        for (int i = 1; i <= levels; ++i) m.push_back(1 << (levels - i));
        return EpsSchedule(std::move(m));
    }

    static EpsSchedule harness_default(const Grid& grid, int levels) {
        std::vector<int> m;
        for (int i = 1; i <= levels; ++i) {
            long den = 1L << (i + 2);
            if (grid.steps % den != 0)
                throw std::invalid_argument("EpsSchedule: N must be divisible by 2^(levels+2)");
            m.push_back(static_cast<int>(grid.steps / den));
        }
        return EpsSchedule(std::move(m));
    }

    std::vector<double> eps(const Grid& grid) const {
        std::vector<double> e;
        e.reserve(multiples.size());
        for (int m : multiples) e.push_back(m * grid.dt());
        return e;
    }

    size_t levels() const { return multiples.size(); }
    int finest() const { return multiples.back(); }

  private:
    void validate() const {
        if (multiples.empty()) throw std::invalid_argument("EpsSchedule: empty");
        for (size_t i = 0; i < multiples.size(); ++i) {
            if (multiples[i] < 1) throw std::invalid_argument("EpsSchedule: multiples must be >= 1");
            if (i > 0 && multiples[i] >= multiples[i - 1])
                throw std::invalid_argument("EpsSchedule: multiples must decrease strictly");
        }
    }
};

// One evaluated functional across (eps, t) points; matrix results carry their
// shape so CSV export can emit row/col indices.
struct EvalPoint {
    double eps = 0.0;
    double t = 0.0;
    Mat value;
};

struct EvalSeries {
    std::string name;
    std::vector<EvalPoint> points;

    void append(double eps, double t, Mat value) {
        for (double v : value.a)
            if (!std::isfinite(v)) throw std::runtime_error("EvalSeries: non-finite value");
        points.push_back({eps, t, std::move(value)});
    }
};

namespace detail {

// Every ds-integral below is the left Riemann sum over nodes s = t_0..t_{j-1}
// with window reads clamped at the horizon.
inline void check_window(const Grid& g, int m, int j, const char* where) {
    if (m < 1 || m > g.steps) throw std::invalid_argument(std::string(where) + ": bad eps multiple");
    if (j < 0 || j > g.steps) throw std::invalid_argument(std::string(where) + ": bad node index");
}

}  // namespace detail

// --- scalar covariation family -------------------------------------------

// C(eps, X1, X2)(t): sum of window increment products / eps * dt.
inline double c_eps_idx(const GridPath& x1, const GridPath& x2, int m, int j) {
    require_same_grid(x1.grid, x2.grid, "c_eps");
    require_scalar(x1, "c_eps");
    require_scalar(x2, "c_eps");
    detail::check_window(x1.grid, m, j, "c_eps");
    double acc = 0.0;
    for (int k = 0; k < j; ++k)
        acc += (x1.at_clamped(k + m, 0) - x1.at(k, 0)) * (x2.at_clamped(k + m, 0) - x2.at(k, 0));
    return acc * x1.grid.dt() / (m * x1.grid.dt());
}

inline double c_eps(const GridPath& x1, const GridPath& x2, double eps, double t) {
    return c_eps_idx(x1, x2, x1.grid.eps_multiple(eps), x1.grid.index_of(t));
}

// Same sum with |products|; sup over a schedule bounds the strong version.
inline double strong_sense_stat_idx(const GridPath& x1, const GridPath& x2, int m, int j) {
    require_same_grid(x1.grid, x2.grid, "strong_sense_stat");
    require_scalar(x1, "strong_sense_stat");
    require_scalar(x2, "strong_sense_stat");
    detail::check_window(x1.grid, m, j, "strong_sense_stat");
    double acc = 0.0;
    for (int k = 0; k < j; ++k)
        acc += std::fabs((x1.at_clamped(k + m, 0) - x1.at(k, 0)) * (x2.at_clamped(k + m, 0) - x2.at(k, 0)));
    return acc * x1.grid.dt() / (m * x1.grid.dt());
}

inline double strong_sense_stat(const GridPath& x1, const GridPath& x2, double eps, double t) {
    return strong_sense_stat_idx(x1, x2, x1.grid.eps_multiple(eps), x1.grid.index_of(t));
}

inline double cubic_variation_stat_idx(const GridPath& x, int m, int j) {
    require_scalar(x, "cubic_variation_stat");
    detail::check_window(x.grid, m, j, "cubic_variation_stat");
    double acc = 0.0;
    for (int k = 0; k < j; ++k) {
        double d = std::fabs(x.at_clamped(k + m, 0) - x.at(k, 0));
        acc += d * d * d;
    }
    return acc * x.grid.dt() / (m * x.grid.dt());
}

inline double cubic_variation_stat(const GridPath& x, double eps, double t) {
    return cubic_variation_stat_idx(x, x.grid.eps_multiple(eps), x.grid.index_of(t));
}

// Squared Euclidean window increments; tends to d*t for standard BM.
inline double scalar_qv_idx(const GridPath& x, int m, int j) {
    detail::check_window(x.grid, m, j, "scalar_qv");
    double acc = 0.0;
    for (int k = 0; k < j; ++k)
        for (int c = 0; c < x.dim; ++c) {
            double d = x.at_clamped(k + m, c) - x.at(k, c);
            acc += d * d;
        }
    return acc * x.grid.dt() / (m * x.grid.dt());
}

inline double scalar_qv(const GridPath& x, double eps, double t) {
    return scalar_qv_idx(x, x.grid.eps_multiple(eps), x.grid.index_of(t));
}

// Weighted covariation: integrand H_s against the window increment product.
inline double weighted_cov_idx(const GridPath& h, const GridPath& x1, const GridPath& x2, int m, int j) {
    require_same_grid(h.grid, x1.grid, "weighted_cov");
    require_same_grid(x1.grid, x2.grid, "weighted_cov");
    require_scalar(h, "weighted_cov");
    require_scalar(x1, "weighted_cov");
    require_scalar(x2, "weighted_cov");
    detail::check_window(h.grid, m, j, "weighted_cov");
    double acc = 0.0;
    for (int k = 0; k < j; ++k)
        acc += h.at(k, 0) * (x1.at_clamped(k + m, 0) - x1.at(k, 0)) * (x2.at_clamped(k + m, 0) - x2.at(k, 0));
    return acc * x1.grid.dt() / (m * x1.grid.dt());
}

inline double weighted_cov(const GridPath& h, const GridPath& x1, const GridPath& x2, double eps, double t) {
    return weighted_cov_idx(h, x1, x2, x1.grid.eps_multiple(eps), x1.grid.index_of(t));
}

// --- first-order integrals (n x d matrix values) --------------------------

// Forward: weight Y at the left window endpoint.
inline Mat forward_integral_idx(const GridPath& y, const GridPath& x, int m, int j) {
    require_same_grid(y.grid, x.grid, "forward_integral");
    detail::check_window(x.grid, m, j, "forward_integral");
    Mat out(y.dim, x.dim);
    double w = x.grid.dt() / (m * x.grid.dt());
    for (int k = 0; k < j; ++k)
        for (int i = 0; i < y.dim; ++i) {
            double yi = y.at(k, i) * w;
            for (int c = 0; c < x.dim; ++c) out(i, c) += yi * (x.at_clamped(k + m, c) - x.at(k, c));
        }
    return out;
}

inline Mat forward_integral(const GridPath& y, const GridPath& x, double eps, double t) {
    return forward_integral_idx(y, x, x.grid.eps_multiple(eps), x.grid.index_of(t));
}

// Symmetric: average of the two window endpoints of Y.
inline Mat symmetric_integral_idx(const GridPath& y, const GridPath& x, int m, int j) {
    require_same_grid(y.grid, x.grid, "symmetric_integral");
    detail::check_window(x.grid, m, j, "symmetric_integral");
    Mat out(y.dim, x.dim);
    double w = x.grid.dt() / (m * x.grid.dt());
    for (int k = 0; k < j; ++k)
        for (int i = 0; i < y.dim; ++i) {
            double yi = 0.5 * (y.at(k, i) + y.at_clamped(k + m, i)) * w;
            for (int c = 0; c < x.dim; ++c) out(i, c) += yi * (x.at_clamped(k + m, c) - x.at(k, c));
        }
    return out;
}

inline Mat symmetric_integral(const GridPath& y, const GridPath& x, double eps, double t) {
    return symmetric_integral_idx(y, x, x.grid.eps_multiple(eps), x.grid.index_of(t));
}

// Backward: weight Y at the right window endpoint.
inline Mat backward_integral_idx(const GridPath& y, const GridPath& x, int m, int j) {
    require_same_grid(y.grid, x.grid, "backward_integral");
    detail::check_window(x.grid, m, j, "backward_integral");
    Mat out(y.dim, x.dim);
    double w = x.grid.dt() / (m * x.grid.dt());
    for (int k = 0; k < j; ++k)
        for (int i = 0; i < y.dim; ++i) {
            double yi = y.at_clamped(k + m, i) * w;
            for (int c = 0; c < x.dim; ++c) out(i, c) += yi * (x.at_clamped(k + m, c) - x.at(k, c));
        }
    return out;
}

inline Mat backward_integral(const GridPath& y, const GridPath& x, double eps, double t) {
    return backward_integral_idx(y, x, x.grid.eps_multiple(eps), x.grid.index_of(t));
}

// --- finest-grid oracles ---------------------------------------------------

// Left-point sums of a matrix integrand Z (n x d per node, rows flattened)
// against the finest-grid increments of X, accumulated per node.
inline GridPath ito_oracle(const GridPath& z, const GridPath& x) {
    require_same_grid(z.grid, x.grid, "ito_oracle");
    if (z.dim % x.dim != 0) throw std::invalid_argument("ito_oracle: Z dim must be n*d");
    int n = z.dim / x.dim;
    GridPath out(x.grid, n);
    for (int k = 0; k < x.grid.steps; ++k)
        for (int i = 0; i < n; ++i) {
            double acc = out.at(k, i);
            for (int c = 0; c < x.dim; ++c)
                acc += z.at(k, i * x.dim + c) * (x.at(k + 1, c) - x.at(k, c));
            out.set(k + 1, i, acc);
        }
    return out;
}

// Midpoint (trapezoid-in-Z) sums; the Stratonovich reference.
inline GridPath strat_oracle(const GridPath& z, const GridPath& x) {
    require_same_grid(z.grid, x.grid, "strat_oracle");
    if (z.dim % x.dim != 0) throw std::invalid_argument("strat_oracle: Z dim must be n*d");
    int n = z.dim / x.dim;
    GridPath out(x.grid, n);
    for (int k = 0; k < x.grid.steps; ++k)
        for (int i = 0; i < n; ++i) {
            double acc = out.at(k, i);
            for (int c = 0; c < x.dim; ++c)
                acc += 0.5 * (z.at(k, i * x.dim + c) + z.at(k + 1, i * x.dim + c)) * (x.at(k + 1, c) - x.at(k, c));
            out.set(k + 1, i, acc);
        }
    return out;
}

// Outer-product variants: value of int Y (x) dX up to node j, rows = Y comps.
inline Mat ito_outer_at(const GridPath& y, const GridPath& x, int j) {
    require_same_grid(y.grid, x.grid, "ito_outer_at");
    Mat out(y.dim, x.dim);
    for (int k = 0; k < j; ++k)
        for (int i = 0; i < y.dim; ++i)
            for (int c = 0; c < x.dim; ++c) out(i, c) += y.at(k, i) * (x.at(k + 1, c) - x.at(k, c));
    return out;
}

inline Mat strat_outer_at(const GridPath& y, const GridPath& x, int j) {
    require_same_grid(y.grid, x.grid, "strat_outer_at");
    Mat out(y.dim, x.dim);
    for (int k = 0; k < j; ++k)
        for (int i = 0; i < y.dim; ++i)
            for (int c = 0; c < x.dim; ++c)
                out(i, c) += 0.5 * (y.at(k, i) + y.at(k + 1, i)) * (x.at(k + 1, c) - x.at(k, c));
    return out;
}

// Finest-grid bracket sum over nodes [k0, k1) between two components.
inline double increment_product_sum(const GridPath& a, int ca, const GridPath& b, int cb, int k0, int k1) {
    require_same_grid(a.grid, b.grid, "increment_product_sum");
    double acc = 0.0;
    for (int k = k0; k < k1; ++k) acc += (a.at(k + 1, ca) - a.at(k, ca)) * (b.at(k + 1, cb) - b.at(k, cb));
    return acc;
}

}  // namespace roughreg
