#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "generators.hpp"
#include "grid.hpp"
#include "mat.hpp"
#include "regcalc.hpp"

namespace roughreg {

enum class PairLabel { zero, gradient, integrand, custom };

inline const char* pair_label_name(PairLabel l) {
    switch (l) {
        case PairLabel::zero: return "zero";
        case PairLabel::gradient: return "gradient";
        case PairLabel::integrand: return "integrand";
        default: return "custom";
    }
}

inline PairLabel pair_label_from_name(const std::string& s) {
    if (s == "zero") return PairLabel::zero;
    if (s == "gradient") return PairLabel::gradient;
    if (s == "integrand") return PairLabel::integrand;
    if (s == "custom") return PairLabel::custom;
    throw std::invalid_argument("unknown pair label: " + s);
}

// (Y, Y') controlled by X: Y_t - Y_s = Y'_s (X_t - X_s) + R_{s,t}, with the
// derivative path stored as n x d rows per node.
struct ControlledPair {
    GridPath y;       // n components
    GridPath yprime;  // n*d components, row-major n x d per node
    GridPath x;       // d components
    PairLabel label = PairLabel::custom;

    ControlledPair() = default;
    ControlledPair(GridPath y_, GridPath yp_, GridPath x_, PairLabel label_)
        : y(std::move(y_)), yprime(std::move(yp_)), x(std::move(x_)), label(label_) {
        require_same_grid(y.grid, x.grid, "ControlledPair");
        require_same_grid(yprime.grid, x.grid, "ControlledPair");
        if (yprime.dim != y.dim * x.dim)
            throw std::invalid_argument("ControlledPair: Yprime dim must equal n*d");
    }

    int n() const { return y.dim; }
    int d() const { return x.dim; }

    // R_{t_j, t_k} = (Y_k - Y_j) - Y'_j (X_k - X_j); indices clamp at the horizon.
    Row remainder(int j, int k) const {
        Row r(y.dim);
        for (int i = 0; i < y.dim; ++i) {
            double acc = y.at_clamped(k, i) - y.at_clamped(j, i);
            for (int c = 0; c < x.dim; ++c)
                acc -= yprime.at_clamped(j, i * x.dim + c) * (x.at_clamped(k, c) - x.at_clamped(j, c));
            r[i] = acc;
        }
        return r;
    }
};

inline Row remainder(const ControlledPair& p, int j, int k) { return p.remainder(j, k); }

inline ControlledPair pair_zero(GridPath y, GridPath x) {
    GridPath yp(x.grid, y.dim * x.dim);  // all zero
    return ControlledPair(std::move(y), std::move(yp), std::move(x), PairLabel::zero);
}

namespace detail {

// Central finite differences must reproduce grad_f to 1e-4 relative accuracy
// at a spread of path nodes; catches swapped or rescaled gradients early.
inline void validate_gradient(const GridPath& x, const ScalarFn& f, const GradFn& grad) {
    int d = x.dim;
    std::vector<double> pt(d), gv(d);
    int checks = std::min(16, x.nodes());
    for (int c = 0; c < checks; ++c) {
        int k = static_cast<int>(static_cast<long>(c) * x.grid.steps / std::max(1, checks - 1));
        for (int j = 0; j < d; ++j) pt[j] = x.at(k, j);
        grad(pt, gv);
        for (int j = 0; j < d; ++j) {
            double h = 1e-5 * (1.0 + std::fabs(pt[j]));
            double save = pt[j];
            pt[j] = save + h;
            double fp = f(pt);
            pt[j] = save - h;
            double fm = f(pt);
            pt[j] = save;
            double fd = (fp - fm) / (2.0 * h);
            if (std::fabs(fd - gv[j]) > 1e-4 * std::max(1.0, std::max(std::fabs(fd), std::fabs(gv[j]))))
                throw std::invalid_argument("pair_gradient: grad_f disagrees with finite differences of f");
        }
    }
}

}  // namespace detail

// Y = f(X), Y' = (grad f)(X)^T (n = 1).
inline ControlledPair pair_gradient(const ScalarFn& f, const GradFn& grad, const GridPath& x) {
    detail::validate_gradient(x, f, grad);
    auto [y, g] = apply_fn(x, f, &grad);
    return ControlledPair(std::move(y), std::move(*g), x, PairLabel::gradient);
}

// Y = int Z . dX (left-point sums), Y' = Z^T (n = 1, Z a d-dim path).
inline ControlledPair pair_integrand(const GridPath& z, const GridPath& x) {
    require_same_grid(z.grid, x.grid, "pair_integrand");
    if (z.dim != x.dim) throw std::invalid_argument("pair_integrand: Z must match the driver dimension");
    GridPath y = ito_oracle(z, x);
    return ControlledPair(std::move(y), z, x, PairLabel::integrand);
}

inline ControlledPair pair_custom(GridPath y, GridPath yp, GridPath x) {
    return ControlledPair(std::move(y), std::move(yp), std::move(x), PairLabel::custom);
}

// Max-abs entry of (1/eps) sum_k R_{k,k+m} (x) (X_{k+m} - X_k) dt, the
// discrete orthogonality defect of the remainder. Small values across a
// schedule certify the pair; an O(1) plateau flags a wrong derivative.
inline double orthogonality_stat_idx(const ControlledPair& p, int m, int j) {
    detail::check_window(p.x.grid, m, j, "orthogonality_stat");
    int n = p.n(), d = p.d();
    std::vector<double> s(static_cast<size_t>(n) * d, 0.0);
    for (int k = 0; k < j; ++k) {
        Row r = p.remainder(k, k + m);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < d; ++c)
                s[static_cast<size_t>(i) * d + c] += r[i] * (p.x.at_clamped(k + m, c) - p.x.at(k, c));
    }
    double w = p.x.grid.dt() / (m * p.x.grid.dt());
    double best = 0.0;
    for (double v : s) best = std::max(best, std::fabs(v * w));
    return best;
}

inline double orthogonality_stat(const ControlledPair& p, double eps, double t) {
    return orthogonality_stat_idx(p, p.x.grid.eps_multiple(eps), p.x.grid.index_of(t));
}

// Bracket identity [Y, X^j]_t = int_0^t Y' d[X, X^j]: lhs per component via
// the regularized covariation of Y against X^j, rhs via finest-grid sums
// sum_k sum_i Y'_i(t_k) dX^i_k dX^j_k. Returns (lhs, rhs), n = 1 only.
inline std::pair<Row, Row> gubinelli_bracket_check(const ControlledPair& p, double eps, double t) {
    if (p.n() != 1) throw std::invalid_argument("gubinelli_bracket_check: scalar pairs only");
    int m = p.x.grid.eps_multiple(eps);
    int j = p.x.grid.index_of(t);
    int d = p.d();
    Row lhs(d, 0.0), rhs(d, 0.0);
    double w = p.x.grid.dt() / (m * p.x.grid.dt());
    for (int k = 0; k < j; ++k) {
        double dy = p.y.at_clamped(k + m, 0) - p.y.at(k, 0);
        for (int c = 0; c < d; ++c) lhs[c] += dy * (p.x.at_clamped(k + m, c) - p.x.at(k, c)) * w;
    }
    for (int k = 0; k < j; ++k)
        for (int c = 0; c < d; ++c) {
            double dxc = p.x.at(k + 1, c) - p.x.at(k, c);
            for (int i = 0; i < d; ++i) rhs[c] += p.yprime.at(k, i) * (p.x.at(k + 1, i) - p.x.at(k, i)) * dxc;
        }
    return {std::move(lhs), std::move(rhs)};
}

}  // namespace roughreg
