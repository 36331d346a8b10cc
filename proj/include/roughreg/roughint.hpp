#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "controlled.hpp"
#include "enhance.hpp"
#include "grid.hpp"
#include "mat.hpp"
#include "regcalc.hpp"

namespace roughreg {

// Germ of the rough integral for a scalar controlled pair:
//   A_{j,k} = Y_j (X_k - X_j)^T + Y'_j XX_{j,k}   (1 x d row).
// Bound to one (pair, enhancement); indices clamp at the horizon.
struct Germ {
    const ControlledPair* pair;
    const EnhancedPath* enh;

    Germ(const ControlledPair& p, const EnhancedPath& e) : pair(&p), enh(&e) {
        if (p.n() != 1) throw std::invalid_argument("Germ: scalar pairs only");
        require_same_grid(p.x.grid, e.base.grid, "Germ");
        if (p.d() != e.dim()) throw std::invalid_argument("Germ: dimension mismatch");
    }

    Row operator()(int j, int k) const {
        int d = pair->d();
        Row out(d, 0.0);
        Mat xx = enh->block(j, k);
        double yj = pair->y.at_clamped(j, 0);
        for (int c = 0; c < d; ++c) {
            double acc = yj * (pair->x.at_clamped(k, c) - pair->x.at_clamped(j, c));
            for (int i = 0; i < d; ++i) acc += pair->yprime.at_clamped(j, i) * xx(i, c);
            out[c] = acc;
        }
        return out;
    }
};

// One-parameter increment (delta_1 f)_{j,k} = f_k - f_j for a scalar path.
struct Delta1 {
    const GridPath* f;
    double operator()(int j, int k) const { return f->at_clamped(k, 0) - f->at_clamped(j, 0); }
};

inline Delta1 delta1(const GridPath& f) {
    require_scalar(f, "delta1");
    return Delta1{&f};
}

// (delta_2 g)_{j,m,k} = -g_{m,k} + g_{j,k} - g_{j,m}; composes with delta1 to
// zero on every triple.
template <class G>
auto delta2(G g) {
    return [g](int j, int m, int k) { return g(j, k) - g(j, m) - g(m, k); };
}

inline Row germ_delta2(const Germ& a, int j, int m, int k) {
    Row r = a(j, k);
    Row jm = a(j, m);
    Row mk = a(m, k);
    for (size_t i = 0; i < r.size(); ++i) r[i] -= jm[i] + mk[i];
    return r;
}

// Independent evaluation of the Chen-relation consequence
//   (delta_2 A)_{j,m,k} = -[ R^Y_{j,m} (delta_1 X)^T_{m,k} + (delta_1 Y')_{j,m} XX_{m,k} ].
inline Row germ_delta2_reference(const ControlledPair& p, const EnhancedPath& e, int j, int m, int k) {
    int d = p.d();
    Row out(d, 0.0);
    Row r = p.remainder(j, m);
    Mat xx = e.block(m, k);
    for (int c = 0; c < d; ++c) {
        double acc = r[0] * (p.x.at_clamped(k, c) - p.x.at_clamped(m, c));
        for (int i = 0; i < d; ++i)
            acc += (p.yprime.at_clamped(m, i) - p.yprime.at_clamped(j, i)) * xx(i, c);
        out[c] = -acc;
    }
    return out;
}

// --- regularized rough integrals -------------------------------------------

// (1/eps) sum_{k < j} A_{k, k+m} dt: the forward rough integral at scale eps.
inline Row rough_integral_reg_idx(const ControlledPair& p, const EnhancedPath& e, int m, int j) {
    Germ a(p, e);  // validates the binding
    detail::check_window(p.x.grid, m, j, "rough_integral_reg");
    int d = p.d();
    Row out(d, 0.0);
    double w = 1.0 / m;  // dt/eps
    Mat xx(d, d);
    for (int k = 0; k < j; ++k) {
        e.block_into(k, k + m, xx);
        double yk = p.y.at(k, 0);
        for (int c = 0; c < d; ++c) {
            double acc = yk * (p.x.at_clamped(k + m, c) - p.x.at(k, c));
            for (int i = 0; i < d; ++i) acc += p.yprime.at(k, i) * xx(i, c);
            out[c] += acc * w;
        }
    }
    return out;
}

inline Row rough_integral_reg(const ControlledPair& p, const EnhancedPath& e, double eps, double t) {
    return rough_integral_reg_idx(p, e, p.x.grid.eps_multiple(eps), p.x.grid.index_of(t));
}

// Backward variant: weights at the right window endpoint and the window block
// anchored there, XX_{s,s+eps} - dX dX^T (= int over the window of
// (X_r - X_{s+eps}) (x) dX_r). With the left-anchored block the backward sum
// picks up the window quadratic variation of X scaled by Y', and the forward
// and backward limits separate for every rough driver.
inline Row rough_integral_backward_idx(const ControlledPair& p, const EnhancedPath& e, int m, int j) {
    require_same_grid(p.x.grid, e.base.grid, "rough_integral_backward");
    if (p.n() != 1) throw std::invalid_argument("rough_integral_backward: scalar pairs only");
    detail::check_window(p.x.grid, m, j, "rough_integral_backward");
    int d = p.d();
    int n = p.x.grid.steps;
    Row out(d, 0.0);
    double w = 1.0 / m;  // dt/eps
    std::vector<double> dx(d);
    Mat xx(d, d);
    for (int k = 0; k < j; ++k) {
        int r = std::min(k + m, n);
        e.block_into(k, r, xx);
        for (int c = 0; c < d; ++c) dx[c] = p.x.at(r, c) - p.x.at(k, c);
        double yr = p.y.at(r, 0);
        for (int c = 0; c < d; ++c) {
            double acc = yr * dx[c];
            for (int i = 0; i < d; ++i) acc += p.yprime.at(r, i) * (xx(i, c) - dx[i] * dx[c]);
            out[c] += acc * w;
        }
    }
    return out;
}

inline Row rough_integral_backward(const ControlledPair& p, const EnhancedPath& e, double eps, double t) {
    return rough_integral_backward_idx(p, e, p.x.grid.eps_multiple(eps), p.x.grid.index_of(t));
}

// --- time reversal ----------------------------------------------------------

namespace detail {

inline GridPath reverse_path(const GridPath& x) {
    GridPath r(x.grid, x.dim);
    int n = x.grid.steps;
    for (int k = 0; k <= n; ++k)
        for (int j = 0; j < x.dim; ++j) r.set(k, j, x.at(n - k, j));
    return r;
}

}  // namespace detail

// Reversal identity: the backward integral over [0, t] equals minus the
// forward-germ sum of the reversed data (Yhat_k = Y_{N-k}, enhancement rebuilt
// from the reversed base path in the same flavor) over left endpoints in
// (T-t-eps, T-eps]. The substitution k <-> N-m-k makes this exact on the
// grid; for the ito flavor the reversed side carries the discrete window
// bracket contracted against Yhat'. Windows clamped at the horizon
// (t + eps > T) contribute O(eps) residuals.
struct ReversalCheck {
    const ControlledPair* pair;
    const EnhancedPath* enh;
    int j;
    ControlledPair rev;
    EnhancedPath rev_enh;

    ReversalCheck(const ControlledPair& p, const EnhancedPath& e, double t)
        : pair(&p),
          enh(&e),
          j(p.x.grid.index_of(t)),
          rev(detail::reverse_path(p.y), detail::reverse_path(p.yprime), detail::reverse_path(p.x),
              PairLabel::custom),
          rev_enh(EnhancedPath::build(rev.x, e.flavor)) {
        if (p.n() != 1) throw std::invalid_argument("ReversalCheck: scalar pairs only");
        require_same_grid(p.x.grid, e.base.grid, "ReversalCheck");
    }

    double discrepancy(int m) const {
        const Grid& grid = pair->x.grid;
        int n = grid.steps;
        int d = pair->d();
        Row side1 = rough_integral_backward_idx(*pair, *enh, m, j);
        Row side2(d, 0.0);
        Germ germ_rev(rev, rev_enh);
        double w = 1.0 / m;
        int a_lo = std::max(0, n - j - m + 1);
        int a_hi = n - m;
        for (int a = a_lo; a <= a_hi; ++a) {
            Row g = germ_rev(a, a + m);
            for (int c = 0; c < d; ++c) side2[c] -= g[c] * w;
            if (enh->flavor == Flavor::ito) {
                int hi = std::min(a + m, n);
                for (int c = 0; c < d; ++c) {
                    double yp_dot = 0.0;
                    for (int i = 0; i < d; ++i) {
                        double acc = 0.0;
                        for (int q = a; q < hi; ++q)
                            acc += (rev.x.at(q + 1, i) - rev.x.at(q, i)) * (rev.x.at(q + 1, c) - rev.x.at(q, c));
                        yp_dot += rev.yprime.at(a, i) * acc;
                    }
                    side2[c] -= yp_dot * w;
                }
            }
        }
        return max_abs_diff(side1, side2);
    }
};

inline double time_reversal_check(const ControlledPair& p, const EnhancedPath& e, double t,
                                  const EpsSchedule& schedule) {
    ReversalCheck rc(p, e, t);
    double worst = 0.0;
    for (int m : schedule.multiples) worst = std::max(worst, rc.discrepancy(m));
    return worst;
}

// --- sewing -----------------------------------------------------------------

struct SewingResult {
    Row value;                  // I^{(L)} at the finest computed level
    int levels_used = 0;        // finest L
    double delta = 0.0;         // max-norm |I^{(L)} - I^{(L-1)}| at that L
    bool tol_reached = false;
    std::vector<double> deltas;      // delta per level starting at L = 1
    std::vector<Row> level_values;   // I^{(L)} per level starting at L = 0
};

// Compensated Riemann sums over dyadic partitions of [0, t_j] snapped to grid
// nodes, refined until the level-to-level delta drops below tol, the grid
// resolution is reached, or max_level is hit. Non-dyadic j yields ragged
// final segments via breakpoint rounding.
inline SewingResult sewing_integral_idx(const ControlledPair& p, const EnhancedPath& e, int j, double tol,
                                        int max_level = 24) {
    Germ a(p, e);
    if (j < 1 || j > p.x.grid.steps) throw std::invalid_argument("sewing_integral: bad node index");
    int d = p.d();
    auto level_sum = [&](int level) {
        long segs = 1L << level;
        Row acc(d, 0.0);
        int prev = 0;
        for (long i = 1; i <= segs; ++i) {
            int b = static_cast<int>(std::llround(static_cast<double>(i) * j / static_cast<double>(segs)));
            if (b <= prev) continue;  // partition snapped onto the grid
            Row g = a(prev, b);
            for (int c = 0; c < d; ++c) acc[c] += g[c];
            prev = b;
        }
        return acc;
    };

    SewingResult res;
    res.value = level_sum(0);
    res.level_values.push_back(res.value);
    int grid_level = 0;
    while ((1L << grid_level) < j) ++grid_level;
    int last = std::min(max_level, grid_level);
    for (int level = 1; level <= last; ++level) {
        Row next = level_sum(level);
        res.delta = max_abs_diff(next, res.value);
        res.deltas.push_back(res.delta);
        res.value = std::move(next);
        res.level_values.push_back(res.value);
        res.levels_used = level;
        if (res.delta < tol) {
            res.tol_reached = true;
            break;
        }
    }
    // tol unreachable at grid resolution stays flagged but returns the value
    return res;
}

inline SewingResult sewing_integral(const ControlledPair& p, const EnhancedPath& e, double t, double tol,
                                    int max_level = 24) {
    return sewing_integral_idx(p, e, p.x.grid.index_of(t), tol, max_level);
}

// --- germ coherence norm ----------------------------------------------------

// max over sampled triples j < m < k of
//   |delta_2 A_{j,m,k}| / ((t_m - t_j)^rho (t_k - t_j)^beta),
// a computable surrogate for the two-exponent coherence norm of the germ.
// Node subset chosen so the triple count respects the budget.
inline double delta2_germ_norm(const ControlledPair& p, const EnhancedPath& e, double rho, double beta,
                               long triple_budget = 1L << 18) {
    Germ a(p, e);
    int n = p.x.grid.steps;
    std::vector<int> nodes;
    long full = static_cast<long>(n + 1) * (n + 1) * (n + 1);
    if (full <= triple_budget) {
        for (int i = 0; i <= n; ++i) nodes.push_back(i);
    } else {
        int count = std::max(3, static_cast<int>(std::cbrt(static_cast<double>(triple_budget))));
        for (int i = 0; i < count; ++i)
            nodes.push_back(static_cast<int>(static_cast<long>(i) * n / (count - 1)));
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    }
    double best = 0.0;
    for (size_t ij = 0; ij + 2 < nodes.size(); ++ij)
        for (size_t im = ij + 1; im + 1 < nodes.size(); ++im)
            for (size_t ik = im + 1; ik < nodes.size(); ++ik) {
                int j = nodes[ij], m = nodes[im], k = nodes[ik];
                Row g = germ_delta2(a, j, m, k);
                double tm = p.x.grid.node(m) - p.x.grid.node(j);
                double tk = p.x.grid.node(k) - p.x.grid.node(j);
                best = std::max(best, max_abs(g) / (std::pow(tm, rho) * std::pow(tk, beta)));
            }
    return best;
}

}  // namespace roughreg
