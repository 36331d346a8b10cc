#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "holder.hpp"
#include "mat.hpp"

namespace roughreg {

enum class Flavor { ito, strat };

inline const char* flavor_name(Flavor f) { return f == Flavor::ito ? "ito" : "strat"; }

inline Flavor flavor_from_name(const std::string& s) {
    if (s == "ito") return Flavor::ito;
    if (s == "strat") return Flavor::strat;
    throw std::invalid_argument("unknown flavor: " + s);
}

// Second-order enhancement. Only the running iterated integral
//   I_t = int_0^t X (x) dX  (left-point or midpoint accumulation)
// is stored, (N+1) d x d matrices; window blocks are reconstructed as
//   XX_{s,t} = I_t - I_s - X_s (x) (X_t - X_s),
// which satisfies Chen's relation identically in exact arithmetic.
struct EnhancedPath {
    GridPath base;
    Flavor flavor = Flavor::ito;
    std::vector<double> iter;  // (N+1) * d * d, row-major per node

    EnhancedPath() = default;

    static EnhancedPath build(const GridPath& x, Flavor flavor) {
        EnhancedPath e;
        e.base = x;
        e.flavor = flavor;
        int d = x.dim;
        e.iter.assign(static_cast<size_t>(x.nodes()) * d * d, 0.0);
        for (int k = 0; k < x.grid.steps; ++k) {
            const double* prev = e.iter.data() + static_cast<size_t>(k) * d * d;
            double* next = e.iter.data() + static_cast<size_t>(k + 1) * d * d;
            for (int i = 0; i < d; ++i) {
                double w = flavor == Flavor::ito ? x.at(k, i) : 0.5 * (x.at(k, i) + x.at(k + 1, i));
                for (int c = 0; c < d; ++c)
                    next[static_cast<size_t>(i) * d + c] =
                        prev[static_cast<size_t>(i) * d + c] + w * (x.at(k + 1, c) - x.at(k, c));
            }
        }
        return e;
    }

    // Raw constructor for serialization and fault-injection tests.
    static EnhancedPath from_raw(GridPath x, Flavor flavor, std::vector<double> iter) {
        EnhancedPath e;
        if (iter.size() != static_cast<size_t>(x.nodes()) * x.dim * x.dim)
            throw std::invalid_argument("EnhancedPath: iterated-integral size mismatch");
        e.base = std::move(x);
        e.flavor = flavor;
        e.iter = std::move(iter);
        return e;
    }

    int dim() const { return base.dim; }

    Mat iterated(int k) const {
        int d = base.dim;
        Mat m(d, d);
        const double* p = iter.data() + static_cast<size_t>(k) * d * d;
        for (int i = 0; i < d * d; ++i) m.a[i] = p[i];
        return m;
    }

    // XX_{t_j, t_k}; indices past the horizon clamp and j > k uses the
    // symmetric extension XX_{s,t} := XX_{t,s}.
    void block_into(int j, int k, Mat& m) const {
        int n = base.grid.steps;
        j = j > n ? n : j;
        k = k > n ? n : k;
        if (j > k) std::swap(j, k);
        int d = base.dim;
        const double* ij = iter.data() + static_cast<size_t>(j) * d * d;
        const double* ik = iter.data() + static_cast<size_t>(k) * d * d;
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < d; ++c)
                m(i, c) = ik[static_cast<size_t>(i) * d + c] - ij[static_cast<size_t>(i) * d + c] -
                          base.at(j, i) * (base.at(k, c) - base.at(j, c));
    }

    Mat block(int j, int k) const {
        Mat m(base.dim, base.dim);
        block_into(j, k, m);
        return m;
    }
};

inline EnhancedPath enhance(const GridPath& x, Flavor flavor) { return EnhancedPath::build(x, flavor); }

inline Mat xx_block(const EnhancedPath& e, int j, int k) { return e.block(j, k); }

// Chen defect from explicit blocks and increments:
//   -XX_{u,t} + XX_{s,t} - XX_{s,u} - (X_u - X_s)(X_t - X_u)^T,
// max-norm. Exposed separately so corrupted blocks can be fed in.
inline double chen_residual_blocks(const Mat& b_ut, const Mat& b_st, const Mat& b_su, std::span<const double> dx_su,
                                   std::span<const double> dx_ut) {
    Mat r = b_st;
    r -= b_ut;
    r -= b_su;
    r -= outer(dx_su, dx_ut);
    return r.max_abs();
}

inline double chen_residual(const EnhancedPath& e, int j, int m, int k) {
    int d = e.dim();
    std::vector<double> dx_su(d), dx_ut(d);
    for (int c = 0; c < d; ++c) {
        dx_su[c] = e.base.at_clamped(m, c) - e.base.at_clamped(j, c);
        dx_ut[c] = e.base.at_clamped(k, c) - e.base.at_clamped(m, c);
    }
    return chen_residual_blocks(e.block(m, k), e.block(j, k), e.block(j, m), dx_su, dx_ut);
}

inline std::pair<Mat, Mat> sym_anti(const Mat& m) {
    if (m.rows != m.cols) throw std::invalid_argument("sym_anti: square matrix required");
    Mat s(m.rows, m.cols), a(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) {
            s(i, j) = 0.5 * (m(i, j) + m(j, i));
            a(i, j) = 0.5 * (m(i, j) - m(j, i));
        }
    return {std::move(s), std::move(a)};
}

// sym(XX_{j,k}) - (1/2) dX dX^T; identically zero for the strat flavor, and
// equal to -(1/2) * sum of squared finest-grid increments for the ito flavor.
inline Mat geometric_defect_matrix(const EnhancedPath& e, int j, int k) {
    Mat m = e.block(j, k);
    auto [s, a] = sym_anti(m);
    int lo = j < k ? j : k, hi = j < k ? k : j;
    int n = e.base.grid.steps;
    lo = lo > n ? n : lo;
    hi = hi > n ? n : hi;
    int d = e.dim();
    std::vector<double> dx(d);
    for (int c = 0; c < d; ++c) dx[c] = e.base.at(hi, c) - e.base.at(lo, c);
    Mat half = outer(dx, dx);
    half *= 0.5;
    s -= half;
    return s;
}

inline double geometric_defect(const EnhancedPath& e, int j, int k) {
    return geometric_defect_matrix(e, j, k).max_abs();
}

// Two-parameter Hoelder surrogate sup ||XX_{j,k}|| / (t_k - t_j)^beta over
// sampled pairs (same sampling policy as holder_seminorm).
inline double holder2_norm(const EnhancedPath& e, double beta, long pair_budget = 1L << 18) {
    if (!(beta > 0.0)) throw std::invalid_argument("holder2_norm: beta must be positive");
    int n = e.base.grid.steps;
    auto ratio = [&](int s, int t) {
        double dt = e.base.grid.node(t) - e.base.grid.node(s);
        return e.block(s, t).max_abs() / std::pow(dt, beta);
    };
    double best = 0.0;
    long pairs = static_cast<long>(n + 1) * (n + 1);
    if (pairs <= pair_budget) {
        for (int s = 0; s < n; ++s)
            for (int t = s + 1; t <= n; ++t) best = std::max(best, ratio(s, t));
    } else {
        for (int lag : dyadic_lags(n))
            for (int s = 0; s + lag <= n; ++s) best = std::max(best, ratio(s, s + lag));
    }
    return best;
}

}  // namespace roughreg
