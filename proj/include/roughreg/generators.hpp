#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "mat.hpp"
#include "random.hpp"

namespace roughreg {

// Gaussians are consumed step-major (node k outer, component j inner) by every
// generator, so generators that coincide in law for some parameter value also
// coincide draw for draw (fBm at H=1/2 reproduces gen_bm).
inline GridPath gen_bm(const Grid& grid, int dim, Seed seed) {
    if (dim < 1) throw std::invalid_argument("gen_bm: dim must be >= 1");
    GridPath x(grid, dim);
    RandomStream rs(seed);
    double sdt = std::sqrt(grid.dt());
    for (int k = 0; k < grid.steps; ++k)
        for (int j = 0; j < dim; ++j) x.set(k + 1, j, x.at(k, j) + sdt * rs.normal());
    return x;
}

// Lower Cholesky factor of the unit-lag fGn correlation matrix
// G_ij = g(|i-j|), g(k) = ((k+1)^{2H} + |k-1|^{2H} - 2 k^{2H}) / 2.
// Scaling by dt^H turns a standard normal vector into exact fBm increments.
class FbmFactor {
  public:
    FbmFactor(int n, double hurst) : n_(n), hurst_(hurst) {
        if (hurst <= 0.0 || hurst >= 1.0) throw std::invalid_argument("FbmFactor: H must lie in (0,1)");
        if (n < 1) throw std::invalid_argument("FbmFactor: need n >= 1");
        if (!factorize(0.0)) {
            // Rounding can push tiny eigenvalues below zero for H near 1.
            std::fprintf(stderr, "roughreg: fGn covariance not PD at n=%d H=%.6f, retrying with 1e-12 jitter\n", n,
                         hurst);
            jittered_ = true;
            if (!factorize(1e-12)) throw std::runtime_error("FbmFactor: factorization failed even with jitter");
        }
    }

    int size() const { return n_; }
    double hurst() const { return hurst_; }
    bool jittered() const { return jittered_; }

    // out = L z (unit-lag increments; caller applies the dt^H scale).
    void apply(std::span<const double> z, std::span<double> out) const {
        for (int i = 0; i < n_; ++i) {
            const double* li = l_.data() + static_cast<size_t>(i) * n_;
            double acc = 0.0;
            for (int j = 0; j <= i; ++j) acc += li[j] * z[j];
            out[i] = acc;
        }
    }

  private:
    bool factorize(double jitter) {
        double th = 2.0 * hurst_;
        std::vector<double> g(n_);
        for (int k = 0; k < n_; ++k) {
            double kk = static_cast<double>(k);
            g[k] = 0.5 * (std::pow(kk + 1.0, th) + std::pow(std::fabs(kk - 1.0), th) - 2.0 * std::pow(kk, th));
        }
        g[0] += jitter;
        l_.assign(static_cast<size_t>(n_) * n_, 0.0);
        // Cholesky-Crout over the lower triangle; rows are contiguous.
        for (int i = 0; i < n_; ++i) {
            double* li = l_.data() + static_cast<size_t>(i) * n_;
            for (int j = 0; j <= i; ++j) {
                const double* lj = l_.data() + static_cast<size_t>(j) * n_;
                double acc = g[std::abs(i - j)];
                for (int k = 0; k < j; ++k) acc -= li[k] * lj[k];
                if (i == j) {
                    if (acc <= 0.0) return false;
                    li[j] = std::sqrt(acc);
                } else {
                    li[j] = acc / lj[j];
                }
            }
        }
        return true;
    }

    int n_;
    double hurst_;
    bool jittered_ = false;
    std::vector<double> l_;
};

// Factors are O(N^2) memory, so keep only a couple alive; Monte Carlo reuses
// one factor across all streams of a run.
inline std::shared_ptr<const FbmFactor> shared_fbm_factor(int n, double hurst) {
    static std::mutex mu;
    static std::list<std::shared_ptr<const FbmFactor>> cache;
    std::lock_guard<std::mutex> lk(mu);
    for (auto it = cache.begin(); it != cache.end(); ++it) {
        if ((*it)->size() == n && (*it)->hurst() == hurst) {
            auto f = *it;
            cache.erase(it);
            cache.push_front(f);
            return f;
        }
    }
    auto f = std::make_shared<const FbmFactor>(n, hurst);
    cache.push_front(f);
    while (cache.size() > 2) cache.pop_back();
    return f;
}

constexpr int kDefaultFbmMaxSteps = 4096;

// Exact fBm with Hurst index H, independent components. The increment vector
// of each component is dt^H * L z with z drawn step-major as in gen_bm.
inline GridPath gen_fbm(const Grid& grid, double hurst, int dim, Seed seed, int max_steps = kDefaultFbmMaxSteps) {
    if (dim < 1) throw std::invalid_argument("gen_fbm: dim must be >= 1");
    if (grid.steps > max_steps)
        throw std::invalid_argument("gen_fbm: N exceeds the exact-factorization cap (" + std::to_string(max_steps) +
                                    ")");
    auto factor = shared_fbm_factor(grid.steps, hurst);
    RandomStream rs(seed);
    int n = grid.steps;
    std::vector<double> z(static_cast<size_t>(n) * dim);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < dim; ++j) z[static_cast<size_t>(k) * dim + j] = rs.normal();

    GridPath x(grid, dim);
    double scale = std::pow(grid.dt(), hurst);
    std::vector<double> zc(n), inc(n);
    for (int j = 0; j < dim; ++j) {
        for (int k = 0; k < n; ++k) zc[k] = z[static_cast<size_t>(k) * dim + j];
        factor->apply(zc, inc);
        for (int k = 0; k < n; ++k) x.set(k + 1, j, x.at(k, j) + scale * inc[k]);
    }
    return x;
}

using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
using VolFn = std::function<void(double t, std::span<const double> x, Mat& out)>;

// Euler scheme X_{k+1} = X_k + b(t_k, X_k) dt + sigma(t_k, X_k) sqrt(dt) z_k,
// consuming Gaussians in the same step-major order as gen_bm (b = 0, sigma = I
// reproduces it draw for draw).
inline GridPath gen_semimartingale(const Grid& grid, int dim, const DriftFn& drift, const VolFn& vol, Seed seed) {
    if (dim < 1) throw std::invalid_argument("gen_semimartingale: dim must be >= 1");
    GridPath x(grid, dim);
    RandomStream rs(seed);
    double dt = grid.dt();
    double sdt = std::sqrt(dt);
    std::vector<double> b(dim), z(dim);
    Mat sigma(dim, dim);
    for (int k = 0; k < grid.steps; ++k) {
        double t = grid.node(k);
        auto xk = x.row(k);
        drift(t, xk, b);
        vol(t, xk, sigma);
        for (int j = 0; j < dim; ++j) z[j] = rs.normal();
        for (int i = 0; i < dim; ++i) {
            double noise = 0.0;
            for (int j = 0; j < dim; ++j) noise += sigma(i, j) * z[j];
            double v = xk[i] + b[i] * dt + sdt * noise;
            if (!std::isfinite(v)) throw std::runtime_error("gen_semimartingale: non-finite value in Euler step");
            x.set(k + 1, i, v);
        }
    }
    return x;
}

using ScalarFn = std::function<double(std::span<const double>)>;
using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

// Y_k = f(X_k), optionally with the gradient path (rows (grad f)(X_k)).
inline std::pair<GridPath, std::optional<GridPath>> apply_fn(const GridPath& x, const ScalarFn& f,
                                                             const GradFn* grad = nullptr) {
    GridPath y(x.grid, 1);
    for (int k = 0; k < x.nodes(); ++k) {
        double v = f(x.row(k));
        if (!std::isfinite(v)) throw std::runtime_error("apply_fn: f produced a non-finite value");
        y.set(k, 0, v);
    }
    if (!grad) return {std::move(y), std::nullopt};
    GridPath g(x.grid, x.dim);
    std::vector<double> gv(x.dim);
    for (int k = 0; k < x.nodes(); ++k) {
        (*grad)(x.row(k), gv);
        for (int j = 0; j < x.dim; ++j) {
            if (!std::isfinite(gv[j])) throw std::runtime_error("apply_fn: gradient produced a non-finite value");
            g.set(k, j, gv[j]);
        }
    }
    return {std::move(y), std::move(g)};
}

}  // namespace roughreg
