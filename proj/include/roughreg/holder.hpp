#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace roughreg {

// Lag set {1, 2, 4, ..., N} used when the full pair sweep would be too big.
inline std::vector<int> dyadic_lags(int n) {
    std::vector<int> lags;
    for (int l = 1; l <= n; l *= 2) lags.push_back(l);
    if (lags.back() != n) lags.push_back(n);
    return lags;
}

// sup_{s<t} |X_t - X_s| / (t-s)^alpha over grid pairs (Euclidean norm over
// components). Exact over all pairs when (N+1)^2 fits the budget, otherwise
// every start index against the dyadic lag set.
inline double holder_seminorm(const GridPath& x, double alpha, long pair_budget = 1L << 20) {
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("holder_seminorm: alpha must lie in (0,1]");
    int n = x.grid.steps;
    auto ratio = [&](int s, int t) {
        double d2 = 0.0;
        for (int j = 0; j < x.dim; ++j) {
            double d = x.at(t, j) - x.at(s, j);
            d2 += d * d;
        }
        double dt = x.grid.node(t) - x.grid.node(s);
        return std::sqrt(d2) / std::pow(dt, alpha);
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
