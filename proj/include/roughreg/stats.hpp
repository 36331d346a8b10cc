#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace roughreg {

// Linear-interpolation quantile (the R type-7 convention) on a copy.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
    std::sort(v.begin(), v.end());
    double h = q * (static_cast<double>(v.size()) - 1.0);
    size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

// Least-squares slope of log2(y) against log2(x). Values clamped away from
// zero so exact hits (fp zeros) don't poison the fit.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need matching samples, at least two");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double lx = std::log2(std::max(x[i], 1e-300));
        double ly = std::log2(std::max(y[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

// Per-level cross-path summary of an error statistic.
struct LevelStats {
    double eps = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double q10 = 0.0;
    double q90 = 0.0;

    static LevelStats from_sample(double eps, const std::vector<double>& sample) {
        LevelStats s;
        s.eps = eps;
        s.median = quantile(sample, 0.5);
        s.q10 = quantile(sample, 0.10);
        s.q90 = quantile(sample, 0.90);
        double acc = 0.0;
        for (double v : sample) acc += v;
        s.mean = acc / static_cast<double>(sample.size());
        return s;
    }

    bool operator==(const LevelStats& o) const {
        return eps == o.eps && median == o.median && mean == o.mean && q10 == o.q10 && q90 == o.q90;
    }
};

// Verdict rule for a decaying error sequence. Default: the finest-level
// median sits under final_tol and the fitted slope of median vs eps exceeds
// slope_min. decay_only drops the tolerance and asks only for decrease plus
// a positive slope, for statistics whose theoretical rate is below any
// usable threshold. A sequence with every median at fp-noise level passes
// outright.
struct DecayRule {
    double final_tol = 1e-2;
    double slope_min = 0.1;
    bool decay_only = false;
    static constexpr double exact_floor = 1e-13;
};

struct DecayVerdict {
    bool pass = false;
    bool exact = false;
    double slope = 0.0;
    double final_median = 0.0;
};

inline DecayVerdict evaluate_decay(const std::vector<LevelStats>& levels, const DecayRule& rule) {
    if (levels.size() < 2) throw std::invalid_argument("evaluate_decay: need at least two levels");
    DecayVerdict v;
    v.final_median = levels.back().median;
    bool all_tiny = true;
    for (const auto& l : levels) all_tiny = all_tiny && l.median <= DecayRule::exact_floor;
    std::vector<double> eps, med;
    for (const auto& l : levels) {
        eps.push_back(l.eps);
        med.push_back(l.median);
    }
    v.slope = loglog_slope(eps, med);
    if (all_tiny) {
        v.exact = true;
        v.pass = true;
        return v;
    }
    if (rule.decay_only)
        v.pass = v.final_median < levels.front().median && v.slope > 0.0;
    else
        v.pass = v.final_median < rule.final_tol && v.slope > rule.slope_min;
    return v;
}

// Runs fn(i) for i in [0, count) across up to `jobs` threads. Exceptions
// propagate from the first failing index; work is striped so callers relying
// on per-index independence stay deterministic.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&, w]() {
            try {
                for (int i = w; i < count; i += jobs) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace roughreg
