#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "controlled.hpp"
#include "enhance.hpp"
#include "generators.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "mat.hpp"
#include "random.hpp"
#include "regcalc.hpp"
#include "roughint.hpp"
#include "stats.hpp"

namespace roughreg {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;
// Default master seed; part of the pinned regression baseline for the
// bundled scenarios.
inline constexpr std::uint64_t kDefaultSeed = 0x8d2f5a1c3b7e9604ULL;

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// --- driver and integrand vocabulary ----------------------------------------

struct DriverSpec {
    std::string kind = "bm";  // bm | fbm | sde_ou
    int dim = 1;
    double hurst = 0.5;
    double ou_rate = 1.0;  // dX = -rate X dt + vol dW
    double ou_vol = 1.0;

    std::string describe() const {
        std::ostringstream os;
        os << kind << "(d=" << dim;
        if (kind == "fbm") os << ",H=" << hurst;
        if (kind == "sde_ou") os << ",rate=" << ou_rate << ",vol=" << ou_vol;
        os << ")";
        return os.str();
    }
};

inline GridPath make_driver(const DriverSpec& spec, const Grid& grid, Seed seed) {
    if (spec.kind == "bm") return gen_bm(grid, spec.dim, seed);
    if (spec.kind == "fbm") return gen_fbm(grid, spec.hurst, spec.dim, seed);
    if (spec.kind == "sde_ou") {
        double rate = spec.ou_rate;
        double vol = spec.ou_vol;
        DriftFn drift = [rate](double, std::span<const double> x, std::span<double> out) {
            for (size_t i = 0; i < x.size(); ++i) out[i] = -rate * x[i];
        };
        VolFn volfn = [vol](double, std::span<const double>, Mat& s) {
            for (int i = 0; i < s.rows; ++i)
                for (int c = 0; c < s.cols; ++c) s(i, c) = i == c ? vol : 0.0;
        };
        return gen_semimartingale(grid, spec.dim, drift, volfn, seed);
    }
    throw std::invalid_argument("unknown driver kind: " + spec.kind);
}

namespace detail {

inline ScalarFn scalar_field(const std::string& name) {
    if (name == "sin")
        return [](std::span<const double> x) {
            double a = 0.0;
            for (double v : x) a += std::sin(v);
            return a;
        };
    if (name == "arctan")
        return [](std::span<const double> x) {
            double a = 0.0;
            for (double v : x) a += std::atan(v);
            return a;
        };
    throw std::invalid_argument("unknown scalar field: " + name);
}

inline GradFn gradient_field(const std::string& name) {
    if (name == "sin")
        return [](std::span<const double> x, std::span<double> g) {
            for (size_t i = 0; i < x.size(); ++i) g[i] = std::cos(x[i]);
        };
    if (name == "arctan")
        return [](std::span<const double> x, std::span<double> g) {
            for (size_t i = 0; i < x.size(); ++i) g[i] = 1.0 / (1.0 + x[i] * x[i]);
        };
    throw std::invalid_argument("unknown scalar field: " + name);
}

// Left-continuous four-level step path on quarters of the horizon; jump
// nodes keep the pre-jump value.
inline GridPath caglad_step(const Grid& grid, int dim) {
    static constexpr double lvl[4] = {0.25, 0.5, 0.25, 0.5};
    GridPath z(grid, dim);
    for (int k = 0; k <= grid.steps; ++k) {
        int b = k == 0 ? 0 : static_cast<int>((static_cast<long>(k) - 1) * 4 / grid.steps);
        if (b > 3) b = 3;
        for (int c = 0; c < dim; ++c) z.set(k, c, lvl[b]);
    }
    return z;
}

}  // namespace detail

struct IntegrandSpec {
    std::string kind = "gradient";  // zero | gradient | integrand | weak_dirichlet
    std::string fn = "sin";         // sin | arctan (gradient); sin | const | step (integrand)
    double yprime_scale = 1.0;
    double yprime_shift = 0.0;

    std::string describe() const {
        std::ostringstream os;
        os << kind << "(" << fn << ")";
        if (yprime_scale != 1.0) os << "*yprime_scale=" << yprime_scale;
        if (yprime_shift != 0.0) os << "*yprime_shift=" << yprime_shift;
        return os.str();
    }
};

inline ControlledPair make_pair(const IntegrandSpec& spec, const GridPath& x) {
    ControlledPair pr;
    if (spec.kind == "zero") {
        pr = pair_zero(GridPath(x.grid, 1), x);
    } else if (spec.kind == "gradient") {
        pr = pair_gradient(detail::scalar_field(spec.fn), detail::gradient_field(spec.fn), x);
    } else if (spec.kind == "integrand") {
        GridPath z(x.grid, x.dim);
        if (spec.fn == "sin") {
            for (int k = 0; k < x.nodes(); ++k)
                for (int c = 0; c < x.dim; ++c) z.set(k, c, std::sin(x.at(k, c)));
        } else if (spec.fn == "const") {
            for (double& v : z.values) v = 0.7;
        } else if (spec.fn == "step") {
            z = detail::caglad_step(x.grid, x.dim);
        } else {
            throw std::invalid_argument("unknown integrand fn: " + spec.fn);
        }
        pr = pair_integrand(z, x);
    } else if (spec.kind == "weak_dirichlet") {
        // f(X) plus a finite-variation part, which leaves the derivative
        // component untouched.
        ScalarFn f = detail::scalar_field(spec.fn);
        GradFn g = detail::gradient_field(spec.fn);
        auto [y, gp] = apply_fn(x, f, &g);
        double acc = 0.0;
        double dt = x.grid.dt();
        for (int k = 0; k < x.nodes(); ++k) {
            y.set(k, 0, y.at(k, 0) + acc);
            acc += std::sin(x.at(k, 0)) * dt;
        }
        pr = pair_custom(std::move(y), std::move(*gp), x);
    } else {
        throw std::invalid_argument("unknown integrand kind: " + spec.kind);
    }
    if (spec.yprime_scale != 1.0 || spec.yprime_shift != 0.0) {
        GridPath yp = pr.yprime;
        for (double& v : yp.values) v = v * spec.yprime_scale + spec.yprime_shift;
        pr = pair_custom(pr.y, std::move(yp), pr.x);
    }
    return pr;
}

// --- experiment configuration -----------------------------------------------

struct ExperimentConfig {
    std::string scenario;
    std::uint64_t seed = kDefaultSeed;
    int paths = 0;       // 0: scenario default
    int grid_steps = 0;  // 0: scenario default
    int levels = 0;      // 0: scenario default
    int jobs = 1;
    double horizon = 1.0;
    double final_tol = 0.0;    // <= 0: per-check default
    double slope_min = -1.0;   // < 0: per-check default
    std::string out_dir;
};

inline void to_json(nlohmann::json& js, const ExperimentConfig& c) {
    js = nlohmann::json{{"scenario", c.scenario}, {"seed", c.seed},           {"paths", c.paths},
                        {"grid", c.grid_steps},   {"levels", c.levels},       {"jobs", c.jobs},
                        {"horizon", c.horizon},   {"final_tol", c.final_tol}, {"slope_min", c.slope_min},
                        {"out_dir", c.out_dir}};
}

inline void from_json(const nlohmann::json& js, ExperimentConfig& c) {
    c.scenario = js.value("scenario", c.scenario);
    c.seed = js.value("seed", c.seed);
    c.paths = js.value("paths", c.paths);
    c.grid_steps = js.value("grid", c.grid_steps);
    c.levels = js.value("levels", c.levels);
    c.jobs = js.value("jobs", c.jobs);
    c.horizon = js.value("horizon", c.horizon);
    c.final_tol = js.value("final_tol", c.final_tol);
    c.slope_min = js.value("slope_min", c.slope_min);
    c.out_dir = js.value("out_dir", c.out_dir);
}

// Config identity for round-trip checks; jobs and out_dir do not affect
// results and are excluded.
inline bool same_result_config(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.scenario == b.scenario && a.seed == b.seed && a.paths == b.paths && a.grid_steps == b.grid_steps &&
           a.levels == b.levels && a.horizon == b.horizon && a.final_tol == b.final_tol &&
           a.slope_min == b.slope_min;
}

// --- results -----------------------------------------------------------------

struct ConvergenceReport {
    std::string name;
    std::string driver;
    std::string integrand;
    int grid_steps = 0;
    int paths = 0;
    int excluded = 0;
    std::vector<LevelStats> rows;
    double slope = 0.0;
    double final_median = 0.0;
    bool exact = false;       // every median at fp-noise level
    bool decay_pass = false;  // raw two-part rule outcome
    bool expect_fail = false; // fault injections invert the verdict
    bool pass = false;
    double final_tol = 1e-2;
    double slope_min = 0.1;
    bool decay_only = false;
    std::map<std::string, double> extras;
    double runtime_sec = 0.0;  // environmental; excluded from comparisons

    double per_path_ms() const { return paths > 0 ? runtime_sec * 1000.0 / paths : 0.0; }

    bool operator==(const ConvergenceReport& o) const {
        return name == o.name && driver == o.driver && integrand == o.integrand && grid_steps == o.grid_steps &&
               paths == o.paths && excluded == o.excluded && rows == o.rows && slope == o.slope &&
               final_median == o.final_median && exact == o.exact && decay_pass == o.decay_pass &&
               expect_fail == o.expect_fail && pass == o.pass && final_tol == o.final_tol &&
               slope_min == o.slope_min && decay_only == o.decay_only && extras == o.extras;
    }
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<ConvergenceReport> reports;
    std::string version = kVersion;
    std::string platform;
    double wall_sec = 0.0;

    bool all_pass() const {
        for (const auto& r : reports)
            if (!r.pass) return false;
        return true;
    }

    bool operator==(const ExperimentResult& o) const {
        return same_result_config(config, o.config) && reports == o.reports && version == o.version;
    }
};

// --- check runner ------------------------------------------------------------

namespace detail {

struct CheckDef {
    std::string name;
    std::string driver_desc;
    std::string integrand_desc;
    int grid_steps = 0;
    int paths = 0;
    int levels = 0;
    std::vector<double> eps;
    DecayRule rule;
    bool expect_fail = false;
    enum class Extra { none, fraction, max } extra = Extra::none;
    std::string extra_name;
    double extra_upper = std::numeric_limits<double>::infinity();
    double extra_lower = -std::numeric_limits<double>::infinity();
    // Fills errs (one per level); may set the per-path extra statistic.
    std::function<void(int path, std::vector<double>& errs, double& extra)> eval;
};

inline ConvergenceReport run_check(const CheckDef& def, int jobs) {
    auto t0 = std::chrono::steady_clock::now();
    struct Rec {
        std::vector<double> errs;
        double extra = std::numeric_limits<double>::quiet_NaN();
        bool ok = true;
    };
    std::vector<Rec> recs(def.paths);
    parallel_for(def.paths, jobs, [&](int p) {
        Rec& r = recs[p];
        r.errs.assign(def.eps.size(), 0.0);
        try {
            def.eval(p, r.errs, r.extra);
        } catch (const std::runtime_error&) {
            r.ok = false;  // non-finite path or estimate: excluded, counted below
        }
        if (r.ok)
            for (double v : r.errs)
                if (!std::isfinite(v)) r.ok = false;
    });

    ConvergenceReport rep;
    rep.name = def.name;
    rep.driver = def.driver_desc;
    rep.integrand = def.integrand_desc;
    rep.grid_steps = def.grid_steps;
    rep.paths = def.paths;
    rep.expect_fail = def.expect_fail;
    rep.final_tol = def.rule.final_tol;
    rep.slope_min = def.rule.slope_min;
    rep.decay_only = def.rule.decay_only;

    int used = 0;
    for (const auto& r : recs) r.ok ? ++used : ++rep.excluded;
    if (used == 0) throw std::runtime_error(def.name + ": every sample path was excluded");

    std::vector<double> sample;
    sample.reserve(used);
    for (size_t i = 0; i < def.eps.size(); ++i) {
        sample.clear();
        for (const auto& r : recs)
            if (r.ok) sample.push_back(r.errs[i]);
        rep.rows.push_back(LevelStats::from_sample(def.eps[i], sample));
    }
    DecayVerdict dv = evaluate_decay(rep.rows, def.rule);
    rep.slope = dv.slope;
    rep.final_median = dv.final_median;
    rep.exact = dv.exact;
    rep.decay_pass = dv.pass;

    bool extra_ok = true;
    if (def.extra != CheckDef::Extra::none) {
        double agg = def.extra == CheckDef::Extra::max ? -std::numeric_limits<double>::infinity() : 0.0;
        int cnt = 0;
        for (const auto& r : recs) {
            if (!r.ok || !std::isfinite(r.extra)) continue;
            ++cnt;
            if (def.extra == CheckDef::Extra::max)
                agg = std::max(agg, r.extra);
            else
                agg += r.extra;
        }
        if (cnt == 0) throw std::runtime_error(def.name + ": extra statistic missing on every path");
        if (def.extra == CheckDef::Extra::fraction) agg /= cnt;
        rep.extras[def.extra_name] = agg;
        extra_ok = agg <= def.extra_upper && agg >= def.extra_lower;
    }

    bool exclusion_ok = rep.excluded * 100 <= def.paths;  // more than 1% excluded fails the run
    rep.pass = def.expect_fail ? (exclusion_ok && !rep.decay_pass)
                               : (exclusion_ok && rep.decay_pass && extra_ok);
    rep.runtime_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// --- scenario builders -------------------------------------------------------

inline int pick(int override_v, int fallback) { return override_v > 0 ? override_v : fallback; }

inline DecayRule make_rule(const ExperimentConfig& cfg, double tol, double slope, bool decay_only = false) {
    DecayRule r;
    r.final_tol = cfg.final_tol > 0.0 ? cfg.final_tol : tol;
    r.slope_min = cfg.slope_min >= 0.0 ? cfg.slope_min : slope;
    r.decay_only = decay_only;
    return r;
}

struct CheckFrame {
    Grid grid;
    EpsSchedule sch;
    std::uint64_t master;
};

inline CheckFrame frame_for(CheckDef& c, const ExperimentConfig& cfg, int default_steps, int default_paths) {
    c.grid_steps = pick(cfg.grid_steps, default_steps);
    c.paths = pick(cfg.paths, default_paths);
    c.levels = pick(cfg.levels, 8);
    Grid grid{cfg.horizon, c.grid_steps};
    EpsSchedule sch = EpsSchedule::harness_default(grid, c.levels);
    c.eps = sch.eps(grid);
    return {grid, std::move(sch), cfg.seed ^ fnv1a64(c.name)};
}

// rough_integral_reg against the matching classical oracle at t = T.
inline CheckDef identity_check(const ExperimentConfig& cfg, std::string name, DriverSpec drv, IntegrandSpec intg,
                               Flavor flavor, int default_steps, int default_paths, double tol) {
    CheckDef c;
    c.name = std::move(name);
    c.driver_desc = drv.describe();
    c.integrand_desc = intg.describe();
    c.rule = make_rule(cfg, tol, 0.1);
    CheckFrame fr = frame_for(c, cfg, default_steps, default_paths);
    c.eval = [fr, drv, intg, flavor](int p, std::vector<double>& errs, double&) {
        GridPath x = make_driver(drv, fr.grid, Seed{fr.master, static_cast<std::uint64_t>(p)});
        ControlledPair pr = make_pair(intg, x);
        EnhancedPath e = EnhancedPath::build(x, flavor);
        Mat oracle =
            flavor == Flavor::strat ? strat_outer_at(pr.y, x, fr.grid.steps) : ito_outer_at(pr.y, x, fr.grid.steps);
        for (size_t i = 0; i < fr.sch.multiples.size(); ++i) {
            Row v = rough_integral_reg_idx(pr, e, fr.sch.multiples[i], fr.grid.steps);
            double err = 0.0;
            for (int cc = 0; cc < x.dim; ++cc) err = std::max(err, std::fabs(v[cc] - oracle(0, cc)));
            errs[i] = err;
        }
    };
    return c;
}

inline std::vector<CheckDef> build_theorem_66(const ExperimentConfig& cfg) {
    std::vector<CheckDef> out;
    DriverSpec bm2{"bm", 2};
    out.push_back(identity_check(cfg, "rough_vs_strat_gradient_sin", bm2, IntegrandSpec{"gradient", "sin"},
                                 Flavor::strat, 1 << 14, 200, 1e-2));

    {
        // (1/eps) int Y' XX_{s,s+eps} ds against half the finest-grid bracket.
        CheckDef c;
        c.name = "yprime_window_average_vs_half_bracket";
        c.driver_desc = bm2.describe();
        c.integrand_desc = "gradient(sin)";
        c.rule = make_rule(cfg, 1e-2, 0.1);
        CheckFrame fr = frame_for(c, cfg, 1 << 14, 200);
        c.eval = [fr](int p, std::vector<double>& errs, double&) {
            GridPath x = make_driver(DriverSpec{"bm", 2}, fr.grid, Seed{fr.master, static_cast<std::uint64_t>(p)});
            ControlledPair pr = make_pair(IntegrandSpec{"gradient", "sin"}, x);
            EnhancedPath e = EnhancedPath::build(x, Flavor::strat);
            int d = x.dim;
            int n = fr.grid.steps;
            Row ref(d, 0.0);
            for (int k = 0; k < n; ++k) {
                double dy = pr.y.at(k + 1, 0) - pr.y.at(k, 0);
                for (int cc = 0; cc < d; ++cc) ref[cc] += 0.5 * dy * (x.at(k + 1, cc) - x.at(k, cc));
            }
            Mat xx(d, d);
            for (size_t i = 0; i < fr.sch.multiples.size(); ++i) {
                int m = fr.sch.multiples[i];
                double w = 1.0 / m;
                Row est(d, 0.0);
                for (int k = 0; k < n; ++k) {
                    e.block_into(k, k + m, xx);
                    for (int cc = 0; cc < d; ++cc) {
                        double acc = 0.0;
                        for (int ii = 0; ii < d; ++ii) acc += pr.yprime.at(k, ii) * xx(ii, cc);
                        est[cc] += acc * w;
                    }
                }
                errs[i] = max_abs_diff(est, ref);
            }
        };
        out.push_back(std::move(c));
    }

    out.push_back(identity_check(cfg, "weak_dirichlet_strat", bm2, IntegrandSpec{"weak_dirichlet", "sin"},
                                 Flavor::strat, 1 << 12, 200, 1e-2));
    return out;
}

inline std::vector<CheckDef> build_theorem_69(const ExperimentConfig& cfg) {
    std::vector<CheckDef> out;
    DriverSpec bm1{"bm", 1};
    out.push_back(identity_check(cfg, "rough_vs_ito_integrand_sin", bm1, IntegrandSpec{"integrand", "sin"},
                                 Flavor::ito, 1 << 14, 200, 1e-2));
    out.push_back(identity_check(cfg, "rough_vs_ito_gradient_arctan", bm1, IntegrandSpec{"gradient", "arctan"},
                                 Flavor::ito, 1 << 14, 200, 1e-2));
    // The value is insensitive to the derivative component for this driver;
    // the shifted pair converges to the same limit, only with more noise.
    IntegrandSpec shifted{"integrand", "sin"};
    shifted.yprime_shift = 1.0;
    out.push_back(
        identity_check(cfg, "yprime_shift_invariance", bm1, shifted, Flavor::ito, 1 << 14, 200, 5e-2));
    return out;
}

inline std::vector<CheckDef> build_prop_64(const ExperimentConfig& cfg) {
    std::vector<CheckDef> out;
    DriverSpec fbm{"fbm", 1, 0.4};
    IntegrandSpec grad{"gradient", "sin"};

    auto pairwise = [&](std::string name, bool use_sewing, bool against_backward, bool monotone_extra) {
        CheckDef c;
        c.name = std::move(name);
        c.driver_desc = fbm.describe();
        c.integrand_desc = grad.describe();
        // these identities are gated on the finest-level median; any positive
        // decay slope is accepted
        c.rule = make_rule(cfg, 1e-2, 0.0);
        CheckFrame fr = frame_for(c, cfg, 1 << 12, 100);
        if (monotone_extra) {
            c.extra = CheckDef::Extra::fraction;
            c.extra_name = "monotone_fraction";
            c.extra_lower = 0.9;
        }
        c.eval = [fr, fbm, grad, use_sewing, against_backward](int p, std::vector<double>& errs, double& extra) {
            GridPath x = make_driver(fbm, fr.grid, Seed{fr.master, static_cast<std::uint64_t>(p)});
            ControlledPair pr = make_pair(grad, x);
            EnhancedPath e = EnhancedPath::build(x, Flavor::strat);
            int n = fr.grid.steps;
            Row ref;
            if (use_sewing) {
                SewingResult sres = sewing_integral_idx(pr, e, n, 1e-13, 30);
                ref = sres.value;
                const auto& ds = sres.deltas;
                bool mono = true;
                if (ds.size() >= 3) {
                    size_t L = ds.size();
                    mono = ds[L - 3] >= ds[L - 2] && ds[L - 2] >= ds[L - 1];
                }
                extra = mono ? 1.0 : 0.0;
            }
            for (size_t i = 0; i < fr.sch.multiples.size(); ++i) {
                int m = fr.sch.multiples[i];
                Row a = against_backward ? rough_integral_backward_idx(pr, e, m, n)
                                         : rough_integral_reg_idx(pr, e, m, n);
                Row b = use_sewing ? ref : rough_integral_backward_idx(pr, e, m, n);
                errs[i] = max_abs_diff(a, b);
            }
        };
        out.push_back(std::move(c));
    };

    pairwise("forward_vs_backward", false, false, false);
    pairwise("forward_vs_sewing", true, false, true);
    pairwise("backward_vs_sewing", true, true, false);
    return out;
}

inline std::vector<CheckDef> build_section2(const ExperimentConfig& cfg) {
    std::vector<CheckDef> out;

    auto stat_check = [&](std::string name, DriverSpec drv, int default_steps, double tol, double slope,
                          bool decay_only,
                          std::function<double(const GridPath&, int m, int j)> stat) {
        CheckDef c;
        c.name = std::move(name);
        c.driver_desc = drv.describe();
        c.integrand_desc = "none";
        c.rule = make_rule(cfg, tol, slope, decay_only);
        CheckFrame fr = frame_for(c, cfg, default_steps, 200);
        c.eval = [fr, drv, stat](int p, std::vector<double>& errs, double&) {
            GridPath x = make_driver(drv, fr.grid, Seed{fr.master, static_cast<std::uint64_t>(p)});
            for (size_t i = 0; i < fr.sch.multiples.size(); ++i)
                errs[i] = stat(x, fr.sch.multiples[i], fr.grid.steps);
        };
        out.push_back(std::move(c));
    };

    // Criterion targets.
    stat_check("qv_bm_d2", DriverSpec{"bm", 2}, 1 << 14, 0.05 * 2, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   return std::fabs(scalar_qv_idx(x, m, j) - 2.0 * x.grid.horizon);
               });
    stat_check("cov_fbm_h07_indep", DriverSpec{"fbm", 2, 0.7}, 1 << 12, 1e-2, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   GridPath x1 = component(x, 0), x2 = component(x, 1);
                   return std::fabs(c_eps_idx(x1, x2, m, j));
               });
    stat_check("cubic_fbm_h035", DriverSpec{"fbm", 1, 0.35}, 1 << 12, 1e30, 0.0, true,
               [](const GridPath& x, int m, int j) { return cubic_variation_stat_idx(x, m, j); });
    // the statistic concentrates near E|Z|^3 sqrt(eps T) ~ 5e-2 at the finest level,
    // so the value gate is loose and the decay slope carries the check
    stat_check("cubic_bm", DriverSpec{"bm", 1}, 1 << 14, 1e-1, 0.3, false,
               [](const GridPath& x, int m, int j) { return cubic_variation_stat_idx(x, m, j); });

    // Companion limits from the same family.
    stat_check("c_eps_bm_self", DriverSpec{"bm", 1}, 1 << 14, 0.05, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   double ref = increment_product_sum(x, 0, x, 0, 0, j);
                   return std::fabs(c_eps_idx(x, x, m, j) - ref);
               });
    stat_check("weighted_cov_sin_bm", DriverSpec{"bm", 1}, 1 << 14, 2e-2, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   GridPath h(x.grid, 1);
                   for (int k = 0; k < x.nodes(); ++k) h.set(k, 0, std::sin(x.at(k, 0)));
                   double ref = 0.0;
                   for (int k = 0; k < j; ++k) ref += std::sin(x.at(k, 0)) * x.grid.dt();
                   return std::fabs(weighted_cov_idx(h, x, x, m, j) - ref);
               });
    // Independent pair: the absolute-product sum settles at 2T/pi while the
    // signed covariation drains to zero.
    stat_check("strong_sense_bm_indep", DriverSpec{"bm", 2}, 1 << 14, 5e-2, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   GridPath x1 = component(x, 0), x2 = component(x, 1);
                   double target = 2.0 * x.grid.horizon / 3.14159265358979323846;
                   return std::fabs(strong_sense_stat_idx(x1, x2, m, j) - target);
               });
    stat_check("cov_bm_indep", DriverSpec{"bm", 2}, 1 << 14, 5e-2, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   GridPath x1 = component(x, 0), x2 = component(x, 1);
                   return std::fabs(c_eps_idx(x1, x2, m, j));
               });
    stat_check("forward_vs_ito_step", DriverSpec{"bm", 1}, 1 << 14, 1e-2, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   GridPath z = detail::caglad_step(x.grid, 1);
                   double ref = ito_oracle(z, x).at(j, 0);
                   return std::fabs(forward_integral_idx(z, x, m, j)(0, 0) - ref);
               });
    stat_check("symmetric_self_half_square", DriverSpec{"bm", 1}, 1 << 14, 1e-2, 0.1, false,
               [](const GridPath& x, int m, int j) {
                   double ref = 0.5 * x.at(j, 0) * x.at(j, 0);
                   return std::fabs(symmetric_integral_idx(x, x, m, j)(0, 0) - ref);
               });
    return out;
}

inline std::vector<CheckDef> build_qv_bm(const ExperimentConfig& cfg) {
    std::vector<CheckDef> out;
    CheckDef c;
    c.name = "qv_bm";
    DriverSpec drv{"bm", 1};
    c.driver_desc = drv.describe();
    c.integrand_desc = "none";
    c.rule = make_rule(cfg, 0.05, 0.1);
    CheckFrame fr = frame_for(c, cfg, 1 << 14, 200);
    c.eval = [fr, drv](int p, std::vector<double>& errs, double&) {
        GridPath x = make_driver(drv, fr.grid, Seed{fr.master, static_cast<std::uint64_t>(p)});
        double ref = increment_product_sum(x, 0, x, 0, 0, fr.grid.steps);
        for (size_t i = 0; i < fr.sch.multiples.size(); ++i)
            errs[i] = std::fabs(scalar_qv_idx(x, fr.sch.multiples[i], fr.grid.steps) - ref);
    };
    out.push_back(std::move(c));
    return out;
}

inline std::vector<CheckDef> build_orthogonality(const ExperimentConfig& cfg) {
    std::vector<CheckDef> out;
    auto orth = [&](std::string name, DriverSpec drv, int default_steps, double yprime_scale, bool expect_fail) {
        CheckDef c;
        c.name = std::move(name);
        IntegrandSpec intg{"gradient", "sin"};
        intg.yprime_scale = yprime_scale;
        c.driver_desc = drv.describe();
        c.integrand_desc = intg.describe();
        c.rule = make_rule(cfg, 5e-2, 0.1);
        c.expect_fail = expect_fail;
        CheckFrame fr = frame_for(c, cfg, default_steps, 200);
        c.eval = [fr, drv, intg](int p, std::vector<double>& errs, double&) {
            GridPath x = make_driver(drv, fr.grid, Seed{fr.master, static_cast<std::uint64_t>(p)});
            ControlledPair pr = make_pair(intg, x);
            for (size_t i = 0; i < fr.sch.multiples.size(); ++i)
                errs[i] = orthogonality_stat_idx(pr, fr.sch.multiples[i], fr.grid.steps);
        };
        out.push_back(std::move(c));
    };
    orth("orthogonality_bm", DriverSpec{"bm", 1}, 1 << 14, 1.0, false);
    orth("orthogonality_fbm_h035", DriverSpec{"fbm", 1, 0.35}, 1 << 12, 1.0, false);
    orth("orthogonality_fbm_h040", DriverSpec{"fbm", 1, 0.40}, 1 << 12, 1.0, false);
    orth("orthogonality_fbm_h045", DriverSpec{"fbm", 1, 0.45}, 1 << 12, 1.0, false);
    orth("orthogonality_fault_doubled_yprime", DriverSpec{"bm", 1}, 1 << 14, 2.0, true);
    return out;
}

inline std::vector<CheckDef> build_reversal(const ExperimentConfig& cfg) {
    std::vector<CheckDef> out;
    auto rev = [&](std::string name, Flavor flavor) {
        CheckDef c;
        c.name = std::move(name);
        DriverSpec drv{"bm", 2};
        IntegrandSpec intg{"gradient", "sin"};
        c.driver_desc = drv.describe();
        c.integrand_desc = intg.describe();
        c.rule = make_rule(cfg, 5e-3, 0.1);
        c.extra = CheckDef::Extra::max;
        c.extra_name = "max_final_discrepancy";
        c.extra_upper = 5e-3;
        CheckFrame fr = frame_for(c, cfg, 1 << 12, 20);
        c.eval = [fr, drv, intg, flavor](int p, std::vector<double>& errs, double& extra) {
            GridPath x = make_driver(drv, fr.grid, Seed{fr.master, static_cast<std::uint64_t>(p)});
            ControlledPair pr = make_pair(intg, x);
            EnhancedPath e = EnhancedPath::build(x, flavor);
            // t + eps stays inside the horizon for the whole schedule
            ReversalCheck rc(pr, e, 0.75 * fr.grid.horizon);
            for (size_t i = 0; i < fr.sch.multiples.size(); ++i) errs[i] = rc.discrepancy(fr.sch.multiples[i]);
            extra = errs.back();
        };
        out.push_back(std::move(c));
    };
    rev("reversal_strat", Flavor::strat);
    rev("reversal_ito", Flavor::ito);
    return out;
}

using CheckBuilder = std::vector<CheckDef> (*)(const ExperimentConfig&);

inline const std::map<std::string, CheckBuilder>& scenario_registry() {
    static const std::map<std::string, CheckBuilder> reg = {
        {"theorem_66", &build_theorem_66}, {"theorem_69", &build_theorem_69},
        {"prop_64", &build_prop_64},       {"section2", &build_section2},
        {"orthogonality", &build_orthogonality}, {"reversal", &build_reversal},
        {"qv_bm", &build_qv_bm},
    };
    return reg;
}

}  // namespace detail

inline std::vector<std::string> scenario_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : detail::scenario_registry()) names.push_back(k);
    return names;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    auto it = detail::scenario_registry().find(cfg.scenario);
    if (it == detail::scenario_registry().end())
        throw std::invalid_argument("unknown scenario: " + cfg.scenario);
    if (cfg.paths < 0 || cfg.levels == 1 || cfg.levels < 0)
        throw std::invalid_argument("run_experiment: need paths >= 1 and levels >= 2");
    auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    res.config = cfg;
#if defined(_WIN32)
    res.platform = "windows";
#elif defined(__APPLE__)
    res.platform = "darwin";
#else
    res.platform = "linux";
#endif
    for (auto& def : it->second(cfg)) res.reports.push_back(detail::run_check(def, std::max(1, cfg.jobs)));
    res.wall_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// Preset entry points: overrides keep any user-set field, the scenario id is
// forced.
inline ExperimentResult preset_theorem_66(ExperimentConfig cfg = {}) {
    cfg.scenario = "theorem_66";
    return run_experiment(cfg);
}
inline ExperimentResult preset_theorem_69(ExperimentConfig cfg = {}) {
    cfg.scenario = "theorem_69";
    return run_experiment(cfg);
}
inline ExperimentResult preset_prop_64(ExperimentConfig cfg = {}) {
    cfg.scenario = "prop_64";
    return run_experiment(cfg);
}
inline ExperimentResult preset_section2(ExperimentConfig cfg = {}) {
    cfg.scenario = "section2";
    return run_experiment(cfg);
}

// --- persistence ---------------------------------------------------------

namespace detail {

inline nlohmann::json report_verdict_json(const ConvergenceReport& r) {
    nlohmann::json extras(nlohmann::json::value_t::object);
    for (const auto& [k, v] : r.extras) extras[k] = v;
    return nlohmann::json{{"name", r.name},
                          {"pass", r.pass},
                          {"decay_pass", r.decay_pass},
                          {"expect_fail", r.expect_fail},
                          {"exact", r.exact},
                          {"slope", r.slope},
                          {"final_median", r.final_median},
                          {"final_tol", r.final_tol},
                          {"slope_min", r.slope_min},
                          {"decay_only", r.decay_only},
                          {"paths", r.paths},
                          {"excluded", r.excluded},
                          {"extras", extras}};
}

}  // namespace detail

inline void write_report(const std::string& dir, const ExperimentResult& res) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "tables");

    nlohmann::json verdicts;
    verdicts["schema_version"] = kReportSchemaVersion;
    verdicts["scenario"] = res.config.scenario;
    verdicts["all_pass"] = res.all_pass();
    verdicts["checks"] = nlohmann::json::array();
    for (const auto& r : res.reports) verdicts["checks"].push_back(detail::report_verdict_json(r));
    {
        std::ofstream out(fs::path(dir) / "verdicts.json");
        if (!out) throw std::runtime_error("cannot write verdicts.json in " + dir);
        out << verdicts.dump(2) << "\n";
    }

    nlohmann::json manifest;
    manifest["schema_version"] = kReportSchemaVersion;
    manifest["version"] = res.version;
    manifest["platform"] = res.platform;
    manifest["wall_sec"] = res.wall_sec;
    manifest["config"] = res.config;
    manifest["notes"] = {
        {"limits", "node-wise stability across eps levels is reported; continuity of limit processes is not asserted"},
        {"slopes", "slope thresholds are reporting policy for the decay diagnostics, not claimed convergence rates"},
        {"derivative_dependence",
         "for fractional drivers the dependence of the value on the derivative component is reported, not asserted"}};
    manifest["checks"] = nlohmann::json::array();
    for (const auto& r : res.reports)
        manifest["checks"].push_back(nlohmann::json{{"name", r.name},
                                                    {"driver", r.driver},
                                                    {"integrand", r.integrand},
                                                    {"grid", r.grid_steps},
                                                    {"runtime_sec", r.runtime_sec},
                                                    {"per_path_ms", r.per_path_ms()}});
    {
        std::ofstream out(fs::path(dir) / "manifest.json");
        if (!out) throw std::runtime_error("cannot write manifest.json in " + dir);
        out << manifest.dump(2) << "\n";
    }

    for (const auto& r : res.reports) {
        std::ofstream out(fs::path(dir) / "tables" / (r.name + ".csv"));
        if (!out) throw std::runtime_error("cannot write table for " + r.name);
        out << "eps,median,mean,q10,q90\n";
        for (const auto& row : r.rows)
            out << detail::fmt17(row.eps) << "," << detail::fmt17(row.median) << "," << detail::fmt17(row.mean)
                << "," << detail::fmt17(row.q10) << "," << detail::fmt17(row.q90) << "\n";
    }
}

inline ExperimentResult read_report(const std::string& dir) {
    namespace fs = std::filesystem;
    auto load = [&](const char* name) {
        fs::path p = fs::path(dir) / name;
        std::ifstream in(p);
        if (!in) throw std::runtime_error("report file not found: " + p.string());
        return nlohmann::json::parse(in);
    };
    nlohmann::json verdicts = load("verdicts.json");
    nlohmann::json manifest = load("manifest.json");
    for (const auto& js : {std::cref(verdicts), std::cref(manifest)})
        if (js.get().value("schema_version", -1) != kReportSchemaVersion)
            throw std::runtime_error("unsupported report schema_version in " + dir);

    ExperimentResult res;
    res.config = manifest.at("config").get<ExperimentConfig>();
    res.version = manifest.value("version", "");
    res.platform = manifest.value("platform", "");
    res.wall_sec = manifest.value("wall_sec", 0.0);

    std::map<std::string, nlohmann::json> meta;
    for (const auto& m : manifest.at("checks")) meta[m.at("name").get<std::string>()] = m;

    for (const auto& v : verdicts.at("checks")) {
        ConvergenceReport r;
        r.name = v.at("name").get<std::string>();
        r.pass = v.at("pass").get<bool>();
        r.decay_pass = v.at("decay_pass").get<bool>();
        r.expect_fail = v.at("expect_fail").get<bool>();
        r.exact = v.at("exact").get<bool>();
        r.slope = v.at("slope").get<double>();
        r.final_median = v.at("final_median").get<double>();
        r.final_tol = v.at("final_tol").get<double>();
        r.slope_min = v.at("slope_min").get<double>();
        r.decay_only = v.at("decay_only").get<bool>();
        r.paths = v.at("paths").get<int>();
        r.excluded = v.at("excluded").get<int>();
        for (const auto& [k, val] : v.at("extras").items()) r.extras[k] = val.get<double>();
        auto mit = meta.find(r.name);
        if (mit != meta.end()) {
            r.driver = mit->second.value("driver", "");
            r.integrand = mit->second.value("integrand", "");
            r.grid_steps = mit->second.value("grid", 0);
            r.runtime_sec = mit->second.value("runtime_sec", 0.0);
        }
        std::string header;
        auto rows = detail::read_csv_numeric((fs::path(dir) / "tables" / (r.name + ".csv")).string(), header);
        for (const auto& row : rows) {
            if (row.size() != 5) throw std::runtime_error("bad table row for " + r.name);
            LevelStats s;
            s.eps = row[0];
            s.median = row[1];
            s.mean = row[2];
            s.q10 = row[3];
            s.q90 = row[4];
            r.rows.push_back(s);
        }
        res.reports.push_back(std::move(r));
    }
    return res;
}

inline std::string summary_table(const ExperimentResult& res) {
    std::ostringstream os;
    os << "scenario " << res.config.scenario << "  seed " << res.config.seed << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-38s %12s %8s %10s  %s\n", "check", "final_med", "slope", "rule",
                  "verdict");
    os << buf;
    for (const auto& r : res.reports) {
        std::string rule = r.decay_only ? "decay" : "tol=" + std::to_string(r.final_tol).substr(0, 6);
        std::string verdict = r.pass ? "pass" : "FAIL";
        if (r.expect_fail) verdict += r.decay_pass ? " (fault not caught)" : " (expected fault)";
        std::snprintf(buf, sizeof(buf), "%-38s %12.4g %8.2f %10s  %s\n", r.name.c_str(), r.final_median, r.slope,
                      rule.c_str(), verdict.c_str());
        os << buf;
        for (const auto& [k, v] : r.extras) {
            std::snprintf(buf, sizeof(buf), "%-38s   %s=%.6g\n", "", k.c_str(), v);
            os << buf;
        }
    }
    os << (res.all_pass() ? "all checks passed\n" : "some checks FAILED\n");
    return os.str();
}

}  // namespace roughreg
