#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <roughreg/roughreg.hpp>

namespace {

using namespace roughreg;

struct DriverFlags {
    std::string kind = "bm";
    int dim = 1;
    double hurst = 0.5;
    double ou_rate = 1.0;
    double ou_vol = 1.0;

    DriverSpec spec() const { return DriverSpec{kind, dim, hurst, ou_rate, ou_vol}; }

    void attach(CLI::App* cmd) {
        cmd->add_option("--driver", kind, "driver kind")->check(CLI::IsMember({"bm", "fbm", "sde_ou"}));
        cmd->add_option("--dim", dim, "driver dimension")->check(CLI::PositiveNumber);
        cmd->add_option("--hurst", hurst, "Hurst index for fbm")->check(CLI::Range(0.01, 0.99));
        cmd->add_option("--ou-rate", ou_rate, "mean reversion rate for sde_ou");
        cmd->add_option("--ou-vol", ou_vol, "volatility for sde_ou");
    }
};

int cmd_generate(const DriverFlags& drv, int grid, double horizon, std::uint64_t seed, int paths,
                 const std::string& out) {
    Grid g{horizon, grid};
    if (paths == 1) {
        write_path_csv(out, make_driver(drv.spec(), g, Seed{seed, 0}));
        std::cout << out << "\n";
        return 0;
    }
    std::filesystem::create_directories(out);
    for (int p = 0; p < paths; ++p) {
        char name[32];
        std::snprintf(name, sizeof(name), "path_%04d.csv", p);
        write_path_csv((std::filesystem::path(out) / name).string(),
                       make_driver(drv.spec(), g, Seed{seed, static_cast<std::uint64_t>(p)}));
    }
    std::cout << out << " (" << paths << " paths)\n";
    return 0;
}

int cmd_eval(const std::string& functional, const std::string& path_file, const std::string& path2_file,
             const DriverFlags& drv, int grid, double horizon, std::uint64_t seed, int levels, double t_eval,
             const std::string& out) {
    GridPath x = path_file.empty() ? make_driver(drv.spec(), Grid{horizon, grid}, Seed{seed, 0})
                                   : read_path_csv(path_file);
    const Grid& g = x.grid;
    int j = t_eval > 0.0 ? g.index_of(t_eval) : g.steps;

    // Second operand: explicit file, else the first two components, else the
    // path itself.
    GridPath a = x.dim > 1 ? component(x, 0) : x;
    GridPath b = x.dim > 1 ? component(x, 1) : x;
    if (!path2_file.empty()) {
        b = read_path_csv(path2_file);
        a = x.dim > 1 ? component(x, 0) : x;
        require_same_grid(b.grid, g, "eval path2");
    }

    EpsSchedule sch = EpsSchedule::harness_default(g, levels);
    std::vector<double> eps = sch.eps(g);
    EvalSeries series{functional, {}};

    for (size_t i = 0; i < sch.multiples.size(); ++i) {
        int m = sch.multiples[i];
        Mat value(1, 1);
        if (functional == "qv") {
            value(0, 0) = scalar_qv_idx(x, m, j);
        } else if (functional == "cubic") {
            require_scalar(x, "cubic");
            value(0, 0) = cubic_variation_stat_idx(x, m, j);
        } else if (functional == "cov") {
            require_scalar(a, "cov");
            require_scalar(b, "cov");
            value(0, 0) = c_eps_idx(a, b, m, j);
        } else if (functional == "strong") {
            require_scalar(a, "strong");
            require_scalar(b, "strong");
            value(0, 0) = strong_sense_stat_idx(a, b, m, j);
        } else if (functional == "weighted") {
            require_scalar(a, "weighted");
            require_scalar(b, "weighted");
            value(0, 0) = weighted_cov_idx(b, a, a, m, j);
        } else if (functional == "forward") {
            value = forward_integral_idx(b, x, m, j);
        } else if (functional == "backward") {
            value = backward_integral_idx(b, x, m, j);
        } else if (functional == "symmetric") {
            value = symmetric_integral_idx(b, x, m, j);
        } else {
            throw std::invalid_argument("unknown functional: " + functional);
        }
        series.append(eps[i], g.node(j), value);
        std::cout << "eps=" << eps[i] << " value=";
        for (int r = 0; r < value.rows; ++r)
            for (int c = 0; c < value.cols; ++c) std::cout << (r + c ? " " : "") << value(r, c);
        std::cout << "\n";
    }
    if (!out.empty()) write_series_csv(out, series);
    return 0;
}

int cmd_verify(ExperimentConfig cfg) {
    ExperimentResult res = run_experiment(cfg);
    if (!cfg.out_dir.empty()) write_report(cfg.out_dir, res);
    std::cout << summary_table(res);
    return res.all_pass() ? 0 : 1;
}

int cmd_report(const std::string& dir) {
    ExperimentResult res = read_report(dir);
    std::cout << summary_table(res);
    return res.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic calculus via regularization: paths, functionals, and verification presets"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "sample driver paths and write them as CSV");
    DriverFlags gen_drv;
    gen_drv.attach(gen);
    int gen_grid = 4096, gen_paths = 1;
    double gen_horizon = 1.0;
    std::uint64_t gen_seed = roughreg::kDefaultSeed;
    std::string gen_out;
    gen->add_option("--grid", gen_grid, "number of grid steps")->check(CLI::PositiveNumber);
    gen->add_option("--horizon", gen_horizon, "time horizon")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--paths", gen_paths, "number of paths")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "output CSV file (or directory when --paths > 1)")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate one functional across the eps schedule");
    DriverFlags ev_drv;
    ev_drv.attach(ev);
    std::string ev_functional, ev_path, ev_path2, ev_out;
    int ev_grid = 4096, ev_levels = 8;
    double ev_horizon = 1.0, ev_t = 0.0;
    std::uint64_t ev_seed = roughreg::kDefaultSeed;
    ev->add_option("functional", ev_functional, "functional to evaluate")
        ->required()
        ->check(CLI::IsMember({"qv", "cubic", "cov", "strong", "weighted", "forward", "backward", "symmetric"}));
    ev->add_option("--path", ev_path, "CSV path file (omit to sample a driver)");
    ev->add_option("--path2", ev_path2,
                   "second CSV path: partner for cov/strong, weight for weighted, integrand for "
                   "forward/backward/symmetric");
    ev->add_option("--grid", ev_grid, "grid steps for a sampled driver")->check(CLI::PositiveNumber);
    ev->add_option("--horizon", ev_horizon, "horizon for a sampled driver")->check(CLI::PositiveNumber);
    ev->add_option("--seed", ev_seed, "master seed for a sampled driver");
    ev->add_option("--levels", ev_levels, "number of eps levels")->check(CLI::Range(2, 16));
    ev->add_option("--t", ev_t, "evaluation time (default: horizon)");
    ev->add_option("--out", ev_out, "write the series as CSV");

    // verify
    auto* ver = app.add_subcommand("verify", "run a verification preset and write a result directory");
    std::string ver_preset, ver_config, ver_out;
    std::uint64_t ver_seed = 0;
    int ver_paths = 0, ver_grid = 0, ver_levels = 0, ver_jobs = 0;
    ver->add_option("preset", ver_preset, "scenario name")->required();
    ver->add_option("--config", ver_config, "JSON config file")->check(CLI::ExistingFile);
    ver->add_option("--seed", ver_seed, "master seed");
    ver->add_option("--paths", ver_paths, "Monte Carlo paths per check")->check(CLI::PositiveNumber);
    ver->add_option("--grid", ver_grid, "grid steps")->check(CLI::PositiveNumber);
    ver->add_option("--levels", ver_levels, "eps levels")->check(CLI::Range(2, 16));
    ver->add_option("--jobs", ver_jobs, "worker threads")->check(CLI::PositiveNumber);
    ver->add_option("--out", ver_out, "result directory");

    // report
    auto* rep = app.add_subcommand("report", "render a result directory as a summary table");
    std::string rep_dir;
    rep->add_option("dir", rep_dir, "result directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_drv, gen_grid, gen_horizon, gen_seed, gen_paths, gen_out);
        if (ev->parsed())
            return cmd_eval(ev_functional, ev_path, ev_path2, ev_drv, ev_grid, ev_horizon, ev_seed, ev_levels,
                            ev_t, ev_out);
        if (ver->parsed()) {
            roughreg::ExperimentConfig cfg;
            if (!ver_config.empty()) {
                std::ifstream in(ver_config);
                nlohmann::json js = nlohmann::json::parse(in);
                cfg = js.get<roughreg::ExperimentConfig>();
            }
            cfg.scenario = ver_preset;
            if (ver->count("--seed")) cfg.seed = ver_seed;
            if (ver->count("--paths")) cfg.paths = ver_paths;
            if (ver->count("--grid")) cfg.grid_steps = ver_grid;
            if (ver->count("--levels")) cfg.levels = ver_levels;
            if (ver->count("--jobs")) cfg.jobs = ver_jobs;
            if (ver->count("--out")) cfg.out_dir = ver_out;
            if (cfg.out_dir.empty()) cfg.out_dir = "results/" + cfg.scenario;
            return cmd_verify(cfg);
        }
        if (rep->parsed()) return cmd_report(rep_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
