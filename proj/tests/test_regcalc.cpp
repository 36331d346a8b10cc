#include <catch2/catch_amalgamated.hpp>

#include <roughreg/regcalc.hpp>
#include <roughreg/generators.hpp>

#include <algorithm>
#include <cmath>

using namespace roughreg;

namespace {

GridPath linear_path(const Grid& g, double slope) {
    GridPath p(g, 1);
    for (int k = 0; k <= g.steps; ++k) p.set(k, 0, slope * g.node(k));
    return p;
}

// window sum written out literally, clamping included
double c_eps_brute(const GridPath& a, const GridPath& b, int m, int j) {
    int n = a.grid.steps;
    double acc = 0.0;
    for (int k = 0; k < j; ++k) {
        int r = std::min(k + m, n);
        acc += (a.at(r, 0) - a.at(k, 0)) * (b.at(r, 0) - b.at(k, 0));
    }
    return acc * a.grid.dt() / (m * a.grid.dt());
}

}  // namespace

TEST_CASE("eps schedule construction") {
    EpsSchedule s = EpsSchedule::pow2(4);
    REQUIRE(s.multiples == std::vector<int>{8, 4, 2, 1});
    REQUIRE(s.levels() == 4);
    REQUIRE(s.finest() == 1);

    Grid g{1.0, 1 << 10};
    EpsSchedule h = EpsSchedule::harness_default(g, 3);
    REQUIRE(h.multiples == std::vector<int>{128, 64, 32});
    auto eps = h.eps(g);
    REQUIRE(eps[0] == Catch::Approx(0.125));
    REQUIRE(eps[2] == Catch::Approx(1.0 / 32.0));

    REQUIRE_THROWS_AS(EpsSchedule::harness_default(Grid{1.0, 100}, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(EpsSchedule(std::vector<int>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(EpsSchedule(std::vector<int>{4, 4}), std::invalid_argument);
    REQUIRE_THROWS_AS(EpsSchedule(std::vector<int>{2, 4}), std::invalid_argument);
    REQUIRE_THROWS_AS(EpsSchedule(std::vector<int>{2, 0}), std::invalid_argument);
}

TEST_CASE("eval series rejects non-finite entries") {
    EvalSeries s;
    Mat v(1, 1);
    v(0, 0) = 1.0;
    s.append(0.5, 1.0, v);
    REQUIRE(s.points.size() == 1);
    v(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(s.append(0.25, 1.0, v), std::runtime_error);
}

TEST_CASE("covariation functional frozen value on the identity path") {
    Grid g{1.0, 8};
    GridPath x = linear_path(g, 1.0);
    // clamped tail windows shrink the last summands: 29/128 on this grid
    REQUIRE(c_eps(x, x, 0.25, 1.0) == Catch::Approx(0.2265625).margin(1e-15));
    REQUIRE(c_eps_brute(x, x, 2, 8) == Catch::Approx(0.2265625).margin(1e-15));

    GridPath y = linear_path(g, -3.0);
    REQUIRE(c_eps(y, y, 0.25, 1.0) == Catch::Approx(9.0 * 0.2265625).margin(1e-12));
}

TEST_CASE("covariation functional matches the literal window sum on random paths") {
    Grid g{1.0, 64};
    GridPath a = gen_bm(g, 1, Seed{101, 0});
    GridPath b = gen_bm(g, 1, Seed{101, 1});
    for (int m : {1, 3, 8, 64})
        for (int j : {0, 1, 17, 64})
            REQUIRE(c_eps_idx(a, b, m, j) == Catch::Approx(c_eps_brute(a, b, m, j)).margin(1e-15));
}

TEST_CASE("covariation is symmetric and bilinear") {
    Grid g{1.0, 64};
    GridPath a = gen_bm(g, 1, Seed{7, 0});
    GridPath b = gen_bm(g, 1, Seed{7, 1});
    GridPath c = gen_bm(g, 1, Seed{7, 2});

    REQUIRE(c_eps_idx(a, b, 4, 64) == c_eps_idx(b, a, 4, 64));

    GridPath combo(g, 1);
    for (int k = 0; k <= 64; ++k) combo.set(k, 0, 2.0 * a.at(k, 0) - 5.0 * b.at(k, 0));
    double lhs = c_eps_idx(combo, c, 4, 64);
    double rhs = 2.0 * c_eps_idx(a, c, 4, 64) - 5.0 * c_eps_idx(b, c, 4, 64);
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-12));
}

TEST_CASE("strong-sense statistic dominates the covariation") {
    Grid g{1.0, 128};
    GridPath a = gen_bm(g, 1, Seed{41, 0});
    GridPath b = gen_bm(g, 1, Seed{41, 1});
    for (int m : {2, 8}) {
        REQUIRE(std::abs(c_eps_idx(a, b, m, 128)) <= strong_sense_stat_idx(a, b, m, 128) + 1e-15);
        // same path: products are already nonnegative
        REQUIRE(strong_sense_stat_idx(a, a, m, 128) == Catch::Approx(c_eps_idx(a, a, m, 128)).margin(1e-15));
    }
}

TEST_CASE("cubic variation frozen value on the identity path") {
    Grid g{1.0, 8};
    GridPath x = linear_path(g, 1.0);
    // 7 full windows of (1/4)^3 plus one clamped window of (1/8)^3, halved
    REQUIRE(cubic_variation_stat(x, 0.25, 1.0) == Catch::Approx(0.0556640625).margin(1e-15));
    GridPath y = linear_path(g, 2.0);
    REQUIRE(cubic_variation_stat(y, 0.25, 1.0) == Catch::Approx(8.0 * 0.0556640625).margin(1e-13));
}

TEST_CASE("scalar qv sums componentwise covariations") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 3, Seed{55, 0});
    for (int m : {1, 4, 16}) {
        double direct = scalar_qv_idx(x, m, 64);
        double split = 0.0;
        for (int c = 0; c < 3; ++c) {
            GridPath xc = component(x, c);
            split += c_eps_idx(xc, xc, m, 64);
        }
        REQUIRE(direct == Catch::Approx(split).margin(1e-13));
    }
}

TEST_CASE("scalar qv is non-decreasing in time") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 2, Seed{56, 0});
    double prev = 0.0;
    for (int j : {16, 32, 48, 64}) {
        double q = scalar_qv_idx(x, 4, j);
        REQUIRE(q >= prev - 1e-15);
        prev = q;
    }
}

TEST_CASE("weighted covariation degenerate weights") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 1, Seed{57, 0});
    GridPath one(g, 1);
    for (int k = 0; k <= 64; ++k) one.set(k, 0, 1.0);
    GridPath zero(g, 1);

    for (int m : {2, 8}) {
        REQUIRE(weighted_cov_idx(one, x, x, m, 64) == Catch::Approx(c_eps_idx(x, x, m, 64)).margin(1e-15));
        REQUIRE(weighted_cov_idx(zero, x, x, m, 64) == 0.0);
    }
}

TEST_CASE("forward integral of a constant integrand telescopes") {
    Grid g{1.0, 8};
    GridPath x = gen_bm(g, 1, Seed{58, 0});
    GridPath one(g, 1);
    for (int k = 0; k <= 8; ++k) one.set(k, 0, 1.0);

    for (int m : {1, 2, 4}) {
        Mat f = forward_integral_idx(one, x, m, 8);
        double head = 0.0;
        for (int k = 0; k < m; ++k) head += x.at(k, 0);
        REQUIRE(f(0, 0) == Catch::Approx(x.at(8, 0) - head / m).margin(1e-14));
    }
}

TEST_CASE("forward integral approximates the Stieltjes integral on a smooth pair") {
    Grid g{1.0, 4096};
    GridPath x = linear_path(g, 2.0);
    GridPath y(g, 1);
    for (int k = 0; k <= 4096; ++k) {
        double t = g.node(k);
        y.set(k, 0, t * t);
    }

    // m=1 is exactly the left Riemann-Stieltjes sum over the grid
    Mat f1 = forward_integral_idx(y, x, 1, 4096);
    double riemann = 0.0;
    for (int k = 0; k < 4096; ++k) riemann += y.at(k, 0) * (x.at(k + 1, 0) - x.at(k, 0));
    REQUIRE(f1(0, 0) == Catch::Approx(riemann).margin(1e-13));

    // against the continuum value 2 * int_0^1 t^2 dt = 2/3
    REQUIRE(std::abs(f1(0, 0) - 2.0 / 3.0) < 1e-3);
    Mat f4 = forward_integral_idx(y, x, 4, 4096);
    REQUIRE(std::abs(f4(0, 0) - 2.0 / 3.0) < 5e-3);
}

TEST_CASE("symmetric integral is the average of forward and backward") {
    Grid g{1.0, 256};
    GridPath x = gen_bm(g, 2, Seed{59, 0});
    GridPath y = gen_bm(g, 1, Seed{59, 1});
    for (int m : {1, 4, 32}) {
        for (int j : {64, 256}) {
            Mat f = forward_integral_idx(y, x, m, j);
            Mat b = backward_integral_idx(y, x, m, j);
            Mat s = symmetric_integral_idx(y, x, m, j);
            Mat avg = f + b;
            avg *= 0.5;
            REQUIRE(max_abs_diff(s, avg) < 1e-14);
        }
    }
}

TEST_CASE("forward equals backward for a constant integrand") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 1, Seed{60, 0});
    GridPath one(g, 1);
    for (int k = 0; k <= 64; ++k) one.set(k, 0, 1.0);
    Mat f = forward_integral_idx(one, x, 4, 64);
    Mat b = backward_integral_idx(one, x, 4, 64);
    REQUIRE(max_abs_diff(f, b) < 1e-14);
}

TEST_CASE("backward minus forward approaches the bracket on brownian paths") {
    Grid g{1.0, 1 << 14};
    GridPath x = gen_bm(g, 1, Seed{61, 0});
    auto [y, yp] = apply_fn(
        x, [](std::span<const double> v) { return std::sin(v[0]); }, nullptr);
    (void)yp;

    int m = 16;
    Mat f = forward_integral_idx(y, x, m, g.steps);
    Mat b = backward_integral_idx(y, x, m, g.steps);
    double bracket = 0.0;
    for (int k = 0; k < g.steps; ++k)
        bracket += (y.at(k + 1, 0) - y.at(k, 0)) * (x.at(k + 1, 0) - x.at(k, 0));
    REQUIRE(std::abs((b(0, 0) - f(0, 0)) - bracket) < 0.1);
}

TEST_CASE("ito oracle telescopes for a constant integrand") {
    Grid g{1.0, 32};
    GridPath x = gen_bm(g, 1, Seed{62, 0});
    GridPath one(g, 1);
    for (int k = 0; k <= 32; ++k) one.set(k, 0, 1.0);
    GridPath i = ito_oracle(one, x);
    for (int j = 0; j <= 32; ++j) REQUIRE(i.at(j, 0) == Catch::Approx(x.at(j, 0) - x.at(0, 0)).margin(1e-14));
}

TEST_CASE("stratonovich oracle integrates the path against itself exactly") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 1, Seed{63, 0});
    GridPath s = strat_oracle(x, x);
    for (int j : {16, 64})
        REQUIRE(s.at(j, 0) == Catch::Approx(0.5 * x.at(j, 0) * x.at(j, 0)).margin(1e-13));
}

TEST_CASE("stratonovich minus ito oracle equals half the bracket") {
    Grid g{1.0, 128};
    GridPath x = gen_bm(g, 1, Seed{64, 0});
    GridPath z = gen_bm(g, 1, Seed{64, 1});
    GridPath si = strat_oracle(z, x);
    GridPath ii = ito_oracle(z, x);
    for (int j : {32, 128}) {
        double half_bracket = 0.5 * increment_product_sum(z, 0, x, 0, 0, j);
        REQUIRE(si.at(j, 0) - ii.at(j, 0) == Catch::Approx(half_bracket).margin(1e-13));
    }
}

TEST_CASE("ito oracle against the closed-form ito integral of brownian motion") {
    // int_0^t B dB = (B_t^2 - t) / 2; grid sums converge at sqrt(dt)
    Grid g{1.0, 1 << 14};
    std::vector<double> errs;
    for (int p = 0; p < 50; ++p) {
        GridPath x = gen_bm(g, 1, Seed{650, static_cast<std::uint64_t>(p)});
        GridPath i = ito_oracle(x, x);
        double closed = 0.5 * (x.at(g.steps, 0) * x.at(g.steps, 0) - 1.0);
        errs.push_back(std::abs(i.at(g.steps, 0) - closed));
    }
    std::sort(errs.begin(), errs.end());
    REQUIRE(errs[25] < 1e-2);
}

TEST_CASE("window bounds are validated") {
    Grid g{1.0, 16};
    GridPath x = gen_bm(g, 1, Seed{65, 0});
    REQUIRE_THROWS_AS(c_eps_idx(x, x, 0, 16), std::invalid_argument);
    REQUIRE_THROWS_AS(c_eps_idx(x, x, 17, 16), std::invalid_argument);
    REQUIRE_THROWS_AS(c_eps_idx(x, x, 4, 17), std::invalid_argument);
    REQUIRE_THROWS_AS(c_eps_idx(x, x, 4, -1), std::invalid_argument);
}
