#include <catch2/catch_amalgamated.hpp>

#include <roughreg/controlled.hpp>
#include <roughreg/generators.hpp>
#include <roughreg/regcalc.hpp>

#include <algorithm>
#include <cmath>

using namespace roughreg;

namespace {

ScalarFn square_fn = [](std::span<const double> v) { return v[0] * v[0]; };
GradFn square_grad = [](std::span<const double> v, std::span<double> out) { out[0] = 2.0 * v[0]; };

}  // namespace

TEST_CASE("pair labels round trip") {
    for (PairLabel l : {PairLabel::gradient, PairLabel::integrand, PairLabel::zero, PairLabel::custom})
        REQUIRE(pair_label_from_name(pair_label_name(l)) == l);
    REQUIRE_THROWS_AS(pair_label_from_name("nope"), std::invalid_argument);
}

TEST_CASE("remainder with zero derivative is the plain increment") {
    Grid g{1.0, 32};
    GridPath x = gen_bm(g, 1, Seed{301, 0});
    GridPath y = gen_bm(g, 1, Seed{301, 1});
    ControlledPair p = pair_zero(y, x);
    for (auto [j, k] : {std::pair{0, 32}, std::pair{5, 17}}) {
        Row r = p.remainder(j, k);
        REQUIRE(r[0] == Catch::Approx(y.at(k, 0) - y.at(j, 0)).margin(1e-15));
    }
}

TEST_CASE("affine functions of the path are controlled with zero remainder") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 2, Seed{302, 0});
    GridPath y(g, 1);
    GridPath yp(g, 2);
    for (int k = 0; k <= 64; ++k) {
        y.set(k, 0, 3.0 * x.at(k, 0) - 2.0 * x.at(k, 1) + 7.0);
        yp.set(k, 0, 3.0);
        yp.set(k, 1, -2.0);
    }
    ControlledPair p = pair_custom(y, yp, x);
    RandomStream picks(Seed{4242, 0});
    for (int trial = 0; trial < 20; ++trial) {
        int a = static_cast<int>(picks.uniform() * 64);
        int b = static_cast<int>(picks.uniform() * 64);
        Row r = p.remainder(std::min(a, b), std::max(a, b));
        REQUIRE(std::abs(r[0]) < 1e-13);
    }
}

TEST_CASE("quadratic remainder is the squared increment") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 1, Seed{303, 0});
    ControlledPair p = pair_gradient(square_fn, square_grad, x);
    RandomStream picks(Seed{4243, 0});
    for (int trial = 0; trial < 20; ++trial) {
        int a = static_cast<int>(picks.uniform() * 64);
        int b = static_cast<int>(picks.uniform() * 64);
        int j = std::min(a, b), k = std::max(a, b);
        double dx = x.at(k, 0) - x.at(j, 0);
        Row r = p.remainder(j, k);
        REQUIRE(r[0] == Catch::Approx(dx * dx).margin(1e-13));
    }
}

TEST_CASE("gradient pairs validate the supplied derivative") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 1, Seed{304, 0});
    GradFn wrong = [](std::span<const double> v, std::span<double> out) { out[0] = 4.0 * v[0]; };
    REQUIRE_THROWS_AS(pair_gradient(square_fn, wrong, x), std::invalid_argument);
}

TEST_CASE("integrand pairs require matching dimensions") {
    Grid g{1.0, 16};
    GridPath x = gen_bm(g, 2, Seed{305, 0});
    GridPath z = gen_bm(g, 1, Seed{305, 1});
    REQUIRE_THROWS_AS(pair_integrand(z, x), std::invalid_argument);
}

TEST_CASE("integrand pair of a constant process telescopes") {
    Grid g{1.0, 32};
    GridPath x = gen_bm(g, 1, Seed{306, 0});
    GridPath z(g, 1);
    for (int k = 0; k <= 32; ++k) z.set(k, 0, 0.7);
    ControlledPair p = pair_integrand(z, x);
    // Y = 0.7 (X - X_0), remainder of an affine pair vanishes
    REQUIRE(p.y.at(32, 0) == Catch::Approx(0.7 * (x.at(32, 0) - x.at(0, 0))).margin(1e-13));
    Row r = p.remainder(4, 27);
    REQUIRE(std::abs(r[0]) < 1e-13);
}

TEST_CASE("derivative array must be n*d wide") {
    Grid g{1.0, 16};
    GridPath x = gen_bm(g, 2, Seed{307, 0});
    GridPath y = gen_bm(g, 1, Seed{307, 1});
    GridPath yp = gen_bm(g, 1, Seed{307, 2});
    REQUIRE_THROWS_AS(pair_custom(y, yp, x), std::invalid_argument);
}

TEST_CASE("orthogonality statistic of a zero-derivative pair reduces to the covariation") {
    Grid g{1.0, 128};
    GridPath x = gen_bm(g, 1, Seed{308, 0});
    GridPath y = gen_bm(g, 1, Seed{308, 1});
    ControlledPair p = pair_zero(y, x);
    for (int m : {2, 8, 32})
        REQUIRE(orthogonality_stat_idx(p, m, 128) ==
                Catch::Approx(std::abs(c_eps_idx(y, x, m, 128))).margin(1e-14));
}

TEST_CASE("orthogonality statistic vanishes for affine pairs") {
    Grid g{1.0, 128};
    GridPath x = gen_bm(g, 1, Seed{309, 0});
    GridPath y(g, 1);
    GridPath yp(g, 1);
    for (int k = 0; k <= 128; ++k) {
        y.set(k, 0, -1.5 * x.at(k, 0) + 0.25);
        yp.set(k, 0, -1.5);
    }
    ControlledPair p = pair_custom(y, yp, x);
    for (int m : {1, 4, 16, 64}) REQUIRE(orthogonality_stat_idx(p, m, 128) < 1e-13);
}

TEST_CASE("derivative ambiguity is bounded by the quadratic variation") {
    // swapping the derivative changes the statistic by at most sup|eta| qv
    Grid g{1.0, 1 << 12};
    GridPath x = gen_bm(g, 1, Seed{310, 0});
    auto [y, yp] = apply_fn(
        x, [](std::span<const double> v) { return std::sin(v[0]); },
        nullptr);
    (void)yp;
    GridPath yp0(g, 1);
    GridPath yp1(g, 1);
    for (int k = 0; k <= g.steps; ++k) yp1.set(k, 0, 0.5);
    ControlledPair p0 = pair_custom(y, yp0, x);
    ControlledPair p1 = pair_custom(y, yp1, x);
    for (int m : {4, 16}) {
        double gap = std::abs(orthogonality_stat_idx(p0, m, g.steps) - orthogonality_stat_idx(p1, m, g.steps));
        REQUIRE(gap <= 0.5 * scalar_qv_idx(x, m, g.steps) + 1e-13);
    }
}

TEST_CASE("a wrong derivative leaves a visible plateau") {
    Grid g{1.0, 1 << 12};
    GridPath x = gen_bm(g, 1, Seed{311, 0});
    GridPath z(g, 1);
    for (int k = 0; k <= g.steps; ++k) z.set(k, 0, std::sin(x.at(k, 0)));
    ControlledPair p = pair_integrand(z, x);
    GridPath bad = p.yprime;
    for (auto& v : bad.values) v += 0.5;
    ControlledPair q = pair_custom(p.y, bad, x);
    // the 0.5 offset contributes ~ 0.5 [X,X]_T = 0.5 at every window size
    REQUIRE(orthogonality_stat_idx(q, 4, g.steps) > 0.1);
    REQUIRE(orthogonality_stat_idx(q, 64, g.steps) > 0.1);
}

TEST_CASE("bracket check on a unit integrand recovers the quadratic variation") {
    Grid g{1.0, 1 << 12};
    std::vector<double> lhs_err, gap;
    for (int p = 0; p < 40; ++p) {
        GridPath x = gen_bm(g, 1, Seed{3120, static_cast<std::uint64_t>(p)});
        GridPath one(g, 1);
        for (int k = 0; k <= g.steps; ++k) one.set(k, 0, 1.0);
        ControlledPair pr = pair_integrand(one, x);
        auto [lhs, rhs] = gubinelli_bracket_check(pr, 4.0 / 4096.0, 1.0);
        // [Y,X]_T = T when Y = X - X_0
        lhs_err.push_back(std::abs(lhs[0] - 1.0));
        gap.push_back(std::abs(lhs[0] - rhs[0]));
    }
    std::sort(lhs_err.begin(), lhs_err.end());
    std::sort(gap.begin(), gap.end());
    REQUIRE(lhs_err[20] < 0.05);
    REQUIRE(gap[20] < 0.05);
}

TEST_CASE("bracket check rejects vector-valued integrands") {
    Grid g{1.0, 16};
    GridPath x = gen_bm(g, 2, Seed{313, 0});
    GridPath y = gen_bm(g, 2, Seed{313, 1});
    GridPath yp(g, 4);
    ControlledPair p = pair_custom(y, yp, x);
    REQUIRE_THROWS_AS(gubinelli_bracket_check(p, 0.25, 1.0), std::invalid_argument);
}
