#include <catch2/catch_amalgamated.hpp>

#include <roughreg/enhance.hpp>
#include <roughreg/generators.hpp>
#include <roughreg/regcalc.hpp>

#include <algorithm>
#include <cmath>

using namespace roughreg;

namespace {

// literal second-order block: sum over [j,k) of (X_w - X_j) (x) dX,
// with the flavor's evaluation point w
Mat block_brute(const GridPath& x, Flavor fl, int j, int k) {
    int d = x.dim;
    Mat out(d, d);
    for (int q = j; q < k; ++q)
        for (int a = 0; a < d; ++a) {
            double base = fl == Flavor::ito ? x.at(q, a) : 0.5 * (x.at(q, a) + x.at(q + 1, a));
            double left = base - x.at(j, a);
            for (int b = 0; b < d; ++b) out(a, b) += left * (x.at(q + 1, b) - x.at(q, b));
        }
    return out;
}

}  // namespace

TEST_CASE("enhancement of a constant path vanishes") {
    Grid g{1.0, 16};
    GridPath x(g, 2);
    for (int k = 0; k <= 16; ++k) {
        x.set(k, 0, 1.0);
        x.set(k, 1, -2.0);
    }
    for (Flavor fl : {Flavor::ito, Flavor::strat}) {
        EnhancedPath e = EnhancedPath::build(x, fl);
        REQUIRE(e.block(0, 16).max_abs() == 0.0);
        REQUIRE(e.block(3, 9).max_abs() == 0.0);
    }
}

TEST_CASE("strat enhancement of the identity path gives the exact square") {
    Grid g{2.0, 32};
    GridPath x(g, 1);
    for (int k = 0; k <= 32; ++k) x.set(k, 0, g.node(k));
    EnhancedPath e = EnhancedPath::build(x, Flavor::strat);
    // trapezoid accumulation is exact on linear paths: X_{0,T} = T^2/2
    REQUIRE(e.block(0, 32)(0, 0) == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("blocks match the literal accumulation") {
    Grid g{1.0, 256};
    GridPath x = gen_bm(g, 2, Seed{201, 0});
    for (Flavor fl : {Flavor::ito, Flavor::strat}) {
        EnhancedPath e = EnhancedPath::build(x, fl);
        for (auto [j, k] : {std::pair{64, 192}, std::pair{0, 256}, std::pair{31, 97}}) {
            Mat direct = block_brute(x, fl, j, k);
            REQUIRE(max_abs_diff(e.block(j, k), direct) < 1e-12);
        }
    }
}

TEST_CASE("diagonal blocks vanish and reversed indices mirror") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 2, Seed{202, 0});
    EnhancedPath e = EnhancedPath::build(x, Flavor::ito);
    REQUIRE(e.block(17, 17).max_abs() == 0.0);
    REQUIRE(max_abs_diff(e.block(40, 12), e.block(12, 40)) == 0.0);
    // indices beyond the horizon clamp to the final node
    REQUIRE(max_abs_diff(e.block(12, 80), e.block(12, 64)) == 0.0);
}

TEST_CASE("chen relation holds to rounding on random triples") {
    Grid g{1.0, 512};
    RandomStream picks(Seed{4040, 0});
    for (Flavor fl : {Flavor::ito, Flavor::strat}) {
        GridPath x = gen_bm(g, 2, Seed{203, fl == Flavor::ito ? 0u : 1u});
        EnhancedPath e = EnhancedPath::build(x, fl);
        double scale = 1.0 + max_abs(x.values) * max_abs(x.values);
        for (int trial = 0; trial < 100; ++trial) {
            int a = static_cast<int>(picks.uniform() * 512);
            int b = static_cast<int>(picks.uniform() * 512);
            int c = static_cast<int>(picks.uniform() * 512);
            int lo = std::min({a, b, c}), hi = std::max({a, b, c});
            int mid = a + b + c - lo - hi;
            REQUIRE(chen_residual(e, lo, mid, hi) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("a corrupted block breaks the chen relation") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 2, Seed{204, 0});
    EnhancedPath e = EnhancedPath::build(x, Flavor::ito);

    int j = 8, m = 32, k = 56;
    Mat b_ut = e.block(m, k);
    Mat b_st = e.block(j, k);
    Mat b_su = e.block(j, m);
    b_st(0, 1) += 1.0;
    std::vector<double> dx_su(2), dx_ut(2);
    for (int c = 0; c < 2; ++c) {
        dx_su[c] = x.at(m, c) - x.at(j, c);
        dx_ut[c] = x.at(k, c) - x.at(m, c);
    }
    REQUIRE(chen_residual_blocks(b_ut, b_st, b_su, dx_su, dx_ut) >= 1.0 - 1e-12);
}

TEST_CASE("sym anti decomposition reassembles the block") {
    Grid g{1.0, 64};
    GridPath x = gen_bm(g, 3, Seed{205, 0});
    EnhancedPath e = EnhancedPath::build(x, Flavor::strat);
    Mat b = e.block(5, 50);
    auto [s, a] = sym_anti(b);
    Mat back = s + a;
    REQUIRE(max_abs_diff(back, b) < 1e-15);
    REQUIRE(max_abs_diff(s, s.transposed()) < 1e-15);
    Mat at = a.transposed();
    at += a;
    REQUIRE(at.max_abs() < 1e-15);
}

TEST_CASE("strat flavor is geometric") {
    Grid g{1.0, 512};
    GridPath x = gen_bm(g, 2, Seed{206, 0});
    EnhancedPath e = EnhancedPath::build(x, Flavor::strat);
    RandomStream picks(Seed{4041, 0});
    for (int trial = 0; trial < 100; ++trial) {
        int a = static_cast<int>(picks.uniform() * 512);
        int b = static_cast<int>(picks.uniform() * 512);
        REQUIRE(geometric_defect(e, std::min(a, b), std::max(a, b)) <= 1e-12);
    }
}

TEST_CASE("ito flavor defect is minus half the accumulated outer bracket") {
    Grid g{1.0, 256};
    GridPath x = gen_bm(g, 2, Seed{207, 0});
    EnhancedPath e = EnhancedPath::build(x, Flavor::ito);
    for (auto [j, k] : {std::pair{0, 256}, std::pair{32, 200}}) {
        Mat defect = geometric_defect_matrix(e, j, k);
        Mat bracket(2, 2);
        for (int q = j; q < k; ++q) {
            std::vector<double> dx(2);
            for (int c = 0; c < 2; ++c) dx[c] = x.at(q + 1, c) - x.at(q, c);
            bracket += outer(dx, dx);
        }
        bracket *= 0.5;
        Mat sum = defect + bracket;
        REQUIRE(sum.max_abs() < 1e-12);
    }
}

TEST_CASE("flavor difference is half the accumulated outer bracket") {
    Grid g{1.0, 256};
    GridPath x = gen_bm(g, 2, Seed{208, 0});
    EnhancedPath ei = EnhancedPath::build(x, Flavor::ito);
    EnhancedPath es = EnhancedPath::build(x, Flavor::strat);
    int j = 16, k = 240;
    Mat diff = es.block(j, k) - ei.block(j, k);
    Mat bracket(2, 2);
    for (int q = j; q < k; ++q) {
        std::vector<double> dx(2);
        for (int c = 0; c < 2; ++c) dx[c] = x.at(q + 1, c) - x.at(q, c);
        bracket += outer(dx, dx);
    }
    bracket *= 0.5;
    REQUIRE(max_abs_diff(diff, bracket) < 1e-12);

    // antisymmetric parts agree exactly across flavors
    auto [si, ai] = sym_anti(ei.block(j, k));
    auto [ss, as] = sym_anti(es.block(j, k));
    (void)si;
    (void)ss;
    REQUIRE(max_abs_diff(ai, as) < 1e-13);
}

TEST_CASE("two-parameter norm of the linear path enhancement") {
    Grid g{1.0, 64};
    GridPath x(g, 1);
    const double slope = 3.0;
    for (int k = 0; k <= 64; ++k) x.set(k, 0, slope * g.node(k));
    EnhancedPath e = EnhancedPath::build(x, Flavor::strat);
    // X_{j,k} = slope^2 (t_k - t_j)^2 / 2, so the beta=2 ratio is constant
    REQUIRE(holder2_norm(e, 2.0) == Catch::Approx(0.5 * slope * slope).margin(1e-10));
}

TEST_CASE("raw construction validates the iterated array") {
    Grid g{1.0, 8};
    GridPath x = gen_bm(g, 2, Seed{209, 0});
    REQUIRE_THROWS_AS(EnhancedPath::from_raw(x, Flavor::ito, std::vector<double>(7, 0.0)),
                      std::invalid_argument);
}

TEST_CASE("mean of the ito block over the whole interval is near zero") {
    Grid g{1.0, 32};
    const int m = 10000;
    double acc = 0.0;
    for (int p = 0; p < m; ++p) {
        GridPath x = gen_bm(g, 1, Seed{2100, static_cast<std::uint64_t>(p)});
        EnhancedPath e = EnhancedPath::build(x, Flavor::ito);
        acc += e.block(0, 32)(0, 0);
    }
    acc /= m;
    // Var of the single-path block is about T^2/2
    REQUIRE(std::abs(acc) < 3.0 * std::sqrt(0.5 / m));
}
