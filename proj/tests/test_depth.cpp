#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "depthtrim/depth.hpp"
#include "depthtrim/kde.hpp"
#include "depthtrim/parallel.hpp"
#include "depthtrim/rng.hpp"
#include "oracles.hpp"

using namespace depthtrim;

namespace {

Sample affine_image(const Sample& s, const std::array<double, 4>& a,
                    const std::array<double, 2>& b) {
    Sample out(s.size(), 2);
    for (std::size_t i = 0; i < s.size(); ++i) {
        out(i, 0) = a[0] * s(i, 0) + a[1] * s(i, 1) + b[0];
        out(i, 1) = a[2] * s(i, 0) + a[3] * s(i, 1) + b[1];
    }
    return out;
}

std::array<double, 4> random_invertible(Rng& rng) {
    double t1 = 2 * std::numbers::pi * rng.uniform();
    double t2 = 2 * std::numbers::pi * rng.uniform();
    double s1 = 0.5 + 1.5 * rng.uniform(), s2 = 0.5 + 1.5 * rng.uniform();
    double c1 = std::cos(t1), n1 = std::sin(t1), c2 = std::cos(t2), n2 = std::sin(t2);
    // rotation * diag * rotation
    return {c1 * s1 * c2 - n1 * s2 * n2, -c1 * s1 * n2 - n1 * s2 * c2,
            n1 * s1 * c2 + c1 * s2 * n2, -n1 * s1 * n2 + c1 * s2 * c2};
}

}  // namespace

TEST_CASE("tukey depth trivial cases") {
    Sample one = Sample::from_rows({{0.0, 0.0}});
    CHECK(tukey_depth(one, Vec{0.0, 0.0}) == 1.0);

    Sample square = Sample::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    CHECK(tukey_depth(square, Vec{5.0, 5.0}) == 0.0);
    CHECK(tukey_depth(square, Vec{0.5, 0.5}) == doctest::Approx(0.5));

    CHECK_THROWS_WITH_AS(tukey_depth(Sample(0, 2), Vec{0.0, 0.0}), "empty sample",
                         std::invalid_argument);
    CHECK_THROWS_AS(tukey_depth(square, Vec{0.0}), std::invalid_argument);
}

TEST_CASE("tukey depth d=1 exact") {
    Sample s = Sample::from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
    CHECK(tukey_depth(s, Vec{0.0}) == doctest::Approx(0.25));
    CHECK(tukey_depth(s, Vec{1.5}) == doctest::Approx(0.5));
    CHECK(tukey_depth(s, Vec{9.0}) == 0.0);
}

TEST_CASE("tukey sweep equals brute force over critical directions") {
    Rng rng(2024);
    for (int instance = 0; instance < 30; ++instance) {
        Sample s = oracles::uniform_sample(10 + instance, 2, 1000 + instance);
        for (int q = 0; q < 5; ++q) {
            std::array<double, 2> x{rng.uniform(), rng.uniform()};
            double sweep = tukey_depth(s, Vec{x[0], x[1]});
            double brute = oracles::tukey_brute_force_2d(s, x);
            // exact count equality
            CHECK(std::lround(sweep * s.size()) == std::lround(brute * s.size()));
        }
        // query at a sample point also agrees
        std::array<double, 2> on_point{s(0, 0), s(0, 1)};
        CHECK(std::lround(tukey_depth(s, Vec{on_point[0], on_point[1]}) * s.size()) ==
              std::lround(oracles::tukey_brute_force_2d(s, on_point) * s.size()));
    }
}

TEST_CASE("tukey MC within 0.02 of exact at 5000 directions") {
    double worst = 0;
    for (int instance = 0; instance < 20; ++instance) {
        Sample s = oracles::uniform_sample(40, 2, 7000 + instance);
        Vec x{0.2 + 0.6 * (instance / 20.0), 0.5};
        double exact = tukey_depth(s, x);
        double mc = tukey_depth_mc(s, x, 5000, 99 + instance);
        CHECK(mc >= exact - 1e-12);  // sampled minimum cannot undershoot
        worst = std::max(worst, std::abs(mc - exact));
    }
    CHECK(worst <= 0.02);
}

TEST_CASE("simplicial depth trivial cases") {
    Sample tri = Sample::from_rows({{0, 0}, {2, 0}, {0, 2}});
    CHECK(simplicial_depth(tri, Vec{0.5, 0.5}) == 1.0);
    CHECK(simplicial_depth(tri, Vec{5.0, 5.0}) == 0.0);
    CHECK_THROWS_WITH_AS(simplicial_depth(Sample::from_rows({{0, 0}, {1, 1}}), Vec{0.0, 0.0}),
                         "insufficient points", std::invalid_argument);
}

TEST_CASE("simplicial enumeration equals independent oracle (n = 6)") {
    Rng rng(11);
    Sample s = oracles::uniform_sample(6, 2, 42);
    for (int q = 0; q < 10; ++q) {
        std::array<double, 2> x{rng.uniform() * 1.2 - 0.1, rng.uniform() * 1.2 - 0.1};
        double mine = simplicial_depth(s, Vec{x[0], x[1]});
        double oracle = oracles::simplicial_enumeration_2d(s, x);
        CHECK(mine == doctest::Approx(oracle).epsilon(1e-14));
    }
}

TEST_CASE("simplicial counting path equals enumeration (n = 50)") {
    Sample s = oracles::uniform_sample(50, 2, 4321);
    Rng rng(5);
    for (int q = 0; q < 6; ++q) {
        std::array<double, 2> x{rng.uniform(), rng.uniform()};
        double counting = simplicial_depth(s, Vec{x[0], x[1]});  // n > exact_threshold
        double enumeration = oracles::simplicial_enumeration_2d(s, x);
        CHECK(counting == doctest::Approx(enumeration).epsilon(1e-13));
    }
    // query exactly at a data point
    Vec x0{s(3, 0), s(3, 1)};
    CHECK(simplicial_depth(s, x0) ==
          doctest::Approx(oracles::simplicial_enumeration_2d(s, {x0[0], x0[1]}))
              .epsilon(1e-13));
}

TEST_CASE("simplicial degenerate simplices are skipped") {
    // three collinear points plus one off the line: 1 of 4 triangles degenerate
    Sample s = Sample::from_rows({{0, 0}, {1, 0}, {2, 0}, {0, 1}});
    double d = simplicial_depth(s, Vec{0.5, 0.25});
    CHECK(d == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("simplicial d=1 paths agree") {
    Sample s = Sample::from_rows({{0.0}, {0.3}, {0.7}, {1.0}, {1.4}});
    DepthParams low_threshold;
    low_threshold.exact_threshold = 2;  // force the counting path
    double counting = simplicial_depth(s, Vec{0.5}, low_threshold);
    double enumeration = simplicial_depth(s, Vec{0.5});  // n=5 <= 12, enumerates
    CHECK(counting == doctest::Approx(enumeration));
    CHECK(enumeration == doctest::Approx(6.0 / 10.0));
}

TEST_CASE("spatial depth formula") {
    Sample pair = Sample::from_rows({{1, 0}, {-1, 0}});
    CHECK(spatial_depth(pair, Vec{0.0, 0.0}) == doctest::Approx(1.0));
    Sample single = Sample::from_rows({{1, 0}});
    CHECK(spatial_depth(single, Vec{0.0, 0.0}) == doctest::Approx(0.0));

    Sample s = oracles::uniform_sample(10, 2, 77);
    Vec x{0.4, 0.6};
    CHECK(spatial_depth(s, x) == doctest::Approx(oracles::spatial_direct(s, x)).epsilon(1e-14));
}

TEST_CASE("projection depth in d=1 is exact") {
    Sample s = Sample::from_rows({{-1.0}, {0.0}, {1.0}});
    CHECK(projection_depth(s, Vec{0.0}) == doctest::Approx(1.0));
    CHECK(projection_depth(s, Vec{1.0}) == doctest::Approx(0.5));
}

TEST_CASE("projection depth MC vs dense angular grid") {
    Sample s = oracles::uniform_sample(20, 2, 99);
    DepthParams params;
    params.direction_count = 2000;
    params.seed = 7;
    Rng rng(3);
    for (int q = 0; q < 5; ++q) {
        std::array<double, 2> x{rng.uniform() * 2 - 0.5, rng.uniform() * 2 - 0.5};
        double mc = projection_depth(s, Vec{x[0], x[1]}, params);
        double dense = oracles::projection_dense_2d(s, x, 100000);
        CHECK(mc >= dense - 0.01);  // fewer directions -> smaller outlyingness
        CHECK(mc <= 1.0);
    }
}

TEST_CASE("projection depth degenerate sample") {
    Sample s = Sample::from_rows({{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}});
    CHECK_THROWS_WITH_AS(projection_depth(s, Vec{1.0, 1.0}), "degenerate projections",
                         std::runtime_error);
}

TEST_CASE("smoothed depth") {
    Sample cross = Sample::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    KdeModel kde{cross, {0.05, 0.05}};

    SUBCASE("symmetric sample gives near-unit spatial depth at the centre") {
        double d = smoothed_depth(DepthKind::spatial, kde, Vec{0.0, 0.0}, 10000, 42);
        CHECK(d > 0.95);
        // cross-check against direct evaluation on the surrogate
        Sample surrogate = kde_sample(kde, 10000, 42);
        CHECK(d == spatial_depth(surrogate, Vec{0.0, 0.0}));
    }
    SUBCASE("m = 1 reduces to the singleton empirical depth") {
        Sample surrogate = kde_sample(kde, 1, 9);
        double d = smoothed_depth(DepthKind::tukey, kde, Vec{0.0, 0.0}, 1, 9);
        CHECK(d == tukey_depth(surrogate, Vec{0.0, 0.0}));
    }
    SUBCASE("determinism") {
        double d1 = smoothed_depth(DepthKind::simplicial, kde, Vec{0.1, 0.2}, 500, 31);
        double d2 = smoothed_depth(DepthKind::simplicial, kde, Vec{0.1, 0.2}, 500, 31);
        CHECK(d1 == d2);
    }
}

TEST_CASE("depth evaluator matches free functions and caches projections") {
    Sample s = oracles::uniform_sample(30, 2, 17);
    DepthParams params;
    params.seed = 4;
    auto ev_t = DepthEvaluator::empirical(DepthKind::tukey, s, params);
    auto ev_p = DepthEvaluator::empirical(DepthKind::projection, s, params);
    Vec x{0.3, 0.7};
    CHECK(ev_t(x) == tukey_depth(s, x, params));
    CHECK(ev_p(x) == projection_depth(s, x, params));
    CHECK(ev_t.upper_bound() == 1.0);
    CHECK(ev_t.dim() == 2);
}

TEST_CASE("depth_field") {
    SUBCASE("1x1 grid evaluates once at the box centre") {
        auto ev = DepthEvaluator::analytic(
            [](std::span<const double> x) { return x[0] + x[1]; });
        ScalarGrid g = depth_field(ev, GridSpec{{{0, 0}, {2, 2}}, {1, 1}});
        REQUIRE(g.values.size() == 1);
        CHECK(g.values[0] == doctest::Approx(2.0));
    }
    SUBCASE("constant evaluator gives a constant field") {
        auto ev = DepthEvaluator::analytic([](std::span<const double>) { return 0.25; });
        ScalarGrid g = depth_field(ev, GridSpec{{{0, 0}, {1, 1}}, {5, 7}});
        for (double v : g.values) CHECK(v == 0.25);
    }
    SUBCASE("field argmax matches a direct scan") {
        Sample s = oracles::uniform_sample(25, 2, 8);
        auto ev = DepthEvaluator::empirical(DepthKind::spatial, s);
        GridSpec grid{{{0, 0}, {1, 1}}, {21, 21}};
        ScalarGrid g = depth_field(ev, grid);
        std::size_t best = 0;
        for (std::size_t i = 1; i < g.values.size(); ++i)
            if (g.values[i] > g.values[best]) best = i;
        double direct_best = -1;
        std::size_t direct_idx = 0;
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            double v = ev(grid.node(i));
            if (v > direct_best) {
                direct_best = v;
                direct_idx = i;
            }
        }
        CHECK(best == direct_idx);
    }
}

TEST_CASE("depth values stay in [0, 1]") {
    Rng rng(6);
    DepthParams params;
    params.direction_count = 200;
    params.subset_count = 300;
    for (int instance = 0; instance < 10; ++instance) {
        Sample s = oracles::uniform_sample(15, 2, 500 + instance);
        Vec x{rng.uniform() * 3 - 1, rng.uniform() * 3 - 1};
        for (double v :
             {tukey_depth(s, x, params), simplicial_depth(s, x, params),
              spatial_depth(s, x), projection_depth(s, x, params)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("vanishing at infinity") {
    Sample s = oracles::uniform_sample(30, 2, 12345);
    double radius = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        radius = std::max(radius, std::hypot(s(i, 0), s(i, 1)));
    Vec far{1e6 * radius, 1e6 * radius};
    CHECK(tukey_depth(s, far) == 0.0);
    CHECK(simplicial_depth(s, far) == 0.0);
    CHECK(projection_depth(s, far) <= 1e-3);
}

TEST_CASE("affine invariance of the count-based depths") {
    Rng rng(2718);
    Sample s = oracles::uniform_sample(10, 2, 31);
    Vec q{0.45, 0.55};
    for (int trial = 0; trial < 8; ++trial) {
        auto a = random_invertible(rng);
        std::array<double, 2> b{rng.uniform() * 4 - 2, rng.uniform() * 4 - 2};
        Sample s2 = affine_image(s, a, b);
        Vec q2{a[0] * q[0] + a[1] * q[1] + b[0], a[2] * q[0] + a[3] * q[1] + b[1]};
        CHECK(tukey_depth(s2, q2) == tukey_depth(s, q));
        CHECK(simplicial_depth(s2, q2) == simplicial_depth(s, q));
    }
}

TEST_CASE("rigid motion invariance of spatial depth") {
    Rng rng(99);
    Sample s = oracles::uniform_sample(40, 2, 3);
    Vec q{0.3, 0.8};
    for (int trial = 0; trial < 5; ++trial) {
        double t = 2 * std::numbers::pi * rng.uniform();
        std::array<double, 4> rot{std::cos(t), -std::sin(t), std::sin(t), std::cos(t)};
        std::array<double, 2> b{rng.uniform() * 10 - 5, rng.uniform() * 10 - 5};
        Sample s2 = affine_image(s, rot, b);
        Vec q2{rot[0] * q[0] + rot[1] * q[1] + b[0], rot[2] * q[0] + rot[3] * q[1] + b[1]};
        CHECK(spatial_depth(s2, q2) == doctest::Approx(spatial_depth(s, q)).epsilon(1e-12));
    }
}

TEST_CASE("seeded depths are identical across thread counts") {
    Sample s = oracles::uniform_sample(60, 3, 21);
    Vec x{0.5, 0.5, 0.5};
    DepthParams params;
    params.seed = 1234;

    double t1 = tukey_depth(s, x, params);
    double m1 = simplicial_depth_mc(s, x, 400, 9);
    auto ev = DepthEvaluator::empirical(DepthKind::spatial,
                                        oracles::uniform_sample(50, 2, 66));
    GridSpec grid{{{0, 0}, {1, 1}}, {17, 17}};

    set_max_threads(1);
    ScalarGrid f1 = depth_field(ev, grid);
    double t1_again = tukey_depth(s, x, params);
    set_max_threads(4);
    ScalarGrid f4 = depth_field(ev, grid);
    set_max_threads(0);

    CHECK(t1 == t1_again);
    CHECK(m1 == simplicial_depth_mc(s, x, 400, 9));
    CHECK(f1.values == f4.values);
}
