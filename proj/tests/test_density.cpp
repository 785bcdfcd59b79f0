#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "depthtrim/kde.hpp"
#include "depthtrim/rng.hpp"
#include "oracles.hpp"

using namespace depthtrim;

TEST_CASE("silverman bandwidths") {
    SUBCASE("formula check at d=2, n=500") {
        // unit-sd normal-ish data scaled to sd exactly 1 per coordinate
        Sample s(500, 2);
        Rng rng(1);
        for (auto& v : s.data()) v = rng.normal();
        Vec sd = s.column_stddev();
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < 2; ++j) s(i, j) /= sd[j];

        Vec h = silverman_bandwidths(s);
        double expected = std::pow(4.0 / (4.0 * 500.0), 1.0 / 6.0);  // ~0.35496
        CHECK(h[0] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(h[1] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(expected == doctest::Approx(0.3550).epsilon(1e-3));
    }
    SUBCASE("translation leaves bandwidths unchanged") {
        Sample s = oracles::uniform_sample(60, 2, 5);
        Sample t = s;
        for (std::size_t i = 0; i < t.size(); ++i) {
            t(i, 0) += 3.5;
            t(i, 1) -= 1.25;
        }
        Vec hs = silverman_bandwidths(s), ht = silverman_bandwidths(t);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(ht[j] == doctest::Approx(hs[j]).epsilon(1e-12));
    }
    SUBCASE("scale equivariance") {
        Sample s = oracles::uniform_sample(40, 2, 6);
        Sample c = s;
        for (auto& v : c.data()) v *= 2.5;
        Vec h1 = silverman_bandwidths(s), h2 = silverman_bandwidths(c);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(h2[j] == doctest::Approx(2.5 * h1[j]).epsilon(1e-12));
    }
    SUBCASE("degenerate inputs") {
        CHECK_THROWS_AS(silverman_bandwidths(Sample::from_rows({{1.0, 2.0}})),
                        std::invalid_argument);
        CHECK_THROWS_AS(silverman_bandwidths(Sample::from_rows({{1.0, 0.0}, {1.0, 1.0}})),
                        std::invalid_argument);
    }
}

TEST_CASE("kde_eval closed forms") {
    KdeModel two{Sample::from_rows({{-1.0}, {1.0}}), {1.0}};
    double phi1 = std::exp(-0.5) / std::sqrt(2 * std::numbers::pi);
    CHECK(kde_eval(two, Vec{0.0}) == doctest::Approx(phi1).epsilon(1e-12));
    CHECK(phi1 == doctest::Approx(0.24197).epsilon(1e-4));

    SUBCASE("far tail is numerically zero") {
        CHECK(kde_eval(two, Vec{21.0}) < 1e-80);  // 20 bandwidths past the data
    }
    SUBCASE("non-negative and continuous") {
        KdeModel m = fit_kde(oracles::uniform_sample(50, 2, 9));
        Vec x{0.5, 0.5};
        double f0 = kde_eval(m, x);
        CHECK(f0 >= 0.0);
        double prev_gap = 1e9;
        for (double delta : {1e-2, 1e-4, 1e-6}) {
            double gap = std::abs(kde_eval(m, Vec{0.5 + delta, 0.5}) - f0);
            CHECK(gap < prev_gap + 1e-15);
            prev_gap = gap;
        }
        CHECK(prev_gap < 1e-4);
    }
}

TEST_CASE("kde normalization via Riemann sum (d=2)") {
    KdeModel m = fit_kde(oracles::uniform_sample(30, 2, 3));
    double hx = m.bandwidths[0], hy = m.bandwidths[1];
    double lo_x = -8 * hx, hi_x = 1 + 8 * hx, lo_y = -8 * hy, hi_y = 1 + 8 * hy;
    const std::size_t res = 160;
    double wx = (hi_x - lo_x) / res, wy = (hi_y - lo_y) / res;
    double total = 0;
    for (std::size_t i = 0; i < res; ++i)
        for (std::size_t j = 0; j < res; ++j)
            total += kde_eval(m, Vec{lo_x + (i + 0.5) * wx, lo_y + (j + 0.5) * wy});
    total *= wx * wy;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("kde_sample") {
    SUBCASE("count 0 gives an empty sample") {
        KdeModel m = fit_kde(oracles::uniform_sample(10, 2, 4));
        Sample s = kde_sample(m, 0, 1);
        CHECK(s.size() == 0);
        CHECK(s.dim() == 2);
    }
    SUBCASE("sampler mean matches the data mean") {
        KdeModel m = fit_kde(oracles::uniform_sample(100, 2, 8));
        const std::size_t big = 1000000;
        Sample draws = kde_sample(m, big, 77);
        Vec mean = draws.column_mean();
        Vec target = kde_mean(m);
        Vec sd = draws.column_stddev();
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(mean[j] - target[j]) < 4 * sd[j] / 1000.0);
    }
    SUBCASE("same seed reproduces the matrix bitwise") {
        KdeModel m = fit_kde(oracles::uniform_sample(20, 3, 2));
        Sample a = kde_sample(m, 500, 123);
        Sample b = kde_sample(m, 500, 123);
        CHECK(a.data() == b.data());
        Sample c = kde_sample(m, 500, 124);
        CHECK(a.data() != c.data());
    }
}

TEST_CASE("sampler law matches the density: marginal KS test") {
    KdeModel m = fit_kde(oracles::uniform_sample(40, 2, 55));
    const std::size_t big = 100000;
    Sample draws = kde_sample(m, big, 31);
    std::vector<double> proj(big);
    for (std::size_t i = 0; i < big; ++i) proj[i] = draws(i, 0);
    std::sort(proj.begin(), proj.end());
    double ks = 0;
    for (std::size_t i = 0; i < big; ++i) {
        double cdf = kde_marginal_cdf(m, 0, proj[i]);
        double lo = static_cast<double>(i) / big, hi = static_cast<double>(i + 1) / big;
        ks = std::max({ks, std::abs(cdf - lo), std::abs(cdf - hi)});
    }
    CHECK(ks <= 0.02);
}
