#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "depthtrim/simulation.hpp"
#include "depthtrim/trimmed_mean.hpp"
#include "oracles.hpp"

using namespace depthtrim;

namespace {

// Radial depth stub centred in the unit square: level a keeps the disk of
// radius 1/a - 1.
DepthEvaluator radial_stub(double cx, double cy) {
    return DepthEvaluator::analytic([cx, cy](std::span<const double> x) {
        return 1.0 / (1.0 + std::hypot(x[0] - cx, x[1] - cy));
    });
}

// Independent polar quadrature of the Beta(2,2)^2 mass inside a disk.
double disk_mass_polar(double cx, double cy, double radius) {
    const std::size_t nr = 400, nt = 512;
    double total = 0;
    for (std::size_t i = 0; i < nr; ++i) {
        double rho = (static_cast<double>(i) + 0.5) * radius / nr;
        for (std::size_t j = 0; j < nt; ++j) {
            double theta = 2 * std::numbers::pi * (static_cast<double>(j) + 0.5) / nt;
            double fx = cx + rho * std::cos(theta), fy = cy + rho * std::sin(theta);
            total += beta22_density(Vec{fx, fy}) * rho;
        }
    }
    return total * (radius / nr) * (2 * std::numbers::pi / nt);
}

struct Fixture {
    Sample data;
    KdeModel kde;
    DepthEvaluator depth;

    explicit Fixture(std::uint64_t seed, std::size_t n = 300,
                     std::size_t surrogate = 2000)
        : data(beta22_sample(n, seed)),
          kde(fit_kde(data)),
          depth(DepthEvaluator::smoothed(DepthKind::spatial, kde, surrogate,
                                         Rng::mix(seed, 2))) {}
};

}  // namespace

TEST_CASE("mc limits in a") {
    Fixture fx(101);

    SUBCASE("a below any achievable depth keeps everything") {
        auto r = trimmed_mean_mc(fx.kde, fx.depth, 1e-9, 20000, 7);
        CHECK(r.trimmed_mass == 1.0);
        Vec mean = fx.data.column_mean();
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(r.vector[j] - mean[j]) <= 3 * (*r.standard_error)[j] + 1e-3);
    }
    SUBCASE("a above the depth range empties the region") {
        auto r = trimmed_mean_mc(fx.kde, fx.depth, 2.0, 5000, 7);
        CHECK(r.trimmed_mass == 0.0);
        CHECK(r.vector == Vec{0.0, 0.0});
        CHECK(!r.normalized_vector);
    }
    SUBCASE("mass is non-increasing in a") {
        double prev = 2.0;
        for (double a : {0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
            auto r = trimmed_mean_mc(fx.kde, fx.depth, a, 4000, 55);
            CHECK(r.trimmed_mass <= prev);
            prev = r.trimmed_mass;
        }
    }
}

TEST_CASE("symmetric population centres the normalized estimate") {
    Fixture fx(2029, 800, 3000);
    auto r = trimmed_mean_mc(fx.kde, fx.depth, 0.3, 30000, 13);
    REQUIRE(r.normalized_vector);
    CHECK((*r.normalized_vector)[0] == doctest::Approx(0.5).epsilon(0.05));
    CHECK((*r.normalized_vector)[1] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("grid quadrature against the polar oracle") {
    const double a = 1.0 / 1.2;  // disk of radius 0.2 for the radial stub
    auto depth = radial_stub(0.5, 0.5);
    Box box{{0, 0}, {1, 1}};
    auto r = trimmed_mean_grid([](std::span<const double> x) { return beta22_density(x); },
                               depth, a, box, 256);
    double oracle_mass = disk_mass_polar(0.5, 0.5, 0.2);
    CHECK(r.trimmed_mass == doctest::Approx(oracle_mass).epsilon(2e-3));
    // symmetry: vector = mass * (0.5, 0.5)
    CHECK(r.vector[0] == doctest::Approx(r.trimmed_mass * 0.5).epsilon(1e-3));
    CHECK(r.vector[1] == doctest::Approx(r.trimmed_mass * 0.5).epsilon(1e-3));
    CHECK_FALSE(r.truncated);

    SUBCASE("a above the range gives zero") {
        auto z = trimmed_mean_grid(
            [](std::span<const double> x) { return beta22_density(x); }, depth, 2.0, box,
            64);
        CHECK(z.trimmed_mass == 0.0);
        CHECK(z.vector == Vec{0.0, 0.0});
    }
    SUBCASE("doubling the resolution is self-consistent") {
        auto r2 = trimmed_mean_grid(
            [](std::span<const double> x) { return beta22_density(x); }, depth, a, box,
            512);
        CHECK(std::abs(r2.trimmed_mass - r.trimmed_mass) < 1e-3);
        CHECK(std::abs(r2.vector[0] - r.vector[0]) < 1e-3);
    }
    SUBCASE("a box cutting the region flags truncation") {
        Box tight{{0.45, 0.45}, {0.6, 0.6}};
        auto t = trimmed_mean_grid(
            [](std::span<const double> x) { return beta22_density(x); }, depth, a, tight,
            32);
        CHECK(t.truncated);
    }
}

TEST_CASE("mc and grid agree within tolerance") {
    Fixture fx(33);
    const double a = 0.3;
    auto mc = trimmed_mean_mc(fx.kde, fx.depth, a, 30000, 5);
    Box box{{-0.4, -0.4}, {1.4, 1.4}};
    auto grid = trimmed_mean_grid(
        [&](std::span<const double> x) { return kde_eval(fx.kde, x); }, fx.depth, a, box,
        128);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(std::abs(mc.vector[j] - grid.vector[j]) <=
              3 * (*mc.standard_error)[j] + 2e-3);
    CHECK(std::abs(mc.trimmed_mass - grid.trimmed_mass) < 0.02);
}

TEST_CASE("translation equivariance of the normalized estimate") {
    const std::uint64_t seed = 909;
    Sample data = beta22_sample(400, seed);
    Sample shifted = data;
    const Vec b{0.7, -0.3};
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        shifted(i, 0) += b[0];
        shifted(i, 1) += b[1];
    }
    auto run = [&](const Sample& s) {
        KdeModel kde = fit_kde(s);
        auto depth = DepthEvaluator::smoothed(DepthKind::spatial, kde, 2000, 42);
        return trimmed_mean_mc(kde, depth, 0.35, 20000, 11);
    };
    auto r0 = run(data), r1 = run(shifted);
    REQUIRE(r0.normalized_vector);
    REQUIRE(r1.normalized_vector);
    for (std::size_t j = 0; j < 2; ++j) {
        double se = 3 * (*r0.standard_error)[j] / r0.trimmed_mass + 1e-6;
        CHECK(std::abs((*r1.normalized_vector)[j] - (*r0.normalized_vector)[j] - b[j]) <=
              se);
    }
}

TEST_CASE("indicator rule flag only moves measure-zero sets") {
    Fixture fx(71);
    auto ge = trimmed_mean_mc(fx.kde, fx.depth, 0.25, 5000, 3,
                              IndicatorRule::greater_equal);
    auto gt = trimmed_mean_mc(fx.kde, fx.depth, 0.25, 5000, 3,
                              IndicatorRule::strictly_greater);
    CHECK(ge.vector == gt.vector);
    CHECK(ge.trimmed_mass == gt.trimmed_mass);
}

TEST_CASE("population reference") {
    SimConfig config;
    config.depth = DepthKind::spatial;
    config.a = 0.3;

    PopulationReference ref = population_reference(config);
    REQUIRE(ref.mass > 0.1);

    SUBCASE("symmetric population and depth centre the reference") {
        CHECK(ref.vector[0] / ref.mass == doctest::Approx(0.5).epsilon(5e-3));
        CHECK(ref.vector[1] / ref.mass == doctest::Approx(0.5).epsilon(5e-3));
    }
    SUBCASE("a above the depth range gives the zero vector") {
        SimConfig high = config;
        high.a = 2.0;  // the op handles levels beyond the depth range
        PopulationReference zero =
            detail::population_reference_on(high, beta22_sample(20000, 1), 1);
        CHECK(zero.mass == 0.0);
        CHECK(zero.vector == Vec{0.0, 0.0});
    }
    SUBCASE("two independent reference seeds agree") {
        PopulationReference other = population_reference(config, "", kReferenceSeed + 17);
        CHECK(std::abs(other.vector[0] - ref.vector[0]) < 5e-3);
        CHECK(std::abs(other.vector[1] - ref.vector[1]) < 5e-3);
        CHECK(std::abs(other.mass - ref.mass) < 5e-3);
    }
    SUBCASE("reflection cross-check") {
        Sample mega = beta22_sample(kReferenceSampleSize, kReferenceSeed);
        for (double& v : mega.data()) v = 1.0 - v;
        PopulationReference mirrored =
            detail::population_reference_on(config, std::move(mega), kReferenceSeed);
        CHECK(mirrored.mass == doctest::Approx(ref.mass).epsilon(1e-6));
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(mirrored.vector[j] ==
                  doctest::Approx(ref.mass - ref.vector[j]).epsilon(1e-6));
    }
    SUBCASE("cache round trip") {
        auto dir = std::filesystem::temp_directory_path() / "depthtrim_ref_cache";
        std::filesystem::remove_all(dir);
        PopulationReference first = population_reference(config, dir.string());
        CHECK(std::filesystem::exists(dir / ("ref_" + first.config_hash + ".json")));
        PopulationReference second = population_reference(config, dir.string());
        CHECK(first.vector == second.vector);
        CHECK(first.mass == second.mass);
        CHECK(first.vector == ref.vector);
        std::filesystem::remove_all(dir);
    }
}
