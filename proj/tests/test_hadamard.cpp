#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "depthtrim/hadamard.hpp"
#include "depthtrim/io.hpp"

using namespace depthtrim;

namespace {

const Vec kOrigin{0.0, 0.0};
const Box kBox{{-3.0, -3.0}, {3.0, 3.0}};
constexpr std::size_t kRes = 300;

DepthEvaluator radial_depth() {
    return DepthEvaluator::analytic(
        [](std::span<const double> x) { return 1.0 / (1.0 + std::hypot(x[0], x[1])); });
}

double gauss2(std::span<const double> x, double sx, double sy) {
    double dx = x[0] - sx, dy = x[1] - sy;
    return std::exp(-0.5 * (dx * dx + dy * dy)) / (2 * std::numbers::pi);
}

ScalarField standard_gaussian() {
    return [](std::span<const double> x) { return gauss2(x, 0, 0); };
}

ScalarField shifted_gaussian(double sx = 0.3, double sy = 0.2) {
    return [sx, sy](std::span<const double> x) { return gauss2(x, sx, sy); };
}

ScalarField zero_field() {
    return [](std::span<const double>) { return 0.0; };
}

// Independent polar quadrature of t * g(t) over the disk of radius rho.
Vec disk_moment_polar(const ScalarField& g, double rho) {
    const std::size_t nr = 600, nt = 720;
    Vec out(2, 0.0);
    for (std::size_t i = 0; i < nr; ++i) {
        double r = (static_cast<double>(i) + 0.5) * rho / nr;
        for (std::size_t j = 0; j < nt; ++j) {
            double t = 2 * std::numbers::pi * (static_cast<double>(j) + 0.5) / nt;
            Vec x{r * std::cos(t), r * std::sin(t)};
            double w = g(x) * r;
            out[0] += x[0] * w;
            out[1] += x[1] * w;
        }
    }
    double scale = (rho / nr) * (2 * std::numbers::pi / nt);
    out[0] *= scale;
    out[1] *= scale;
    return out;
}

double norm2(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("functional_T") {
    auto depth = radial_depth();

    SUBCASE("zero density gives the zero vector") {
        Vec v = functional_T(depth, zero_field(), 0.5, kBox, kRes);
        CHECK(v == Vec{0.0, 0.0});
    }
    SUBCASE("radial depth and centred density integrate to zero by symmetry") {
        Vec v = functional_T(depth, standard_gaussian(), 0.5, kBox, kRes);
        CHECK(std::abs(v[0]) < 1e-12);  // symmetric grid cancels exactly
        CHECK(std::abs(v[1]) < 1e-12);
    }
    SUBCASE("shifted density matches the polar quadrature oracle") {
        Vec v = functional_T(depth, shifted_gaussian(), 0.5, kBox, 600);
        Vec oracle = disk_moment_polar(shifted_gaussian(), 1.0);
        CHECK(std::abs(v[0] - oracle[0]) < 1e-3);
        CHECK(std::abs(v[1] - oracle[1]) < 1e-3);
    }
}

TEST_CASE("delta_epsilon") {
    auto depth = radial_depth();
    auto f = standard_gaussian();

    SUBCASE("zero direction gives exactly zero") {
        Vec v = delta_epsilon(depth, f, zero_field(), 0.5, 0.05, kBox, kRes);
        CHECK(v == Vec{0.0, 0.0});
    }
    SUBCASE("constant direction cancels by symmetry for every eps") {
        auto one = [](std::span<const double>) { return 1.0; };
        for (double eps : {0.05, 0.025, 0.0125}) {
            Vec v = delta_epsilon(depth, f, one, 0.5, eps, kBox, kRes);
            CHECK(std::abs(v[0]) < 1e-12);
            CHECK(std::abs(v[1]) < 1e-12);
        }
    }
    SUBCASE("x1 bump converges to the surface limit, monotonically in eps") {
        auto bump = [](std::span<const double> x) {
            return x[0] * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1]));
        };
        Vec limit = delta_limit(depth, f, bump, kOrigin, 0.5, 128);
        double prev = 1e300;
        for (double eps : {0.1, 0.05, 0.025}) {
            Vec v = delta_epsilon(depth, f, bump, 0.5, eps, kBox, 600);
            Vec diff{v[0] - limit[0], v[1] - limit[1]};
            double err = norm2(diff);
            CHECK(err <= prev + 1e-9);
            prev = err;
        }
        CHECK(prev < 5e-3);
    }
    SUBCASE("band violation is an error") {
        auto big = [](std::span<const double>) { return 5.0; };
        CHECK_THROWS_WITH_AS(delta_epsilon(depth, f, big, 0.5, 0.05, kBox, kRes),
                             doctest::Contains("band exceeded"), std::runtime_error);
    }
}

TEST_CASE("delta_limit") {
    auto depth = radial_depth();
    auto f = standard_gaussian();

    SUBCASE("zero direction") {
        Vec v = delta_limit(depth, f, zero_field(), kOrigin, 0.5, 64);
        CHECK(v == Vec{0.0, 0.0});
    }
    SUBCASE("constant direction cancels by symmetry") {
        auto c = [](std::span<const double>) { return 0.7; };
        Vec v = delta_limit(depth, f, c, kOrigin, 0.5, 64);
        CHECK(std::abs(v[0]) < 1e-9);
        CHECK(std::abs(v[1]) < 1e-9);
    }
    SUBCASE("closed form for Y(x) = x1 at a = 0.5") {
        // radius rho = 1, |det| = 4, value = rho^3 e^{-rho^2/2} / (2 a^2) e1
        auto y1 = [](std::span<const double> x) { return x[0]; };
        Vec v = delta_limit(depth, f, y1, kOrigin, 0.5, 256);
        double expected = 2.0 * std::exp(-0.5);  // 1.213061...
        CHECK(v[0] == doctest::Approx(expected).epsilon(1e-6));
        CHECK(std::abs(v[1]) < 1e-9);
    }
}

TEST_CASE("nabla_epsilon") {
    auto depth = radial_depth();
    auto g = shifted_gaussian();
    auto y1 = [](std::span<const double> x) { return x[0]; };

    SUBCASE("zero density") {
        Vec v = nabla_epsilon(depth, zero_field(), y1, 0.5, 0.01, kBox, kRes);
        CHECK(v == Vec{0.0, 0.0});
    }
    SUBCASE("eps = 0 is the volume term") {
        Vec v0 = nabla_epsilon(depth, g, y1, 0.5, 0.0, kBox, kRes);
        PerturbationPair g_only{zero_field(), g, 0.0};
        Vec volume_only =
            hadamard_derivative(depth, standard_gaussian(), kOrigin, 0.5, g_only, 64,
                                kBox, kRes);
        CHECK(v0[0] == doctest::Approx(volume_only[0]).epsilon(1e-12));
        CHECK(v0[1] == doctest::Approx(volume_only[1]).epsilon(1e-12));
    }
    SUBCASE("eps sweep shrinks the gap to the limit") {
        Vec v0 = nabla_epsilon(depth, g, y1, 0.5, 0.0, kBox, 600);
        double prev = 1e300;
        for (double eps : {0.1, 0.05, 0.025}) {
            Vec v = nabla_epsilon(depth, g, y1, 0.5, eps, kBox, 600);
            double err = norm2(Vec{v[0] - v0[0], v[1] - v0[1]});
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("hadamard_derivative composition and linearity") {
    auto depth = radial_depth();
    auto f = standard_gaussian();
    auto y1 = [](std::span<const double> x) { return x[0]; };
    auto g = shifted_gaussian();

    SUBCASE("zero pair") {
        PerturbationPair none{zero_field(), zero_field(), 0.0};
        Vec v = hadamard_derivative(depth, f, kOrigin, 0.5, none, 64, kBox, kRes);
        CHECK(v == Vec{0.0, 0.0});
    }
    SUBCASE("density-only pair equals the volume term") {
        PerturbationPair g_only{zero_field(), g, 0.0};
        Vec v = hadamard_derivative(depth, f, kOrigin, 0.5, g_only, 64, kBox, kRes);
        Vec volume = nabla_epsilon(depth, g, zero_field(), 0.5, 0.0, kBox, kRes);
        CHECK(v[0] == doctest::Approx(volume[0]).epsilon(1e-12));
        CHECK(v[1] == doctest::Approx(volume[1]).epsilon(1e-12));
    }
    SUBCASE("depth-only pair equals the surface term") {
        PerturbationPair y_only{y1, zero_field(), 3.0};
        Vec v = hadamard_derivative(depth, f, kOrigin, 0.5, y_only, 128, kBox, kRes);
        Vec surface = delta_limit(depth, f, y1, kOrigin, 0.5, 128);
        CHECK(v[0] == doctest::Approx(surface[0]).epsilon(1e-12));
        CHECK(v[1] == doctest::Approx(surface[1]).epsilon(1e-12));
    }
    SUBCASE("additivity and homogeneity") {
        const double alpha = 1.7;
        PerturbationPair p1{y1, g, 3.0};
        PerturbationPair p2{[](std::span<const double> x) { return x[1] * 0.5; },
                            standard_gaussian(), 1.5};
        PerturbationPair combo{
            [&](std::span<const double> x) { return alpha * p1.y(x) + p2.y(x); },
            [&](std::span<const double> x) { return alpha * p1.g(x) + p2.g(x); },
            alpha * 3.0 + 1.5};
        Vec va = hadamard_derivative(depth, f, kOrigin, 0.5, p1, 128, kBox, kRes);
        Vec vb = hadamard_derivative(depth, f, kOrigin, 0.5, p2, 128, kBox, kRes);
        Vec vc = hadamard_derivative(depth, f, kOrigin, 0.5, combo, 128, kBox, kRes);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(vc[j] == doctest::Approx(alpha * va[j] + vb[j]).epsilon(1e-9));
    }
}

TEST_CASE("fd_convergence_check") {
    auto depth = radial_depth();
    auto f = standard_gaussian();
    const Band wide{0.05, 0.95};

    SUBCASE("zero pair has zero errors") {
        PerturbationPair none{zero_field(), zero_field(), 0.0};
        auto rows = fd_convergence_check(depth, f, kOrigin, 0.5, none, {0.1, 0.05}, kBox,
                                         kRes, 64, {}, wide);
        for (const auto& r : rows) {
            CHECK(r.quotient == Vec{0.0, 0.0});
            CHECK(r.error == 0.0);
        }
    }
    SUBCASE("density-only pair is affine: quotients agree for every eps") {
        PerturbationPair g_only{zero_field(), shifted_gaussian(), 0.0};
        auto rows = fd_convergence_check(depth, f, kOrigin, 0.5, g_only,
                                         {0.1, 0.05, 0.025}, kBox, kRes, 64, {}, wide);
        REQUIRE(rows.size() == 3);
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(rows[0].quotient[j] == doctest::Approx(rows[1].quotient[j]).epsilon(1e-12));
            CHECK(rows[1].quotient[j] == doctest::Approx(rows[2].quotient[j]).epsilon(1e-12));
        }
    }
    SUBCASE("radial fixture: decreasing errors, extrapolated quotient hits T'") {
        // a = 0.6 on a [-2,2] box keeps {D + eps*x1 > a} free of spurious
        // far-field components at eps = 0.1; the far-shifted g keeps the
        // cross term small. The quotient error is O(eps^2) (the eps^1 term
        // cancels by symmetry), so the eps->0 limit is read off by
        // Richardson extrapolation on the two smallest steps.
        const double a = 0.6;
        const Box box{{-2.0, -2.0}, {2.0, 2.0}};
        const Band band{0.3, 0.85};
        SurfaceParams sp;
        sp.r_max = 8.0;
        PerturbationPair pair{[](std::span<const double> x) { return x[0]; },
                              shifted_gaussian(2.0, 1.5), 2.0};
        auto rows = fd_convergence_check(depth, f, kOrigin, a, pair, {0.1, 0.05, 0.025},
                                         box, 600, 256, sp, band);
        REQUIRE(rows.size() == 3);
        CHECK(rows[1].error <= rows[0].error);
        CHECK(rows[2].error <= rows[1].error);

        Vec derivative =
            hadamard_derivative(depth, f, kOrigin, a, pair, 256, box, 600, sp);
        double scale = norm2(derivative);
        Vec extrapolated(2);
        for (std::size_t j = 0; j < 2; ++j)
            extrapolated[j] = (4.0 * rows[2].quotient[j] - rows[1].quotient[j]) / 3.0;
        double err = norm2(Vec{extrapolated[0] - derivative[0],
                               extrapolated[1] - derivative[1]});
        CHECK(err <= 5e-3 * scale);
    }
    SUBCASE("band violations are rejected") {
        PerturbationPair pair{[](std::span<const double> x) { return x[0]; },
                              zero_field(), 3.0};
        CHECK_THROWS_WITH_AS(fd_convergence_check(depth, f, kOrigin, 0.5, pair, {0.1},
                                                  kBox, kRes, 64),
                             doctest::Contains("band exceeded"), std::runtime_error);
    }
    SUBCASE("csv export") {
        PerturbationPair pair{zero_field(), shifted_gaussian(), 0.0};
        auto rows =
            fd_convergence_check(depth, f, kOrigin, 0.5, pair, {0.1, 0.05}, kBox, kRes,
                                 32, {}, wide);
        auto path = std::filesystem::temp_directory_path() / "fd_table_test.csv";
        write_fd_table_csv(path.string(), rows);
        std::string text = read_text_file(path.string());
        CHECK(text.rfind("eps,quotient_x,quotient_y,err\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 rows
        std::filesystem::remove(path);
    }
}
