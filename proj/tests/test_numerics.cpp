#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "kmm/errors.hpp"
#include "kmm/numerics.hpp"

using namespace kmm;

TEST_CASE("gauss-hermite rule") {
    const auto one = gauss_hermite(1);
    REQUIRE(one.size() == 1);
    CHECK(one.nodes[0] == 0.0);
    CHECK(one.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

    const double moments[] = {1, 0, 1, 0, 3, 0, 15, 0, 105};
    for (int n : {8, 16, 64, 128, 256, 512}) {
        CAPTURE(n);
        const auto& g = gauss_hermite_cached(n);
        double wsum = 0.0;
        for (double w : g.weights) wsum += w;
        CHECK(std::abs(wsum - 1.0) <= 1e-14);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.nodes[i] == -g.nodes[g.size() - 1 - i]);
        for (int k = 0; k <= 8; ++k) {
            const double m = expect_on_grid(g, [k](double z) { return std::pow(z, k); });
            CHECK(std::abs(m - moments[k]) <= 1e-12 * std::max(1.0, moments[k]));
        }
    }

    const auto& g64 = gauss_hermite_cached(64);
    CHECK(expect_on_grid(g64, [](double z) { return std::exp(0.25 * 2.0 * z - 0.125); }) ==
          doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(gauss_hermite(0), ValidationError);
    CHECK_THROWS_AS(gauss_hermite(513), ValidationError);
}

TEST_CASE("expectation with node doubling") {
    CHECK(std::abs(expect_standard_normal([](double z) { return z; })) < 1e-15);
    CHECK(expect_standard_normal([](double z) { return std::exp(0.1 * z * z); }) ==
          doctest::Approx(1.0 / std::sqrt(0.8)).epsilon(1e-12));
    try {
        expect_standard_normal([](double z) { return std::exp(z * z); });
        FAIL("divergent integrand accepted");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("quadrature not converged") != std::string::npos);
    }
    CHECK_THROWS_AS(expect_standard_normal([](double z) { return z; }, 257), ValidationError);
}

TEST_CASE("gaussian exp-quadratic identity") {
    // a = 0: lognormal mean
    CHECK(gaussian_exp_quadratic(0.0, 0.7, 0.2, 0.3, 1.5) ==
          doctest::Approx(std::exp(0.2 + 0.7 * 0.3 + 1.5 * 0.49 / 2)).epsilon(1e-14));
    // centred, no constant
    {
        const double a = 0.1, b = 0.4, s2 = 2.0;
        const double expected = std::exp(s2 * b * b / (2 * (1 - 2 * a * s2))) / std::sqrt(1 - 2 * a * s2);
        CHECK(gaussian_exp_quadratic(a, b, 0.0, 0.0, s2) == doctest::Approx(expected).epsilon(1e-14));
    }
    {
        const double q = expect_standard_normal([](double z) {
            const double x = 0.3 + std::sqrt(2.0) * z;
            return std::exp(0.05 * x * x + 0.2 * x + 0.1);
        }, 64);
        CHECK(gaussian_exp_quadratic(0.05, 0.2, 0.1, 0.3, 2.0) == doctest::Approx(q).epsilon(1e-12));
        CHECK(log_gaussian_exp_quadratic(0.05, 0.2, 0.1, 0.3, 2.0) == doctest::Approx(std::log(q)).epsilon(1e-12));
    }

    SUBCASE("random admissible draws against quadrature") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            const double s2 = 0.1 + 2.9 * u(rng);
            const double a = (u(rng) - 0.6) / s2 * 0.5;  // 2 a s2 <= 0.4
            const double b = 2.0 * u(rng) - 1.0;
            const double c0 = u(rng) - 0.5;
            const double m = 2.0 * u(rng) - 1.0;
            const double q = expect_standard_normal([&](double z) {
                const double x = m + std::sqrt(s2) * z;
                return std::exp(a * x * x + b * x + c0);
            });
            CHECK(gaussian_exp_quadratic(a, b, c0, m, s2) == doctest::Approx(q).epsilon(1e-10));
        }
    }

    try {
        gaussian_exp_quadratic(0.5, 0.0, 0.0, 0.0, 1.0);
        FAIL("divergent moment accepted");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("exp-quadratic moment divergent") != std::string::npos);
    }
}

TEST_CASE("gaussian quadratic mean") {
    CHECK(gaussian_quadratic_mean(0, 0, 1.5, 3, 2) == 1.5);
    CHECK(gaussian_quadratic_mean(2, 5, 1, 0, 3) == 7.0);
    CHECK(gaussian_quadratic_mean(1, 1, 1, 2, 3) == 10.0);
}

TEST_CASE("monotone root finding") {
    CHECK(find_root_monotone([](double x) { return x - 2; }, 0, 4) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(find_root_monotone([](double x) { return std::exp(x) - 3; }, 0, 2) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
    try {
        find_root_monotone([](double x) { return x * x; }, 1, 2);
        FAIL("unbracketed root accepted");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("not bracketed") != std::string::npos);
    }

    struct Case {
        std::function<double(double)> f;
        double lo, hi, root;
    };
    const Case battery[] = {
        {[](double x) { return x * x * x - 8; }, 0, 5, 2.0},
        {[](double x) { return std::atan(x - 0.3); }, -10, 10, 0.3},
        {[](double x) { return std::log(x) - 1; }, 0.1, 10, std::exp(1.0)},
        {[](double x) { return 5 - x; }, -3, 11, 5.0},
        {[](double x) { return std::tanh(10 * (x + 1)); }, -4, 4, -1.0},
        {[](double x) { return std::sinh(x) - 1; }, -1, 3, std::asinh(1.0)},
        {[](double x) { return x + std::exp(x); }, -2, 1, -0.5671432904097838},
        {[](double x) { return std::sqrt(x) - 1e-3; }, 0, 1, 1e-6},
        {[](double x) { return 1e6 * (x - 1234.5); }, 0, 1e4, 1234.5},
        {[](double x) { return std::erf(x) - 0.5; }, -2, 2, 0.4769362762044699},
    };
    for (const auto& c : battery) {
        const double x = find_root_monotone(c.f, c.lo, c.hi, 1e-12);
        CHECK(std::abs(x - c.root) <= 2e-12 * std::max(1.0, std::abs(c.root)));
    }
}
