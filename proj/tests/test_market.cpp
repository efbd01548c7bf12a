#include <doctest.h>

#include <cmath>
#include <limits>

#include "kmm/errors.hpp"
#include "kmm/market.hpp"
#include "kmm/numerics.hpp"

using namespace kmm;

TEST_CASE("market price of risk") {
    CHECK(market_price_of_risk(MarketParams(0.1, 0.05, 0.2, 4, 1)) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(market_price_of_risk(MarketParams(0.05, 0.05, 0.2, 4, 1)) == 0.0);
    CHECK(market_price_of_risk(MarketParams(0.15, 0.05, 0.2, 4, 1)) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("prior drift offset") {
    const MarketParams mp(0.1, 0.05, 0.2, 4, 1);
    CHECK(nu_of_mu(mp, 0.1) == 0.0);
    CHECK(nu_of_mu(mp, 0.15) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(nu_of_mu(mp, 0.09) == doctest::Approx(0.05).epsilon(1e-13));

    // affine in mu with slope -1/sigma
    const double a = nu_of_mu(mp, 0.0), b = nu_of_mu(mp, 0.3), c = nu_of_mu(mp, 0.6);
    CHECK((b - a) / 0.3 == doctest::Approx(-5.0).epsilon(1e-13));
    CHECK((c - b) / 0.3 == doctest::Approx(-5.0).epsilon(1e-13));
}

TEST_CASE("girsanov density") {
    CHECK(girsanov_density(1.7, 0.0, 0.0) == 1.0);
    CHECK(girsanov_density(0.0, 3.2, 2.0) == 1.0);
    CHECK(girsanov_density(0.25, 0.0, 4.0) == doctest::Approx(0.8824969025845955).epsilon(1e-14));

    SUBCASE("normalization under the reference measure") {
        for (double theta : {-0.5, 0.1, 0.25, 1.0}) {
            const double t = 4.0;
            const double m = expect_standard_normal(
                [&](double z) { return girsanov_density(theta, std::sqrt(t) * z, t); }, 64);
            CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("reflection product") {
        for (double theta : {0.1, 0.25, 0.7})
            for (double w : {-2.0, 0.3, 1.5}) {
                const double prod = girsanov_density(theta, w, 3.0) * girsanov_density(-theta, w, 3.0);
                CHECK(prod == doctest::Approx(std::exp(-theta * theta * 3.0)).epsilon(1e-12));
            }
    }
}

TEST_CASE("market validation") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(MarketParams(0.1, 0.05, 0.0, 4, 1), ValidationError);
    CHECK_THROWS_AS(MarketParams(0.1, 0.05, -0.2, 4, 1), ValidationError);
    CHECK_THROWS_AS(MarketParams(0.1, 0.05, 0.2, 0, 1), ValidationError);
    CHECK_THROWS_AS(MarketParams(0.1, 0.05, 0.2, 4, 0), ValidationError);
    CHECK_THROWS_AS(MarketParams(inf, 0.05, 0.2, 4, 1), ValidationError);
    CHECK_THROWS_AS(MarketParams(0.1, std::nan(""), 0.2, 4, 1), ValidationError);
    CHECK_NOTHROW(MarketParams(-0.1, -0.02, 0.2, 4, 1));
}
