#include "kmm/market.hpp"

#include <cmath>
#include <string>

#include "kmm/errors.hpp"

namespace kmm {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("market: ") + what);
}

}  // namespace

MarketParams::MarketParams(double mu0, double r, double sigma, double horizon, double x0)
    : mu0_(mu0), r_(r), sigma_(sigma), horizon_(horizon), x0_(x0) {
    require(std::isfinite(mu0), "mu0 must be finite");
    require(std::isfinite(r), "r must be finite");
    require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    require(std::isfinite(horizon) && horizon > 0.0, "horizon T must be positive");
    require(std::isfinite(x0) && x0 > 0.0, "initial wealth x0 must be positive");
}

double market_price_of_risk(const MarketParams& mp) noexcept {
    return (mp.mu0() - mp.r()) / mp.sigma();
}

double nu_of_mu(const MarketParams& mp, double mu) noexcept {
    return (mp.mu0() - mu) / mp.sigma();
}

double girsanov_density(double theta, double w, double t) noexcept {
    return std::exp(-theta * w - 0.5 * theta * theta * t);
}

}  // namespace kmm
