#pragma once

namespace kmm {

/**
 * @brief Black-Scholes market primitives, validated at construction.
 *
 * All rates are annualized. The Brownian coordinate used throughout the
 * library is the one of the reference measure (drift mu0).
 */
class MarketParams {
public:
    MarketParams(double mu0, double r, double sigma, double horizon, double x0);

    double mu0() const noexcept { return mu0_; }
    double r() const noexcept { return r_; }
    double sigma() const noexcept { return sigma_; }
    double horizon() const noexcept { return horizon_; }
    double x0() const noexcept { return x0_; }

private:
    double mu0_;
    double r_;
    double sigma_;
    double horizon_;
    double x0_;
};

/// (mu0 - r) / sigma
double market_price_of_risk(const MarketParams& mp) noexcept;

/// (mu0 - mu) / sigma, the drift offset of prior mu relative to the reference.
double nu_of_mu(const MarketParams& mp, double mu) noexcept;

/// exp(-theta w - theta^2 t / 2): density of a shifted Brownian measure at (w, t).
double girsanov_density(double theta, double w, double t) noexcept;

}  // namespace kmm
