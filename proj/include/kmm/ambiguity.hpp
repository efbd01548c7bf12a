#pragma once

#include <optional>
#include <vector>

#include "kmm/market.hpp"

namespace kmm {

/// Which half-line the ambiguity attitude acts on. Chosen by the sign of U.
enum class Branch { positive, negative };

/**
 * @brief Power ambiguity attitude.
 *
 * positive branch: phi(x) = x^g / g on x > 0
 * negative branch: phi(x) = -(-x)^g / g on x < 0
 *
 * g = 0 is the logarithmic limit: log(x), resp. -log(-x).
 */
class PowerAmbiguity {
public:
    PowerAmbiguity(double gamma, Branch branch);

    double gamma() const noexcept { return gamma_; }
    Branch branch() const noexcept { return branch_; }
    bool is_log() const noexcept { return gamma_ == 0.0; }

private:
    double gamma_;
    Branch branch_;
};

double phi_eval(const PowerAmbiguity& pa, double x);
double phi_prime(const PowerAmbiguity& pa, double x);
/// Inverse of phi' on the branch domain; y must be positive.
double phi_prime_inv(const PowerAmbiguity& pa, double y);
/// sup_{x>0} [phi(x) - x y]. Only defined on the positive branch.
double psi_eval(const PowerAmbiguity& pa, double y);

/// Normal second-order distribution of the ambiguous drift.
struct GaussianSOD {
    double center;    ///< mean drift, normally mu0
    double sigma_mu;  ///< dispersion of the drift; 0 means no ambiguity

    GaussianSOD(double center, double sigma_mu);
};

struct PriorPoint {
    double mu;
    double p;
};

/// Finitely many priors with positive probabilities summing to one.
class DiscreteSOD {
public:
    explicit DiscreteSOD(std::vector<PriorPoint> points);

    const std::vector<PriorPoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }

private:
    std::vector<PriorPoint> points_;
};

/// sigma^2 / (sigma_mu^2 T); nullopt in the no-ambiguity limit sigma_mu = 0.
std::optional<double> sigma0_sq(const GaussianSOD& sod, const MarketParams& mp);

/// sigma_mu giving a prescribed sigma0 (the parameterization used in tables).
double sigma_mu_from_sigma0(double sigma0, const MarketParams& mp);

}  // namespace kmm
