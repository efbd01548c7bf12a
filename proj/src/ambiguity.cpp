#include "kmm/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kmm/errors.hpp"

namespace kmm {

PowerAmbiguity::PowerAmbiguity(double gamma, Branch branch) : gamma_(gamma), branch_(branch) {
    if (!std::isfinite(gamma) || gamma >= 1.0)
        throw ValidationError("ambiguity: gamma must be finite and < 1");
}

namespace {

// Maps x onto the positive half-line, throwing outside the branch domain.
double magnitude(const PowerAmbiguity& pa, double x) {
    const bool ok = pa.branch() == Branch::positive ? x > 0.0 : x < 0.0;
    if (!ok || !std::isfinite(x)) throw ValidationError("phi domain");
    return std::abs(x);
}

}  // namespace

double phi_eval(const PowerAmbiguity& pa, double x) {
    const double u = magnitude(pa, x);
    const double g = pa.gamma();
    const double v = pa.is_log() ? std::log(u) : std::pow(u, g) / g;
    return pa.branch() == Branch::positive ? v : -v;
}

double phi_prime(const PowerAmbiguity& pa, double x) {
    // Same expression on both branches: d/dx[-(-x)^g/g] = (-x)^(g-1).
    return std::pow(magnitude(pa, x), pa.gamma() - 1.0);
}

double phi_prime_inv(const PowerAmbiguity& pa, double y) {
    if (!(y > 0.0) || !std::isfinite(y)) throw ValidationError("phi_prime_inv: y must be positive");
    const double u = std::pow(y, 1.0 / (pa.gamma() - 1.0));
    return pa.branch() == Branch::positive ? u : -u;
}

double psi_eval(const PowerAmbiguity& pa, double y) {
    if (!(y > 0.0) || !std::isfinite(y)) throw ValidationError("psi: y must be positive");
    if (pa.branch() != Branch::positive)
        throw ValidationError("psi: conjugate is unbounded on the negative-domain branch");
    if (pa.is_log()) return -std::log(y) - 1.0;
    const double g = pa.gamma();
    return (1.0 - g) / g * std::pow(y, g / (g - 1.0));
}

GaussianSOD::GaussianSOD(double center_, double sigma_mu_) : center(center_), sigma_mu(sigma_mu_) {
    if (!std::isfinite(center)) throw ValidationError("gaussian sod: center must be finite");
    if (!std::isfinite(sigma_mu) || sigma_mu < 0.0)
        throw ValidationError("gaussian sod: sigma_mu must be >= 0");
}

DiscreteSOD::DiscreteSOD(std::vector<PriorPoint> points) : points_(std::move(points)) {
    if (points_.empty()) throw ValidationError("discrete sod: no points");
    double total = 0.0;
    for (const auto& pt : points_) {
        if (!std::isfinite(pt.mu)) throw ValidationError("discrete sod: mu must be finite");
        if (!(pt.p > 0.0) || !std::isfinite(pt.p))
            throw ValidationError("discrete sod: probabilities must be positive");
        total += pt.p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("discrete sod: probabilities must sum to 1");
    for (std::size_t i = 0; i < points_.size(); ++i)
        for (std::size_t j = i + 1; j < points_.size(); ++j)
            if (points_[i].mu == points_[j].mu)
                throw ValidationError("discrete sod: drifts must be distinct");
    for (auto& pt : points_) pt.p /= total;
}

std::optional<double> sigma0_sq(const GaussianSOD& sod, const MarketParams& mp) {
    if (sod.sigma_mu == 0.0) return std::nullopt;
    const double s = mp.sigma() / sod.sigma_mu;
    return s * s / mp.horizon();
}

double sigma_mu_from_sigma0(double sigma0, const MarketParams& mp) {
    if (!(sigma0 > 0.0)) throw ValidationError("sigma0 must be positive");
    return mp.sigma() / (sigma0 * std::sqrt(mp.horizon()));
}

}  // namespace kmm
