#include "kmm/closed_form.hpp"

#include <cmath>
#include <string>

#include "kmm/errors.hpp"

namespace kmm {

namespace {

struct Power {
    double beta;
    double a;  // 0 for CRRA
};

std::optional<Power> as_power(const Utility& u) {
    if (const auto* c = std::get_if<Crra>(&u)) return Power{c->beta, 0.0};
    if (const auto* h = std::get_if<Hara>(&u)) return Power{h->beta, h->a};
    return std::nullopt;
}

ClosedFormSolution make_power_solution(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                                       const Utility& utility, double x) {
    validate(utility);
    const Power pw = *as_power(utility);
    const double beta = pw.beta;
    if (!(x > 0.0)) throw ValidationError("closed form: initial wealth must be positive");

    const PowerAmbiguity ambiguity(gamma, ambiguity_branch(utility));
    const double nu = market_price_of_risk(mp);
    const double T = mp.horizon();
    const auto s02 = sigma0_sq(sod, mp);

    double p = 0.0;
    if (s02) {
        const double A = gamma + *s02;
        const double B = *s02 + 1.0 / (1.0 - beta);
        const double C = beta / (1.0 - beta);
        const double disc = B * B - 4.0 * A * C;
        if (disc < 0.0) throw NumericalError("no real root", disc);
        // Smaller root in cancellation-free form; continuous through A = 0.
        p = 2.0 * C / (B + std::sqrt(disc));
    }
    if (!(p < 1.0)) throw NumericalError("solution invalid: p >= 1", p);
    const double ratio = p / beta;
    if (!(ratio < 1.0)) throw NumericalError("feedback map singular: p >= beta", p);

    const double q = beta * (1.0 - p) / ((1.0 - beta) * (1.0 - gamma * p)) * nu;
    const double effective = x + pw.a * std::exp(-mp.r() * T);
    if (!(effective > 0.0)) throw ValidationError("closed form: x + a e^{-rT} must be positive");
    const double drift = nu - q / beta;
    const double c = beta * (std::log(effective) + mp.r() * T +
                             0.5 * T * (nu * nu - drift * drift / (1.0 - ratio)) +
                             0.5 * std::log(1.0 - ratio));
    return ClosedFormSolution{utility, ambiguity, mp, sod, x, p, q, c, s02, {}};
}

}  // namespace

double ClosedFormSolution::distortion(double wealth) const {
    return utility_value(utility, wealth * std::exp(market.r() * market.horizon()));
}

ClosedFormSolution solve_cara(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                              double alpha, double x) {
    const Utility utility = Cara{alpha};
    validate(utility);
    const PowerAmbiguity ambiguity(gamma, Branch::negative);
    const double nu = market_price_of_risk(mp);
    const double T = mp.horizon();
    const auto s02 = sigma0_sq(sod, mp);

    double p = 0.0;
    if (s02) {
        const double A = gamma + *s02;
        const double disc = *s02 * *s02 + 4.0 * A;
        if (disc < 0.0) throw NumericalError("no real root", disc);
        p = 2.0 / (*s02 + std::sqrt(disc));
    }
    if (!(p > -1.0) || !(1.0 + gamma * p > 0.0))
        throw NumericalError("solution invalid: CARA coefficients out of range", p);
    const double q = (1.0 + p) / (1.0 + gamma * p) * nu;
    // Budget line: (nu^2 T + 1) p / 2 - nu T q + c = alpha x e^{rT}.
    const double c = alpha * x * std::exp(mp.r() * T) - 0.5 * (nu * nu * T + 1.0) * p + nu * T * q;

    ClosedFormSolution sol{utility, ambiguity, mp, sod, x, p, q, c, s02, {}};
    if (p > 0.0 && c - q * q * T / (2.0 * p) < 0.0)
        sol.warnings.emplace_back("admissibility: nonnegativity may fail");
    return sol;
}

ClosedFormSolution solve_crra(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                              double beta, double x) {
    return make_power_solution(mp, sod, gamma, Crra{beta}, x);
}

ClosedFormSolution solve_hara(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                              double beta, double a, double x) {
    return make_power_solution(mp, sod, gamma, Hara{beta, a}, x);
}

ClosedFormSolution solve_closed_form(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                                     const Utility& utility, double x) {
    if (const auto* cara = std::get_if<Cara>(&utility)) return solve_cara(mp, sod, gamma, cara->alpha, x);
    return make_power_solution(mp, sod, gamma, utility, x);
}

double quadratic_residual(const ClosedFormSolution& sol) {
    if (!sol.sigma0_sq) return 0.0;
    const double s02 = *sol.sigma0_sq;
    const double g = sol.ambiguity.gamma();
    const double p = sol.p;
    if (std::holds_alternative<Cara>(sol.utility)) return (g + s02) * p * p + s02 * p - 1.0;
    const double beta = as_power(sol.utility)->beta;
    return (g + s02) * p * p - (s02 + 1.0 / (1.0 - beta)) * p + beta / (1.0 - beta);
}

double terminal_wealth(const ClosedFormSolution& sol, double w) {
    const double T = sol.market.horizon();
    const double quad = sol.p / (2.0 * T) * w * w + sol.q * w + sol.c;
    if (const auto* cara = std::get_if<Cara>(&sol.utility)) return quad / cara->alpha;
    const Power pw = *as_power(sol.utility);
    return std::exp(quad / pw.beta) - pw.a;
}

double expected_utility_given_mu(const ClosedFormSolution& sol, double nu_mu) {
    const double T = sol.market.horizon();
    const double p = sol.p;
    const double q = sol.q;
    if (const auto* cara = std::get_if<Cara>(&sol.utility)) {
        if (!(p > -1.0)) throw NumericalError("expected utility: p <= -1");
        const double e = -p * T / (2.0 * (p + 1.0)) * nu_mu * nu_mu + q * T / (p + 1.0) * nu_mu +
                         q * q * T / (2.0 * (p + 1.0)) - sol.c;
        return -std::exp(e) / (cara->alpha * std::sqrt(1.0 + p));
    }
    if (!(p < 1.0)) throw NumericalError("expected utility: p >= 1");
    const double beta = as_power(sol.utility)->beta;
    const double e = p * T / (2.0 * (1.0 - p)) * nu_mu * nu_mu - q * T / (1.0 - p) * nu_mu +
                     q * q * T / (2.0 * (1.0 - p)) + sol.c;
    return std::exp(e) / (beta * std::sqrt(1.0 - p));
}

namespace {

void check_time(const ClosedFormSolution& sol, double t) {
    if (!(t >= 0.0 && t <= sol.market.horizon()))
        throw ValidationError("feedback: t must lie in [0, T]");
}

}  // namespace

double wealth_feedback(const ClosedFormSolution& sol, double w, double t) {
    check_time(sol, t);
    const double T = sol.market.horizon();
    const double tau = T - t;
    const double nu = market_price_of_risk(sol.market);
    const double discount = std::exp(-sol.market.r() * tau);
    // Under Q, W_T | W_t = w ~ N(w - nu tau, tau).
    const double mean = w - nu * tau;
    if (const auto* cara = std::get_if<Cara>(&sol.utility)) {
        return discount / cara->alpha *
               gaussian_quadratic_mean(sol.p / (2.0 * T), sol.q, sol.c, mean, tau);
    }
    const Power pw = *as_power(sol.utility);
    const double a2 = sol.p / (2.0 * T * pw.beta);
    if (!(1.0 - 2.0 * a2 * tau > 0.0)) throw NumericalError("feedback map singular", t);
    return discount * (gaussian_exp_quadratic(a2, sol.q / pw.beta, sol.c / pw.beta, mean, tau) - pw.a);
}

double strategy_feedback(const ClosedFormSolution& sol, double w, double t, double x_t) {
    check_time(sol, t);
    const double T = sol.market.horizon();
    const double tau = T - t;
    const double sigma = sol.market.sigma();
    const double nu = market_price_of_risk(sol.market);
    const double discount = std::exp(-sol.market.r() * tau);
    if (const auto* cara = std::get_if<Cara>(&sol.utility)) {
        return discount * (sol.p * (w - nu * tau) / T + sol.q) / (cara->alpha * sigma);
    }
    const Power pw = *as_power(sol.utility);
    const double denom = pw.beta * T - tau * sol.p;
    if (!(denom / (pw.beta * T) > 0.0)) throw NumericalError("feedback map singular", t);
    return (sol.p * w + T * sol.q - tau * sol.p * nu) / (sigma * denom) * (x_t + pw.a * discount);
}

double value_function(const ClosedFormSolution& sol, const GaussianSOD& sod, int gh_nodes,
                      double doubling_tol) {
    const double sigma = sol.market.sigma();
    const double mean = (sol.market.mu0() - sod.center) / sigma;
    const double spread = sod.sigma_mu / sigma;
    auto integrand = [&](double z) {
        const double eu = expected_utility_given_mu(sol, mean + spread * z);
        if (!std::isfinite(eu)) throw NumericalError("SOD integral divergent", z);
        return phi_eval(sol.ambiguity, eu);
    };
    if (spread == 0.0) return integrand(0.0);
    try {
        return expect_standard_normal(integrand, gh_nodes, doubling_tol);
    } catch (const NumericalError& e) {
        throw NumericalError("SOD integral divergent", e.detail());
    }
}

double budget_by_quadrature(const ClosedFormSolution& sol, int gh_nodes) {
    const double T = sol.market.horizon();
    const double nu = market_price_of_risk(sol.market);
    const double sd = std::sqrt(T);
    return expect_standard_normal(
        [&](double z) { return terminal_wealth(sol, -nu * T + sd * z); }, gh_nodes, 1e-9);
}

double first_order_condition_ratio(const ClosedFormSolution& sol, double w, int gh_nodes) {
    const double T = sol.market.horizon();
    const double sigma = sol.market.sigma();
    const double nu = market_price_of_risk(sol.market);
    const double mean = (sol.market.mu0() - sol.sod.center) / sigma;
    const double spread = sol.sod.sigma_mu / sigma;
    auto weighted = [&](double z) {
        const double nu_mu = mean + spread * z;
        return phi_prime(sol.ambiguity, expected_utility_given_mu(sol, nu_mu)) *
               girsanov_density(nu_mu, w, T);
    };
    const double mixed = spread == 0.0 ? weighted(0.0) : expect_standard_normal(weighted, gh_nodes, 1e-9);
    return marginal_utility(sol.utility, terminal_wealth(sol, w)) * mixed / girsanov_density(nu, w, T);
}

MertonBaseline merton_baseline(const MarketParams& mp, const Utility& utility, double x) {
    validate(utility);
    const double nu = market_price_of_risk(mp);
    const double T = mp.horizon();
    const double r = mp.r();
    if (const auto* cara = std::get_if<Cara>(&utility)) {
        const double slope = nu / cara->alpha;
        return {utility, slope, x * std::exp(r * T) + nu * slope * T,
                std::exp(-r * T) * slope / mp.sigma()};
    }
    const Power pw = *as_power(utility);
    const double k = 1.0 - pw.beta;
    const double slope = nu / k;
    const double constant = std::log(x + pw.a * std::exp(-r * T)) + r * T + nu * nu * T / k -
                            nu * nu * T / (2.0 * k * k);
    return {utility, slope, constant, nu / (mp.sigma() * k)};
}

}  // namespace kmm
