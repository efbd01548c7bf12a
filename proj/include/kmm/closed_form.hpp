#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kmm/ambiguity.hpp"
#include "kmm/market.hpp"
#include "kmm/numerics.hpp"
#include "kmm/utility.hpp"

namespace kmm {

/**
 * @brief Optimal pre-commitment solution under a Gaussian second-order distribution.
 *
 * The optimal terminal wealth is a quadratic form in the terminal reference
 * Brownian value w:
 *
 *   CARA: X_T = (p w^2 / (2T) + q w + c) / alpha
 *   CRRA: X_T = exp((p w^2 / (2T) + q w + c) / beta)
 *   HARA: X_T = exp((p w^2 / (2T) + q w + c) / beta) - a
 *
 * sigma_mu = 0 gives p = 0, the classical ambiguity-neutral solution.
 */
struct ClosedFormSolution {
    Utility utility;
    PowerAmbiguity ambiguity;
    MarketParams market;
    GaussianSOD sod;
    double x;  ///< initial wealth
    double p;
    double q;
    double c;
    std::optional<double> sigma0_sq;    ///< nullopt in the no-ambiguity limit
    std::vector<std::string> warnings;  ///< non-fatal admissibility caveats

    /// h(x) = U(x e^{rT}), the distortion of the budget constraint.
    double distortion(double wealth) const;
};

ClosedFormSolution solve_cara(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                              double alpha, double x);
ClosedFormSolution solve_crra(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                              double beta, double x);
ClosedFormSolution solve_hara(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                              double beta, double a, double x);
/// Dispatches on the utility family.
ClosedFormSolution solve_closed_form(const MarketParams& mp, const GaussianSOD& sod, double gamma,
                                     const Utility& utility, double x);

/// Residual of the quadratic that determines p (0 in the no-ambiguity limit).
double quadratic_residual(const ClosedFormSolution& sol);

double terminal_wealth(const ClosedFormSolution& sol, double w);

/// E^{Q^mu}[U(X_T)] for the prior with drift offset nu_mu.
double expected_utility_given_mu(const ClosedFormSolution& sol, double nu_mu);

/// X_t = E^Q[e^{-r(T-t)} X_T | W_t = w].
double wealth_feedback(const ClosedFormSolution& sol, double w, double t);

/// Amount held in the risky asset at (t, W_t = w) given current wealth x_t.
double strategy_feedback(const ClosedFormSolution& sol, double w, double t, double x_t);

/// Integral of phi(E^{Q^mu}[U(X_T)]) against the given SOD (which may differ
/// from the one the solution was optimized for).
double value_function(const ClosedFormSolution& sol, const GaussianSOD& sod,
                      int gh_nodes = kDefaultGaussHermiteNodes, double doubling_tol = 1e-8);

/// E^Q[X_T] by Gauss-Hermite quadrature (budget check).
double budget_by_quadrature(const ClosedFormSolution& sol, int gh_nodes = kDefaultGaussHermiteNodes);

/// U'(X_T(w)) * int phi'(E^{Q^mu}[U]) eta^mu_T(w) dF(mu) / eta_T(w).
/// Constant in w exactly when the first-order condition holds.
double first_order_condition_ratio(const ClosedFormSolution& sol, double w,
                                   int gh_nodes = kDefaultGaussHermiteNodes);

/// Ambiguity-neutral (Merton) comparator.
struct MertonBaseline {
    Utility utility;
    /// Coefficient of w in the terminal map: log-wealth (CRRA/HARA) or wealth (CARA).
    double slope;
    double constant;
    /// CRRA/HARA: fraction of (wealth + a e^{-r(T-t)}); CARA: amount held at t = 0.
    double investment;
};

MertonBaseline merton_baseline(const MarketParams& mp, const Utility& utility, double x);

}  // namespace kmm
