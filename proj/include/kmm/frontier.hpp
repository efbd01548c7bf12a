#pragma once

#include <cstddef>
#include <vector>

#include "kmm/ambiguity.hpp"
#include "kmm/market.hpp"
#include "kmm/numerics.hpp"
#include "kmm/utility.hpp"

namespace kmm {

/// Nonnegative prior weights with sum_i lambda_i p_i = 1.
struct WeightVector {
    std::vector<double> lambda;
};

/// Rescales raw nonnegative weights onto the normalization sum lambda_i p_i = 1.
WeightVector normalize_weights(const std::vector<double>& raw, const DiscreteSOD& sod);

/// A point of the efficient frontier: the weighted-EUT optimum for lambda.
struct FrontierPoint {
    WeightVector lambda;
    std::vector<double> b;  ///< E^{Q^{mu_i}}[U(X_T)] per prior
    double J;               ///< sum_i lambda_i p_i b_i
    double kappa;           ///< budget multiplier
    double budget;          ///< E^Q[X_T] re-evaluated on the doubled grid
};

struct FrontierOptions {
    int gh_nodes = kDefaultGaussHermiteNodes;
    double doubling_tol = kDefaultDoublingTol;
    double kappa_tol = 1e-12;
};

/// sum_i lambda_i p_i eta^{mu_i}_t(w): density of the lambda-mixed prior.
double mixture_density(const WeightVector& lambda, const DiscreteSOD& sod, const MarketParams& mp,
                       double w, double t);

/// Complete-market solution of max sum_i lambda_i p_i E^{Q^{mu_i}}[U(X_T)]
/// subject to E^Q[X_T] = x e^{rT}: X_T = I(kappa eta_T / mixture_T).
FrontierPoint solve_weighted_eut(const WeightVector& lambda, const DiscreteSOD& sod,
                                 const MarketParams& mp, const Utility& utility, double x,
                                 const FrontierOptions& opts = {});

/// Uniform simplex grid of normalized weights, ordered by lambda_1 ascending.
/// grid_size points per edge; for two priors this is grid_size points.
std::vector<WeightVector> simplex_grid(std::size_t grid_size, const DiscreteSOD& sod);

/// Frontier over simplex_grid, OpenMP-parallel over grid points.
std::vector<FrontierPoint> trace_frontier(std::size_t grid_size, const DiscreteSOD& sod,
                                          const MarketParams& mp, const Utility& utility, double x,
                                          const FrontierOptions& opts = {});
/// Single-threaded reference for trace_frontier.
std::vector<FrontierPoint> trace_frontier_serial(std::size_t grid_size, const DiscreteSOD& sod,
                                                 const MarketParams& mp, const Utility& utility,
                                                 double x, const FrontierOptions& opts = {});

/// True when a >= b componentwise (beyond slack) and strictly better somewhere.
bool dominates(const FrontierPoint& a, const FrontierPoint& b, double slack);

/// sum_i p_i phi(b_i)
double kmm_objective(const PowerAmbiguity& pa, const DiscreteSOD& sod, const FrontierPoint& pt);

struct FixedPointResult {
    WeightVector lambda;
    FrontierPoint point;
    double objective;  ///< sum_i p_i phi(b_i) at the fixed point
    double residual;   ///< sup-norm of lambda - normalize(phi'(b))
    int iterations;
};

/// Damped iteration lambda <- (1-d) lambda + d normalize(phi'(b(lambda))).
/// Throws NumericalError("fixed point not converged", last_residual).
FixedPointResult fixed_point_lambda(const PowerAmbiguity& pa, const DiscreteSOD& sod,
                                    const MarketParams& mp, const Utility& utility, double x,
                                    double damping = 0.5, double tol = 1e-9, int max_iter = 1000,
                                    const FrontierOptions& opts = {});

struct SeparabilityReport {
    double rank_one_defect;        ///< max cross-ratio defect of the J(x, lambda) grid
    double distortion_defect;      ///< max |J(x, lambda) / rho(lambda) - U(x e^{rT})|
    std::vector<std::vector<double>> J;  ///< J[i][j] = J(xs[i], lambdas[j])
    std::vector<double> rho;       ///< rho(lambda_j) = J(1, lambda_j) / U(e^{rT})
};

SeparabilityReport separability_check(const Utility& utility, const MarketParams& mp,
                                      const DiscreteSOD& sod, const std::vector<double>& xs,
                                      const std::vector<WeightVector>& lambdas,
                                      const FrontierOptions& opts = {});

}  // namespace kmm
