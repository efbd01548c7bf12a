#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace kmm {

inline constexpr int kDefaultGaussHermiteNodes = 128;
inline constexpr double kDefaultDoublingTol = 1e-10;
inline constexpr int kMaxGaussHermiteNodes = 512;

/**
 * @brief Probabilists' Gauss-Hermite rule normalized to the standard normal.
 *
 * sum_i weights[i] * f(nodes[i]) approximates E[f(Z)], Z ~ N(0,1). Nodes are
 * stored ascending and exactly antisymmetric.
 */
struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// Builds the n-node rule, 1 <= n <= 512.
QuadratureGrid gauss_hermite(int n);

/// Process-wide cache of gauss_hermite(n). Thread-safe.
const QuadratureGrid& gauss_hermite_cached(int n);

template <typename F>
double expect_on_grid(const QuadratureGrid& grid, F&& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) acc += grid.weights[i] * f(grid.nodes[i]);
    return acc;
}

/// E[f(Z)] at n nodes, cross-checked at 2n nodes; throws "quadrature not converged"
/// when the relative change exceeds doubling_tol. n <= 256.
double expect_standard_normal(const std::function<double(double)>& f,
                              int n = kDefaultGaussHermiteNodes,
                              double doubling_tol = kDefaultDoublingTol);

/// E[exp(a Z^2 + b Z + c0)] for Z ~ N(m, s2); requires 2 a s2 < 1.
double gaussian_exp_quadratic(double a, double b, double c0, double m, double s2);

/// log of gaussian_exp_quadratic, for callers that stay in log space.
double log_gaussian_exp_quadratic(double a, double b, double c0, double m, double s2);

/// E[a Z^2 + b Z + c0] for Z ~ N(m, s2).
double gaussian_quadratic_mean(double a, double b, double c0, double m, double s2) noexcept;

/// Bisection for a monotone f with f(lo) f(hi) <= 0. Stops once the bracket
/// width is below tol * max(1, |x|). Throws "not bracketed" otherwise.
double find_root_monotone(const std::function<double(double)>& f, double lo, double hi,
                          double tol = 1e-12);

}  // namespace kmm
