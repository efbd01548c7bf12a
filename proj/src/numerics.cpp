#include "kmm/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "kmm/errors.hpp"

namespace kmm {

namespace {

// Newton polish of a Golub-Welsch node using the orthonormal recurrence
// h_{k+1} = (z h_k - sqrt(k) h_{k-1}) / sqrt(k+1), h_n' = sqrt(n) h_{n-1}.
// Returns the Christoffel weight 1 / sum_{k<n} h_k(z)^2.
double polish_node(double& z, int n) {
    double sum_sq = 0.0;
    for (int iter = 0; iter < 8; ++iter) {
        double h_prev = 0.0;
        double h = 1.0;
        sum_sq = 0.0;
        for (int k = 0; k < n; ++k) {
            sum_sq += h * h;
            const double h_next = (z * h - std::sqrt(static_cast<double>(k)) * h_prev) /
                                  std::sqrt(static_cast<double>(k + 1));
            h_prev = h;
            h = h_next;
        }
        // h = h_n, h_prev = h_{n-1}
        const double deriv = std::sqrt(static_cast<double>(n)) * h_prev;
        if (deriv == 0.0 || !std::isfinite(deriv)) break;
        const double step = h / deriv;
        z -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    return 1.0 / sum_sq;
}

}  // namespace

QuadratureGrid gauss_hermite(int n) {
    if (n < 1 || n > kMaxGaussHermiteNodes)
        throw ValidationError("gauss_hermite: node count must be in [1, 512]");
    QuadratureGrid grid;
    grid.nodes.assign(static_cast<std::size_t>(n), 0.0);
    grid.weights.assign(static_cast<std::size_t>(n), 0.0);
    if (n == 1) {
        grid.weights[0] = 1.0;
        return grid;
    }

    // Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& eig = solver.eigenvalues();

    const int half = n / 2;
    for (int i = 0; i < half; ++i) {
        // Polish the positive node; mirror it.
        double z = std::abs(eig[n - 1 - i]);
        const double w = polish_node(z, n);
        grid.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        grid.nodes[static_cast<std::size_t>(i)] = -z;
        grid.weights[static_cast<std::size_t>(n - 1 - i)] = w;
        grid.weights[static_cast<std::size_t>(i)] = w;
    }
    if (n % 2 == 1) {
        double z = 0.0;
        grid.weights[static_cast<std::size_t>(half)] = polish_node(z, n);
        grid.nodes[static_cast<std::size_t>(half)] = 0.0;
    }

    // Sum from the tails inwards so the small weights are not lost.
    double total = 0.0;
    for (int i = 0; i < half; ++i) total += 2.0 * grid.weights[static_cast<std::size_t>(i)];
    if (n % 2 == 1) total += grid.weights[static_cast<std::size_t>(half)];
    for (auto& w : grid.weights) w /= total;
    return grid;
}

const QuadratureGrid& gauss_hermite_cached(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<QuadratureGrid>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<QuadratureGrid>(gauss_hermite(n));
    return *slot;
}

double expect_standard_normal(const std::function<double(double)>& f, int n, double doubling_tol) {
    if (n < 1 || 2 * n > kMaxGaussHermiteNodes)
        throw ValidationError("expect_standard_normal: node count must be in [1, 256]");
    const auto& coarse = gauss_hermite_cached(n);
    const auto& fine = gauss_hermite_cached(2 * n);

    double value = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const double fx = f(coarse.nodes[i]);
        value += coarse.weights[i] * fx;
        scale += coarse.weights[i] * std::abs(fx);
    }
    double refined = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const double fx = f(fine.nodes[i]);
        refined += fine.weights[i] * fx;
    }
    if (!std::isfinite(value) || !std::isfinite(refined))
        throw NumericalError("quadrature not converged: non-finite integrand");
    const double change = std::abs(refined - value);
    const double denom = std::max({std::abs(refined), std::abs(value), scale, 1e-300});
    if (change > doubling_tol * denom)
        throw NumericalError("quadrature not converged", change / denom);
    return value;
}

double log_gaussian_exp_quadratic(double a, double b, double c0, double m, double s2) {
    const double d = 1.0 - 2.0 * a * s2;
    if (!(d > 0.0)) throw NumericalError("exp-quadratic moment divergent", d);
    const double slope = b + 2.0 * a * m;
    return -0.5 * std::log(d) + c0 + a * m * m + b * m + s2 * slope * slope / (2.0 * d);
}

double gaussian_exp_quadratic(double a, double b, double c0, double m, double s2) {
    return std::exp(log_gaussian_exp_quadratic(a, b, c0, m, s2));
}

double gaussian_quadratic_mean(double a, double b, double c0, double m, double s2) noexcept {
    return a * (m * m + s2) + b * m + c0;
}

double find_root_monotone(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (lo > hi) std::swap(lo, hi);
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if (!(f_lo * f_hi < 0.0)) throw NumericalError("not bracketed");
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= tol * std::max(1.0, std::abs(mid))) return mid;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace kmm
