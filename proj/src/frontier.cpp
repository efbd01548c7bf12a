#include "kmm/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "kmm/errors.hpp"

namespace kmm {

namespace {

void check_weights(const WeightVector& lambda, const DiscreteSOD& sod) {
    if (lambda.lambda.size() != sod.size())
        throw ValidationError("weights: size does not match the number of priors");
    double total = 0.0;
    for (std::size_t i = 0; i < sod.size(); ++i) {
        const double l = lambda.lambda[i];
        if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("weights: must be nonnegative");
        total += l * sod.points()[i].p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("weights: sum lambda_i p_i must be 1");
}

double log_mixture_density(const WeightVector& lambda, const DiscreteSOD& sod, const MarketParams& mp,
                           double w, double t) {
    double top = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.assign(sod.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < sod.size(); ++i) {
        const double weight = lambda.lambda[i] * sod.points()[i].p;
        if (weight <= 0.0) continue;
        const double theta = nu_of_mu(mp, sod.points()[i].mu);
        terms[i] = std::log(weight) - theta * w - 0.5 * theta * theta * t;
        top = std::max(top, terms[i]);
    }
    double acc = 0.0;
    for (double v : terms)
        if (std::isfinite(v)) acc += std::exp(v - top);
    return top + std::log(acc);
}

// Terminal wealth map w -> I(kappa eta_T / mixture_T), evaluated in log space.
struct WealthMap {
    const WeightVector& lambda;
    const DiscreteSOD& sod;
    const MarketParams& mp;
    const Utility& utility;
    double nu;

    double log_ratio(double w) const {
        const double T = mp.horizon();
        return -nu * w - 0.5 * nu * nu * T - log_mixture_density(lambda, sod, mp, w, T);
    }
    double wealth(double log_kappa, double w) const {
        return inverse_marginal_from_log(utility, log_kappa + log_ratio(w));
    }
};

double expect_under(double theta, const MarketParams& mp, const QuadratureGrid& grid,
                    const auto& f) {
    // Under a measure with W_T ~ N(-theta T, T).
    const double T = mp.horizon();
    const double sd = std::sqrt(T);
    return expect_on_grid(grid, [&](double z) { return f(-theta * T + sd * z); });
}

template <typename Body>
std::vector<FrontierPoint> run_grid(const std::vector<WeightVector>& grid, Body&& body, bool parallel) {
    std::vector<FrontierPoint> out(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            try {
                out[k] = body(grid[k]);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    } else {
        for (std::size_t k = 0; k < grid.size(); ++k) out[k] = body(grid[k]);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

void compositions(std::size_t remaining, std::size_t slots, std::vector<std::size_t>& current,
                  std::vector<std::vector<std::size_t>>& out) {
    if (slots == 1) {
        current.push_back(remaining);
        out.push_back(current);
        current.pop_back();
        return;
    }
    for (std::size_t k = 0; k <= remaining; ++k) {
        current.push_back(k);
        compositions(remaining - k, slots - 1, current, out);
        current.pop_back();
    }
}

}  // namespace

WeightVector normalize_weights(const std::vector<double>& raw, const DiscreteSOD& sod) {
    if (raw.size() != sod.size()) throw ValidationError("weights: size does not match the number of priors");
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!(raw[i] >= 0.0) || !std::isfinite(raw[i])) throw ValidationError("weights: must be nonnegative");
        total += raw[i] * sod.points()[i].p;
    }
    if (!(total > 0.0)) throw ValidationError("weights: all zero");
    WeightVector out{raw};
    for (auto& l : out.lambda) l /= total;
    return out;
}

double mixture_density(const WeightVector& lambda, const DiscreteSOD& sod, const MarketParams& mp,
                       double w, double t) {
    check_weights(lambda, sod);
    double acc = 0.0;
    for (std::size_t i = 0; i < sod.size(); ++i)
        acc += lambda.lambda[i] * sod.points()[i].p * girsanov_density(nu_of_mu(mp, sod.points()[i].mu), w, t);
    return acc;
}

FrontierPoint solve_weighted_eut(const WeightVector& lambda, const DiscreteSOD& sod,
                                 const MarketParams& mp, const Utility& utility, double x,
                                 const FrontierOptions& opts) {
    check_weights(lambda, sod);
    validate(utility);
    if (!(x > 0.0)) throw ValidationError("weighted eut: initial wealth must be positive");
    if (opts.gh_nodes < 1 || 2 * opts.gh_nodes > kMaxGaussHermiteNodes)
        throw ValidationError("weighted eut: gh_nodes must be in [1, 256]");

    const double nu = market_price_of_risk(mp);
    const double T = mp.horizon();
    const double target = x * std::exp(mp.r() * T);
    const WealthMap map{lambda, sod, mp, utility, nu};
    const auto& grid = gauss_hermite_cached(opts.gh_nodes);

    // I is decreasing, so the budget shortfall is increasing in log kappa.
    auto shortfall = [&](double log_kappa) {
        return target - expect_under(nu, mp, grid, [&](double w) { return map.wealth(log_kappa, w); });
    };
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;
    const double f0 = shortfall(0.0);
    bool bracketed = f0 == 0.0;
    for (int i = 0; i < 64 && !bracketed; ++i, step *= 2.0) {
        if (f0 > 0.0) {
            lo = -step;
            bracketed = shortfall(lo) <= 0.0;
        } else {
            hi = step;
            bracketed = shortfall(hi) >= 0.0;
        }
    }
    if (!bracketed) throw NumericalError("kappa not bracketed");
    const double log_kappa = f0 == 0.0 ? 0.0 : find_root_monotone(shortfall, lo, hi, opts.kappa_tol);

    FrontierPoint pt;
    pt.lambda = lambda;
    pt.kappa = std::exp(log_kappa);
    pt.b.resize(sod.size());
    const double sd = std::sqrt(T);
    for (std::size_t i = 0; i < sod.size(); ++i) {
        const double theta = nu_of_mu(mp, sod.points()[i].mu);
        pt.b[i] = expect_standard_normal(
            [&](double z) { return utility_value(utility, map.wealth(log_kappa, -theta * T + sd * z)); },
            opts.gh_nodes, opts.doubling_tol);
    }
    pt.J = 0.0;
    for (std::size_t i = 0; i < sod.size(); ++i) pt.J += lambda.lambda[i] * sod.points()[i].p * pt.b[i];
    pt.budget = expect_under(nu, mp, gauss_hermite_cached(2 * opts.gh_nodes),
                             [&](double w) { return map.wealth(log_kappa, w); });
    return pt;
}

std::vector<WeightVector> simplex_grid(std::size_t grid_size, const DiscreteSOD& sod) {
    if (sod.size() == 1) return {normalize_weights({1.0}, sod)};
    if (grid_size < 2) throw ValidationError("frontier: grid_size must be >= 2");
    std::vector<std::vector<std::size_t>> parts;
    std::vector<std::size_t> current;
    compositions(grid_size - 1, sod.size(), current, parts);

    const double m = static_cast<double>(grid_size - 1);
    std::vector<WeightVector> grid;
    grid.reserve(parts.size());
    for (const auto& k : parts) {
        WeightVector wv;
        for (std::size_t i = 0; i < sod.size(); ++i)
            wv.lambda.push_back(static_cast<double>(k[i]) / m / sod.points()[i].p);
        grid.push_back(std::move(wv));
    }
    std::sort(grid.begin(), grid.end(),
              [](const WeightVector& a, const WeightVector& b) { return a.lambda < b.lambda; });
    return grid;
}

std::vector<FrontierPoint> trace_frontier(std::size_t grid_size, const DiscreteSOD& sod,
                                          const MarketParams& mp, const Utility& utility, double x,
                                          const FrontierOptions& opts) {
    return run_grid(
        simplex_grid(grid_size, sod),
        [&](const WeightVector& l) { return solve_weighted_eut(l, sod, mp, utility, x, opts); }, true);
}

std::vector<FrontierPoint> trace_frontier_serial(std::size_t grid_size, const DiscreteSOD& sod,
                                                 const MarketParams& mp, const Utility& utility,
                                                 double x, const FrontierOptions& opts) {
    return run_grid(
        simplex_grid(grid_size, sod),
        [&](const WeightVector& l) { return solve_weighted_eut(l, sod, mp, utility, x, opts); }, false);
}

bool dominates(const FrontierPoint& a, const FrontierPoint& b, double slack) {
    bool strictly = false;
    for (std::size_t i = 0; i < a.b.size(); ++i) {
        if (a.b[i] < b.b[i] - slack) return false;
        if (a.b[i] > b.b[i] + slack) strictly = true;
    }
    return strictly;
}

double kmm_objective(const PowerAmbiguity& pa, const DiscreteSOD& sod, const FrontierPoint& pt) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sod.size(); ++i) acc += sod.points()[i].p * phi_eval(pa, pt.b[i]);
    return acc;
}

FixedPointResult fixed_point_lambda(const PowerAmbiguity& pa, const DiscreteSOD& sod,
                                    const MarketParams& mp, const Utility& utility, double x,
                                    double damping, double tol, int max_iter,
                                    const FrontierOptions& opts) {
    if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("fixed point: damping must be in (0, 1]");
    if (!(tol > 0.0) || max_iter < 1) throw ValidationError("fixed point: tol > 0 and max_iter >= 1 required");
    if (pa.branch() != ambiguity_branch(utility))
        throw ValidationError("fixed point: ambiguity branch does not match the sign of U");

    WeightVector lambda = normalize_weights(std::vector<double>(sod.size(), 1.0), sod);
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= max_iter; ++iter) {
        FrontierPoint pt = solve_weighted_eut(lambda, sod, mp, utility, x, opts);
        std::vector<double> marginal(sod.size());
        for (std::size_t i = 0; i < sod.size(); ++i) marginal[i] = phi_prime(pa, pt.b[i]);
        const WeightVector target = normalize_weights(marginal, sod);

        residual = 0.0;
        for (std::size_t i = 0; i < sod.size(); ++i)
            residual = std::max(residual, std::abs(lambda.lambda[i] - target.lambda[i]));
        if (residual < tol) {
            const double objective = kmm_objective(pa, sod, pt);
            return {std::move(lambda), std::move(pt), objective, residual, iter};
        }
        for (std::size_t i = 0; i < sod.size(); ++i)
            lambda.lambda[i] = (1.0 - damping) * lambda.lambda[i] + damping * target.lambda[i];
    }
    throw NumericalError("fixed point not converged", residual);
}

SeparabilityReport separability_check(const Utility& utility, const MarketParams& mp,
                                      const DiscreteSOD& sod, const std::vector<double>& xs,
                                      const std::vector<WeightVector>& lambdas,
                                      const FrontierOptions& opts) {
    if (xs.empty() || lambdas.empty()) throw ValidationError("separability: empty grid");
    SeparabilityReport rep{0.0, 0.0, {}, {}};
    rep.J.assign(xs.size(), std::vector<double>(lambdas.size(), 0.0));
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < lambdas.size(); ++j)
            rep.J[i][j] = solve_weighted_eut(lambdas[j], sod, mp, utility, xs[i], opts).J;

    const double unit = utility_value(utility, std::exp(mp.r() * mp.horizon()));
    for (const auto& l : lambdas)
        rep.rho.push_back(solve_weighted_eut(l, sod, mp, utility, 1.0, opts).J / unit);

    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t k = i + 1; k < xs.size(); ++k)
            for (std::size_t j = 0; j < lambdas.size(); ++j)
                for (std::size_t l = j + 1; l < lambdas.size(); ++l) {
                    const double diag = rep.J[i][j] * rep.J[k][l];
                    const double cross = rep.J[i][l] * rep.J[k][j];
                    rep.rank_one_defect = std::max(rep.rank_one_defect, std::abs(diag - cross) / std::abs(diag));
                }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double h = utility_value(utility, xs[i] * std::exp(mp.r() * mp.horizon()));
        for (std::size_t j = 0; j < lambdas.size(); ++j)
            rep.distortion_defect = std::max(rep.distortion_defect, std::abs(rep.J[i][j] / rep.rho[j] - h));
    }
    return rep;
}

}  // namespace kmm
