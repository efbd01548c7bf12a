#include "kmm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "kmm/errors.hpp"

namespace kmm {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Independent stream per (seed, path): the path set does not depend on how
// paths are distributed over threads.
std::mt19937_64 path_stream(std::uint64_t seed, std::size_t path) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(path))));
}

double measure_shift(const MarketParams& mp, const SimConfig& cfg) {
    switch (cfg.measure) {
        case Measure::reference: return 0.0;
        case Measure::risk_neutral: return market_price_of_risk(mp);
        case Measure::prior: return nu_of_mu(mp, cfg.prior_mu);
    }
    return 0.0;
}

enum class PathStatus : unsigned char { ok, blow_up, strategy_error };

struct Levels {
    std::vector<std::size_t> steps;
    std::size_t fine = 0;
};

Levels make_levels(std::vector<std::size_t> steps) {
    if (steps.empty()) throw ValidationError("simulation: no step counts");
    Levels lv;
    lv.fine = *std::max_element(steps.begin(), steps.end());
    for (auto n : steps)
        if (n == 0 || lv.fine % n != 0)
            throw ValidationError("simulation: step counts must be positive and divide the largest");
    lv.steps = std::move(steps);
    return lv;
}

// Outputs laid out as [level * n_paths + path].
struct Kernel {
    const MarketParams& mp;
    double x;
    const StrategyFn& strategy;
    const SimConfig& cfg;
    const Levels& levels;
    double shift;

    PathStatus run(std::size_t path, std::vector<double>& fine_dw, std::vector<double>& w_out,
                   std::vector<double>& x_out) const {
        const double T = mp.horizon();
        const double r = mp.r();
        const double excess = mp.mu0() - r;
        const double sigma = mp.sigma();
        const double dt_fine = T / static_cast<double>(levels.fine);
        const double sd_fine = std::sqrt(dt_fine);

        auto gen = path_stream(cfg.seed, path);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& dw : fine_dw) dw = sd_fine * normal(gen);

        for (std::size_t li = 0; li < levels.steps.size(); ++li) {
            const std::size_t n = levels.steps[li];
            const std::size_t group = levels.fine / n;
            const double dt = T / static_cast<double>(n);
            double w = 0.0;
            double discounted = x;
            for (std::size_t i = 0; i < n; ++i) {
                double db = 0.0;
                for (std::size_t k = 0; k < group; ++k) db += fine_dw[i * group + k];
                const double dw = db - shift * dt;
                const double t = static_cast<double>(i) * dt;
                const double growth = std::exp(r * t);
                double pi = 0.0;
                try {
                    pi = strategy(t, w, growth * discounted);
                } catch (const std::exception&) {
                    return PathStatus::strategy_error;
                }
                discounted += pi / growth * (excess * dt + sigma * dw);
                w += dw;
            }
            const double xt = std::exp(r * T) * discounted;
            if (!std::isfinite(xt)) return PathStatus::blow_up;
            w_out[li * cfg.n_paths + path] = w;
            x_out[li * cfg.n_paths + path] = xt;
        }
        return PathStatus::ok;
    }
};

struct MultiLevelSample {
    std::vector<double> w;
    std::vector<double> x;
};

MultiLevelSample simulate_levels(const MarketParams& mp, double x, const StrategyFn& strategy,
                                 const SimConfig& cfg, const Levels& levels, bool parallel) {
    if (cfg.n_paths == 0) throw ValidationError("simulation: n_paths must be >= 1");
    const Kernel kernel{mp, x, strategy, cfg, levels, measure_shift(mp, cfg)};
    MultiLevelSample out;
    out.w.assign(levels.steps.size() * cfg.n_paths, 0.0);
    out.x.assign(levels.steps.size() * cfg.n_paths, 0.0);
    std::vector<PathStatus> status(cfg.n_paths, PathStatus::ok);
    const auto n_paths = static_cast<std::ptrdiff_t>(cfg.n_paths);

    if (parallel) {
#pragma omp parallel
        {
            std::vector<double> fine_dw(levels.fine);
#pragma omp for schedule(static)
            for (std::ptrdiff_t path = 0; path < n_paths; ++path) {
                const auto p = static_cast<std::size_t>(path);
                status[p] = kernel.run(p, fine_dw, out.w, out.x);
            }
        }
    } else {
        std::vector<double> fine_dw(levels.fine);
        for (std::size_t p = 0; p < cfg.n_paths; ++p) status[p] = kernel.run(p, fine_dw, out.w, out.x);
    }

    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        if (status[p] == PathStatus::blow_up)
            throw NumericalError("path blow-up at path " + std::to_string(p), static_cast<double>(p));
        if (status[p] == PathStatus::strategy_error)
            throw NumericalError("feedback map singular on path " + std::to_string(p),
                                 static_cast<double>(p));
    }
    return out;
}

TerminalSample terminal_sample(const MarketParams& mp, double x, const StrategyFn& strategy,
                               const SimConfig& cfg, bool parallel) {
    if (cfg.n_steps == 0) throw ValidationError("simulation: n_steps must be >= 1");
    const Levels levels = make_levels({cfg.n_steps});
    auto sample = simulate_levels(mp, x, strategy, cfg, levels, parallel);
    return {std::move(sample.w), std::move(sample.x)};
}

StrategyFn closed_form_strategy(const ClosedFormSolution& sol) {
    // Fails fast on a singular map instead of per path.
    (void)strategy_feedback(sol, 0.0, 0.0, sol.x);
    return [&sol](double t, double w, double xt) { return strategy_feedback(sol, w, t, xt); };
}

struct LevelErrors {
    std::vector<double> max_error;
    std::vector<double> mean_error;
};

LevelErrors replication_errors(const ClosedFormSolution& sol, const SimConfig& cfg, const Levels& levels,
                               bool parallel) {
    const auto strategy = closed_form_strategy(sol);
    const auto sample = simulate_levels(sol.market, sol.x, strategy, cfg, levels, parallel);
    LevelErrors errs;
    for (std::size_t li = 0; li < levels.steps.size(); ++li) {
        double max_err = 0.0;
        double sum = 0.0;
        // Serial reduction in path order keeps the result schedule-independent.
        for (std::size_t p = 0; p < cfg.n_paths; ++p) {
            const std::size_t idx = li * cfg.n_paths + p;
            const double e = std::abs(sample.x[idx] - terminal_wealth(sol, sample.w[idx]));
            max_err = std::max(max_err, e);
            sum += e;
        }
        errs.max_error.push_back(max_err);
        errs.mean_error.push_back(sum / static_cast<double>(cfg.n_paths));
    }
    return errs;
}

ReplicationResult replication(const ClosedFormSolution& sol, const SimConfig& cfg, bool parallel) {
    if (cfg.n_steps == 0) throw ValidationError("simulation: n_steps must be >= 1");
    const Levels levels = make_levels({cfg.n_steps, 2 * cfg.n_steps});
    const auto errs = replication_errors(sol, cfg, levels, parallel);
    return {errs.max_error[0], errs.mean_error[0], std::log2(errs.mean_error[0] / errs.mean_error[1])};
}

}  // namespace

TerminalSample simulate_terminal_wealth(const MarketParams& mp, double x, const StrategyFn& strategy,
                                        const SimConfig& cfg) {
    return terminal_sample(mp, x, strategy, cfg, true);
}

TerminalSample simulate_terminal_wealth_serial(const MarketParams& mp, double x,
                                               const StrategyFn& strategy, const SimConfig& cfg) {
    return terminal_sample(mp, x, strategy, cfg, false);
}

ReplicationResult simulate_replication(const ClosedFormSolution& sol, const SimConfig& cfg) {
    return replication(sol, cfg, true);
}

ReplicationResult simulate_replication_serial(const ClosedFormSolution& sol, const SimConfig& cfg) {
    return replication(sol, cfg, false);
}

ConvergenceStudy replication_convergence(const ClosedFormSolution& sol, const SimConfig& cfg,
                                         const std::vector<std::size_t>& step_counts) {
    if (step_counts.size() < 2) throw ValidationError("convergence: need at least two step counts");
    const Levels levels = make_levels(step_counts);
    const auto errs = replication_errors(sol, cfg, levels, true);

    ConvergenceStudy study{step_counts, errs.max_error, errs.mean_error, 0.0};
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(step_counts.size());
    for (std::size_t i = 0; i < step_counts.size(); ++i) {
        const double lx = std::log2(static_cast<double>(step_counts[i]));
        const double ly = std::log2(errs.mean_error[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    study.slope = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    return study;
}

}  // namespace kmm
