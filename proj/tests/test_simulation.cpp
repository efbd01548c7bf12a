#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "kmm/errors.hpp"
#include "kmm/simulation.hpp"
#include "oracles.hpp"

using namespace kmm;

namespace {

const MarketParams kMp(oracle::kMu0, oracle::kR, oracle::kSigma, oracle::kT, oracle::kX);

ClosedFormSolution base_crra() {
    return solve_crra(kMp, GaussianSOD(oracle::kMu0, oracle::kSigmaMu), oracle::kGamma, oracle::kBeta, 1.0);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST_CASE("zero strategy grows at the riskless rate exactly") {
    SimConfig cfg;
    cfg.n_paths = 200;
    cfg.n_steps = 97;
    const auto s = simulate_terminal_wealth(kMp, 1.0, [](double, double, double) { return 0.0; }, cfg);
    const double target = std::exp(oracle::kR * oracle::kT);
    for (double x : s.x) CHECK(x == target);
}

TEST_CASE("reproducible and schedule independent") {
    SimConfig cfg;
    cfg.n_paths = 300;
    cfg.n_steps = 64;
    cfg.seed = 99;
    const auto sol = base_crra();
    const auto a = simulate_replication(sol, cfg);
    const auto b = simulate_replication(sol, cfg);
    const auto c = simulate_replication_serial(sol, cfg);
    CHECK(a.max_pathwise_error == b.max_pathwise_error);
    CHECK(a.mean_error == b.mean_error);
    CHECK(a.slope_estimate == b.slope_estimate);
    CHECK(a.mean_error == c.mean_error);
    CHECK(a.max_pathwise_error == c.max_pathwise_error);

    const StrategyFn half = [](double, double, double x) { return 0.5 * x; };
    const auto p = simulate_terminal_wealth(kMp, 1.0, half, cfg);
    const auto q = simulate_terminal_wealth_serial(kMp, 1.0, half, cfg);
    CHECK(p.x == q.x);
    CHECK(p.w == q.w);

    cfg.seed = 100;
    CHECK(simulate_terminal_wealth(kMp, 1.0, half, cfg).w != p.w);
}

TEST_CASE("measure shifts move the terminal Brownian mean") {
    SimConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 4;
    const StrategyFn none = [](double, double, double) { return 0.0; };
    const double se = 4.0 * std::sqrt(oracle::kT / cfg.n_paths);

    CHECK(std::abs(mean(simulate_terminal_wealth(kMp, 1.0, none, cfg).w)) < se);
    cfg.measure = Measure::risk_neutral;
    CHECK(std::abs(mean(simulate_terminal_wealth(kMp, 1.0, none, cfg).w) + oracle::kNu * oracle::kT) < se);
    cfg.measure = Measure::prior;
    cfg.prior_mu = 0.15;
    CHECK(std::abs(mean(simulate_terminal_wealth(kMp, 1.0, none, cfg).w) - 0.25 * oracle::kT) < se);

    // discounted wealth is a Q-martingale for any strategy
    cfg.measure = Measure::risk_neutral;
    const auto s = simulate_terminal_wealth(kMp, 1.0, [](double, double, double x) { return 1.5 * x; }, cfg);
    const double m = mean(s.x) * std::exp(-oracle::kR * oracle::kT);
    CHECK(m == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Euler replication converges at strong order one half") {
    SimConfig cfg;
    cfg.n_paths = 1000;
    cfg.seed = 42;
    const auto study = replication_convergence(base_crra(), cfg, {256, 512, 1024});
    CHECK(std::abs(study.slope - 0.5) <= 0.15);
    CHECK(study.mean_error[2] < study.mean_error[0]);
    CHECK(study.max_error[0] >= study.mean_error[0]);

    cfg.n_steps = 256;
    const auto rep = simulate_replication(base_crra(), cfg);
    const auto pair = replication_convergence(base_crra(), cfg, {256, 512});
    CHECK(rep.mean_error == pair.mean_error[0]);
    CHECK(rep.slope_estimate == doctest::Approx(std::log2(pair.mean_error[0] / pair.mean_error[1])).epsilon(1e-14));
    CHECK(rep.slope_estimate > 0.0);

    CHECK_THROWS_AS(replication_convergence(base_crra(), cfg, {256, 300}), ValidationError);
}

TEST_CASE("failure reporting") {
    SimConfig cfg;
    cfg.n_paths = 10;
    cfg.n_steps = 16;
    try {
        simulate_terminal_wealth(kMp, 1.0, [](double, double, double) -> double {
            throw NumericalError("feedback map singular");
        }, cfg);
        FAIL("strategy failure swallowed");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("feedback map singular on path 0") != std::string::npos);
    }
    try {
        simulate_terminal_wealth(kMp, 1.0, [](double, double, double) {
            return std::numeric_limits<double>::infinity();
        }, cfg);
        FAIL("non-finite path accepted");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("path blow-up at path") != std::string::npos);
    }
    cfg.n_paths = 0;
    CHECK_THROWS_AS(simulate_terminal_wealth(kMp, 1.0, [](double, double, double) { return 0.0; }, cfg),
                    ValidationError);
}
