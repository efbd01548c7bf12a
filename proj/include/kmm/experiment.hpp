#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmm/ambiguity.hpp"
#include "kmm/closed_form.hpp"
#include "kmm/frontier.hpp"
#include "kmm/market.hpp"
#include "kmm/utility.hpp"

namespace kmm {

/// Experiment description. Defaults reproduce the base parameter set:
/// mu0 = 0.1, r = 0.05, sigma = 0.2, x = 1, sigma0 = 2 (sigma_mu = 0.05),
/// beta = 1/3, gamma = -0.5, T = 4.
struct ExperimentConfig {
    struct Market {
        double mu0 = 0.1;
        double r = 0.05;
        double sigma = 0.2;
        double T = 4.0;
        double x0 = 1.0;
    } market;

    enum class SodKind { gaussian, discrete };
    struct Ambiguity {
        double gamma = -0.5;
        SodKind kind = SodKind::gaussian;
        double sigma_mu = 0.05;
        std::vector<PriorPoint> points;
    } ambiguity;

    struct UtilitySpec {
        std::string family = "crra";
        double alpha = 1.0;
        double beta = 1.0 / 3.0;
        double a = 0.0;
    } utility;

    std::string experiment = "solve";

    struct Sweep {
        std::string parameter = "gamma";
        std::vector<double> grid;    ///< empty: per-parameter default grid
        std::vector<double> gammas;  ///< extra series for beta / sigma_mu sweeps
    } sweep;

    struct Frontier {
        std::size_t grid_size = 21;
        double damping = 0.5;
        double tol = 1e-9;
        int max_iter = 1000;
    } frontier;

    struct Compare {
        std::vector<double> mu_grid;
        std::vector<double> sigma_mu_grid;
        std::vector<double> w_grid;
        std::optional<double> feedback_time;  ///< default T / 2
    } compare;

    struct Numerics {
        int gh_nodes = 128;
        std::uint64_t seed = 42;
        std::size_t mc_paths = 1000;
        std::size_t mc_steps = 256;
    } numerics;

    struct Output {
        std::string directory = "out";
        std::string format = "csv";
    } output;
};

/// Parses a config document; unknown keys and out-of-range values throw ValidationError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Checks every field against the constraints of the underlying types.
void validate_config(const ExperimentConfig& cfg);

MarketParams make_market(const ExperimentConfig& cfg);
Utility make_utility(const ExperimentConfig& cfg);
GaussianSOD make_gaussian_sod(const ExperimentConfig& cfg);
DiscreteSOD make_discrete_sod(const ExperimentConfig& cfg);

/// Default grids used when the config leaves them empty.
std::vector<double> default_sweep_grid(const std::string& parameter);

/// Writes solve.json and returns the report.
nlohmann::json run_solve(const ExperimentConfig& cfg);
/// Writes frontier.csv (lambda1,lambda2,m1,m2,kappa).
std::vector<FrontierPoint> run_frontier(const ExperimentConfig& cfg);
/// Writes fixed_point.json.
nlohmann::json run_fixed_point(const ExperimentConfig& cfg);
/// Writes utility_vs_mu.csv, value_vs_sigma_mu.csv and feedback_vs_w.csv.
void run_compare(const ExperimentConfig& cfg);
/// Writes sweep_<param>.csv (param,pi0) plus one sweep_<param>_gamma_<g>.csv per extra gamma.
/// Returns the written file paths.
std::vector<std::filesystem::path> run_sweep(const ExperimentConfig& cfg);

struct VerifyCheck {
    std::string name;
    double value;
    double threshold;
    bool passed;
    std::string message;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_passed() const;
    nlohmann::json to_json() const;
};

/// Runs the invariant suites, writes verify.json. Individual check failures
/// (including numerical errors) are recorded; the suite always completes.
VerifyReport run_verify(const ExperimentConfig& cfg);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_number(double v);

}  // namespace kmm
