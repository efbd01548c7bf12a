#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kmm/errors.hpp"
#include "kmm/experiment.hpp"
#include "oracles.hpp"

using namespace kmm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kmm_test_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig with_output(const std::string& name, ExperimentConfig cfg = {}) {
    cfg.output.directory = scratch(name).string();
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Csv {
    std::string header;
    std::vector<std::vector<double>> rows;
};

Csv read_csv(const fs::path& p) {
    std::ifstream in(p);
    Csv csv;
    std::getline(in, csv.header);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        csv.rows.push_back(row);
    }
    return csv;
}

ExperimentConfig two_prior() {
    ExperimentConfig cfg;
    cfg.ambiguity.kind = ExperimentConfig::SodKind::discrete;
    cfg.ambiguity.points = {{0.15, 2.0 / 3.0}, {0.09, 1.0 / 3.0}};
    return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse_config(json::object());
    CHECK(cfg.market.mu0 == 0.1);
    CHECK(cfg.market.r == 0.05);
    CHECK(cfg.market.sigma == 0.2);
    CHECK(cfg.market.T == 4.0);
    CHECK(cfg.market.x0 == 1.0);
    CHECK(cfg.ambiguity.gamma == -0.5);
    CHECK(cfg.ambiguity.sigma_mu == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(cfg.utility.beta == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto full = parse_config(json::parse(R"({
        "market": {"mu0": 0.12, "T": 2},
        "ambiguity": {"gamma": 0.3, "sod": {"discrete": {"points": [{"mu": 0.1, "p": 0.25}, {"mu": 0.2, "p": 0.75}]}}},
        "utility": {"family": "hara", "beta": 0.5, "a": 1},
        "experiment": "fixed-point",
        "sweep": {"parameter": "beta", "grid": {"min": 0.1, "max": 0.5, "count": 5}},
        "numerics": {"gh_nodes": 64, "seed": 7}
    })"));
    CHECK(full.market.mu0 == 0.12);
    CHECK(full.ambiguity.points.size() == 2);
    CHECK(full.utility.family == "hara");
    CHECK(full.sweep.grid == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(full.numerics.seed == 7u);

    CHECK_THROWS_AS(parse_config(json::parse(R"({"markt": {}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"market": {"mu": 0.1}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"utility": {"beta": 1.5}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"utility": {"family": "log"}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"market": {"sigma": -1}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"market": {"sigma": "0.2"}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "plot"})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"numerics": {"gh_nodes": 300}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"sweep": {"parameter": "r"}})")), ValidationError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"output": {"format": "parquet"}})")), ValidationError);
    CHECK_THROWS_AS(
        parse_config(json::parse(R"({"ambiguity": {"sod": {"gaussian": {"sigma_mu": 0.1}, "discrete": {"points": []}}}})")),
        ValidationError);

    const fs::path shipped = fs::path(KMM_SOURCE_DIR) / "configs";
    for (const auto& entry : fs::directory_iterator(shipped)) CHECK_NOTHROW(load_config(entry.path()));
    CHECK_THROWS_AS(load_config(shipped / "missing.json"), ValidationError);
}

TEST_CASE("solve report") {
    const auto base = with_output("solve");
    const auto report = run_solve(base);
    CHECK(report["terminal_wealth"]["w2_coefficient"].get<double>() == doctest::Approx(0.0363).epsilon(5e-4 / 0.0363));
    CHECK(report["terminal_wealth"]["w_coefficient"].get<double>() == doctest::Approx(0.3230).epsilon(5e-4 / 0.3230));
    CHECK(report["merton"]["slope"].get<double>() == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(report["p"].get<double>() == doctest::Approx(oracle::kCrraP).epsilon(1e-14));
    CHECK(report["nu"].get<double>() == 0.25);
    CHECK(report["pi0"].get<double>() == doctest::Approx(oracle::kCrraPi0).epsilon(1e-14));
    CHECK(report["budget"]["relative_residual"].get<double>() < 1e-8);
    CHECK(fs::exists(fs::path(base.output.directory) / "solve.json"));

    auto neutral = with_output("solve_neutral");
    neutral.ambiguity.sigma_mu = 0.0;
    const auto merton = run_solve(neutral);
    CHECK(merton["no_ambiguity"].get<bool>());
    CHECK(merton["sigma0_sq"].is_null());
    CHECK_FALSE(merton.contains("p"));
    CHECK(merton["pi0"].get<double>() == doctest::Approx(1.875).epsilon(1e-14));

    auto cara = with_output("solve_cara");
    cara.utility.family = "cara";
    const auto cr = run_solve(cara);
    CHECK(cr["p"].get<double>() == doctest::Approx(oracle::kCaraP).epsilon(1e-14));
    CHECK(cr["q"].get<double>() == doctest::Approx(oracle::kCaraQ).epsilon(1e-14));
    CHECK(cr["c"].get<double>() == doctest::Approx(oracle::kCaraC).epsilon(1e-14));

    CHECK_THROWS_AS(run_solve(with_output("solve_discrete", two_prior())), ValidationError);

    auto singular = with_output("solve_singular");
    singular.ambiguity.gamma = 0.9;
    singular.ambiguity.sigma_mu = 1.0;
    singular.utility.beta = 0.1;
    try {
        run_solve(singular);
        FAIL("singular instance accepted");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("feedback map singular") != std::string::npos);
        CHECK(msg.find("gamma=0.9") != std::string::npos);
    }
}

TEST_CASE("frontier output") {
    auto cfg = with_output("frontier", two_prior());
    run_frontier(cfg);
    const auto csv = read_csv(fs::path(cfg.output.directory) / "frontier.csv");
    CHECK(csv.header == "lambda1,lambda2,m1,m2,kappa");
    REQUIRE(csv.rows.size() == 21);
    for (std::size_t i = 1; i < csv.rows.size(); ++i) {
        CHECK(csv.rows[i][0] > csv.rows[i - 1][0]);
        CHECK(csv.rows[i][2] >= csv.rows[i - 1][2]);
        CHECK(csv.rows[i][3] <= csv.rows[i - 1][3] + 1e-6);
    }
    const std::string first = slurp(fs::path(cfg.output.directory) / "frontier.csv");
    run_frontier(cfg);
    CHECK(slurp(fs::path(cfg.output.directory) / "frontier.csv") == first);

    cfg.frontier.grid_size = 2;
    run_frontier(cfg);
    CHECK(read_csv(fs::path(cfg.output.directory) / "frontier.csv").rows.size() == 2);

    CHECK_THROWS_AS(run_frontier(with_output("frontier_gauss")), ValidationError);
}

TEST_CASE("fixed point report") {
    auto cfg = with_output("fixed_point", two_prior());
    const auto rep = run_fixed_point(cfg);
    CHECK(rep["residual"].get<double>() < 1e-9);
    CHECK(rep["lambda"].size() == 2);
    CHECK(fs::exists(fs::path(cfg.output.directory) / "fixed_point.json"));
}

TEST_CASE("comparison curves") {
    auto cfg = with_output("compare");
    run_compare(cfg);
    const fs::path dir(cfg.output.directory);

    const auto eu = read_csv(dir / "utility_vs_mu.csv");
    CHECK(eu.header == "mu,eu_ambiguity,eu_neutral");
    int crossings = 0;
    for (std::size_t i = 1; i < eu.rows.size(); ++i) {
        const double d0 = eu.rows[i - 1][1] - eu.rows[i - 1][2], d1 = eu.rows[i][1] - eu.rows[i][2];
        if ((d0 > 0) != (d1 > 0)) ++crossings;
    }
    CHECK(crossings == 2);
    CHECK(eu.rows.front()[1] > eu.rows.front()[2]);
    CHECK(eu.rows.back()[1] > eu.rows.back()[2]);
    for (const auto& row : eu.rows)
        if (row[0] == 0.1) CHECK(row[1] < row[2]);

    const auto vf = read_csv(dir / "value_vs_sigma_mu.csv");
    CHECK(vf.header == "sigma_mu,u_ambiguity,u_neutral");
    CHECK(vf.rows[0][0] == 0.0);
    CHECK(vf.rows[0][1] == vf.rows[0][2]);
    for (std::size_t i = 1; i < vf.rows.size(); ++i) CHECK(vf.rows[i][1] >= vf.rows[i][2]);

    const auto fb = read_csv(dir / "feedback_vs_w.csv");
    CHECK(fb.header == "w,fraction_ambiguity,fraction_neutral");
    for (const auto& row : fb.rows) CHECK(row[2] == doctest::Approx(1.875).epsilon(1e-13));
}

TEST_CASE("parameter sweeps") {
    auto cfg = with_output("sweep_gamma");
    const auto files = run_sweep(cfg);
    REQUIRE(files.size() == 1);
    auto csv = read_csv(files[0]);
    CHECK(csv.header == "param,pi0");
    for (std::size_t i = 1; i < csv.rows.size(); ++i) CHECK(csv.rows[i][1] > csv.rows[i - 1][1]);

    cfg = with_output("sweep_beta");
    cfg.sweep.parameter = "beta";
    csv = read_csv(run_sweep(cfg)[0]);
    for (std::size_t i = 1; i < csv.rows.size(); ++i) CHECK(csv.rows[i][1] > csv.rows[i - 1][1]);

    cfg = with_output("sweep_sigma_mu");
    cfg.sweep.parameter = "sigma_mu";
    cfg.sweep.gammas = {0.0, 0.5};
    const auto series = run_sweep(cfg);
    REQUIRE(series.size() == 3);
    CHECK(series[1].filename() == "sweep_sigma_mu_gamma_0.csv");
    CHECK(series[2].filename() == "sweep_sigma_mu_gamma_0.5.csv");
    const auto neg = read_csv(series[0]), zero = read_csv(series[1]), pos = read_csv(series[2]);
    for (const auto& row : zero.rows) CHECK(row[1] == doctest::Approx(1.875).epsilon(1e-13));
    for (std::size_t i = 1; i < neg.rows.size(); ++i) {
        CHECK(neg.rows[i][1] < neg.rows[i - 1][1]);
        CHECK(pos.rows[i][1] > pos.rows[i - 1][1]);
    }

    auto bad = with_output("sweep_bad");
    bad.sweep.parameter = "beta";
    bad.utility.family = "cara";
    CHECK_THROWS_AS(run_sweep(bad), ValidationError);
}

TEST_CASE("verification suite") {
    const auto rep = run_verify(with_output("verify"));
    for (const auto& c : rep.checks) {
        CAPTURE(c.name);
        CAPTURE(c.message);
        CHECK(c.passed);
    }
    CHECK(rep.all_passed());
    CHECK(rep.checks.size() >= 10);

    auto singular = with_output("verify_singular");
    singular.ambiguity.gamma = 0.9;
    singular.ambiguity.sigma_mu = 1.0;
    singular.utility.beta = 0.1;
    const auto srep = run_verify(singular);
    CHECK_FALSE(srep.all_passed());
    bool reported = false;
    for (const auto& c : srep.checks)
        if (c.message.find("feedback map singular") != std::string::npos) reported = true;
    CHECK(reported);
    CHECK(srep.checks.size() == rep.checks.size());
    const auto j = json::parse(slurp(fs::path(singular.output.directory) / "verify.json"));
    CHECK_FALSE(j["all_passed"].get<bool>());
}

TEST_CASE("numbers round-trip through CSV") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1.7976931348623157e308, 5e-324, 0.0363307831876887})
        CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
    CHECK(format_number(0.5).find(',') == std::string::npos);
}
