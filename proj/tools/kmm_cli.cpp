#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kmm/errors.hpp"
#include "kmm/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2, kVerification = 3 };

struct Overrides {
    std::string config;
    std::uint64_t seed = 0;
    int gh_nodes = 0;
    std::string out;
};

kmm::ExperimentConfig resolve(const std::string& experiment, const Overrides& o, const CLI::App& app) {
    kmm::ExperimentConfig cfg = o.config.empty() ? kmm::ExperimentConfig{} : kmm::load_config(o.config);
    cfg.experiment = experiment;
    if (app.count("--seed")) cfg.numerics.seed = o.seed;
    if (app.count("--gh-nodes")) cfg.numerics.gh_nodes = o.gh_nodes;
    if (app.count("--out")) cfg.output.directory = o.out;
    kmm::validate_config(cfg);
    return cfg;
}

int dispatch(const kmm::ExperimentConfig& cfg) {
    const std::string& e = cfg.experiment;
    if (e == "solve") {
        std::cout << kmm::run_solve(cfg).dump(2) << "\n";
    } else if (e == "frontier") {
        const auto pts = kmm::run_frontier(cfg);
        std::cout << "frontier: " << pts.size() << " points -> " << cfg.output.directory << "/frontier.csv\n";
    } else if (e == "fixed-point") {
        std::cout << kmm::run_fixed_point(cfg).dump(2) << "\n";
    } else if (e == "compare") {
        kmm::run_compare(cfg);
        std::cout << "compare: wrote utility_vs_mu.csv, value_vs_sigma_mu.csv, feedback_vs_w.csv to "
                  << cfg.output.directory << "\n";
    } else if (e == "sweep") {
        for (const auto& p : kmm::run_sweep(cfg)) std::cout << "sweep: " << p.string() << "\n";
    } else if (e == "verify") {
        const auto rep = kmm::run_verify(cfg);
        for (const auto& c : rep.checks) {
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << kmm::format_number(c.value)
                      << "  threshold=" << kmm::format_number(c.threshold);
            if (!c.message.empty()) std::cout << "  (" << c.message << ")";
            std::cout << "\n";
        }
        return rep.all_passed() ? kOk : kVerification;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal investment under smooth ambiguity: experiment runner"};
    app.require_subcommand(1);

    Overrides o;
    app.add_option("--config", o.config, "JSON experiment config (defaults to the base parameter set)")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Override numerics.seed");
    app.add_option("--gh-nodes", o.gh_nodes, "Override numerics.gh_nodes (1..256)");
    app.add_option("--out", o.out, "Override output.directory");

    const char* names[] = {"solve", "frontier", "fixed-point", "compare", "sweep", "verify"};
    for (const char* n : names) app.add_subcommand(n, std::string("Run the ") + n + " experiment")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        const auto cfg = resolve(app.get_subcommands().front()->get_name(), o, app);
        return dispatch(cfg);
    } catch (const kmm::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const kmm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
}
