#include "kmm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "kmm/errors.hpp"
#include "kmm/simulation.hpp"

namespace kmm {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

fs::path output_dir(const ExperimentConfig& cfg) {
    fs::path dir(cfg.output.directory);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

class CsvWriter {
public:
    explicit CsvWriter(std::string header) { text_ = std::move(header) + "\n"; }

    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) text_ += ',';
            text_ += format_number(v);
            first = false;
        }
        text_ += '\n';
    }

    void save(const fs::path& path) const { write_file(path, text_); }

private:
    std::string text_;
};

// Evaluates body(i) for i in [0, n) concurrently; the first exception (by index) is rethrown.
template <typename T, typename Body>
std::vector<T> parallel_map(std::size_t n, Body&& body) {
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = body(k);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::string describe(const ExperimentConfig& cfg, double gamma, double sigma_mu) {
    std::ostringstream os;
    os << "family=" << cfg.utility.family << ", gamma=" << format_number(gamma)
       << ", sigma_mu=" << format_number(sigma_mu);
    return os.str();
}

ClosedFormSolution solve_with_context(const ExperimentConfig& cfg, const MarketParams& mp,
                                      const GaussianSOD& sod, double gamma, const Utility& u) {
    try {
        return solve_closed_form(mp, sod, gamma, u, mp.x0());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " [" + describe(cfg, gamma, sod.sigma_mu) + "]",
                             e.detail());
    }
}

double utility_scale(const Utility& u) {
    if (const auto* c = std::get_if<Cara>(&u)) return c->alpha;
    if (const auto* c = std::get_if<Crra>(&u)) return c->beta;
    return std::get<Hara>(u).beta;
}

double pi0(const ClosedFormSolution& sol) { return strategy_feedback(sol, 0.0, 0.0, sol.x); }

json budget_json(const ClosedFormSolution& sol, int gh) {
    const double target = sol.x * std::exp(sol.market.r() * sol.market.horizon());
    const double got = budget_by_quadrature(sol, gh);
    return {{"target", target},
            {"quadrature", got},
            {"relative_residual", std::abs(got - target) / std::abs(target)}};
}

FrontierOptions frontier_options(const ExperimentConfig& cfg) {
    FrontierOptions o;
    o.gh_nodes = cfg.numerics.gh_nodes;
    return o;
}

std::vector<double> or_default(const std::vector<double>& v, std::vector<double> fallback) {
    return v.empty() ? fallback : v;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back((lo * (n - 1 - i) + hi * i) / (n - 1));
    return g;
}

}  // namespace

json run_solve(const ExperimentConfig& cfg) {
    const MarketParams mp = make_market(cfg);
    const Utility u = make_utility(cfg);
    const GaussianSOD sod = make_gaussian_sod(cfg);
    const double gamma = cfg.ambiguity.gamma;
    const int gh = cfg.numerics.gh_nodes;

    const ClosedFormSolution sol = solve_with_context(cfg, mp, sod, gamma, u);
    const MertonBaseline merton = merton_baseline(mp, u, mp.x0());
    const ClosedFormSolution neutral =
        solve_with_context(cfg, mp, GaussianSOD(mp.mu0(), 0.0), gamma, u);

    json report;
    report["family"] = family_name(u);
    report["gamma"] = gamma;
    report["sigma_mu"] = sod.sigma_mu;
    report["nu"] = market_price_of_risk(mp);
    report["no_ambiguity"] = !sol.sigma0_sq.has_value();
    if (sol.sigma0_sq) {
        const double scale = utility_scale(u);
        const double T = mp.horizon();
        report["sigma0_sq"] = *sol.sigma0_sq;
        report["p"] = sol.p;
        report["q"] = sol.q;
        report["c"] = sol.c;
        report["quadratic_residual"] = quadratic_residual(sol);
        json tw = {{"form", std::holds_alternative<Cara>(u) ? "linear" : "exponential"},
                   {"w2_coefficient", sol.p / (2.0 * T * scale)},
                   {"w_coefficient", sol.q / scale},
                   {"constant", sol.c / scale}};
        if (const auto* h = std::get_if<Hara>(&u)) tw["shift"] = -h->a;
        report["terminal_wealth"] = tw;
    } else {
        report["sigma0_sq"] = nullptr;
    }
    report["pi0"] = pi0(sol);
    report["budget"] = budget_json(sol, gh);
    report["value_function"] = value_function(sol, sod, gh);
    report["warnings"] = sol.warnings;
    report["merton"] = {{"slope", merton.slope},
                        {"constant", merton.constant},
                        {"investment", merton.investment},
                        {"pi0", pi0(neutral)},
                        {"value_function", value_function(neutral, sod, gh)}};

    write_json(output_dir(cfg) / "solve.json", report);
    return report;
}

std::vector<FrontierPoint> run_frontier(const ExperimentConfig& cfg) {
    const MarketParams mp = make_market(cfg);
    const Utility u = make_utility(cfg);
    const DiscreteSOD sod = make_discrete_sod(cfg);
    if (sod.size() != 2) throw ValidationError("frontier: requires exactly two priors");

    auto points = trace_frontier(cfg.frontier.grid_size, sod, mp, u, mp.x0(), frontier_options(cfg));
    CsvWriter csv("lambda1,lambda2,m1,m2,kappa");
    for (const auto& pt : points)
        csv.row({pt.lambda.lambda[0], pt.lambda.lambda[1], pt.b[0], pt.b[1], pt.kappa});
    csv.save(output_dir(cfg) / "frontier.csv");
    return points;
}

json run_fixed_point(const ExperimentConfig& cfg) {
    const MarketParams mp = make_market(cfg);
    const Utility u = make_utility(cfg);
    const DiscreteSOD sod = make_discrete_sod(cfg);
    const PowerAmbiguity pa(cfg.ambiguity.gamma, ambiguity_branch(u));
    const auto& f = cfg.frontier;

    const FixedPointResult res =
        fixed_point_lambda(pa, sod, mp, u, mp.x0(), f.damping, f.tol, f.max_iter, frontier_options(cfg));
    json mu = json::array();
    for (const auto& pt : sod.points()) mu.push_back(pt.mu);
    json report = {{"family", family_name(u)},
                   {"gamma", cfg.ambiguity.gamma},
                   {"mu", mu},
                   {"lambda", res.lambda.lambda},
                   {"expected_utility", res.point.b},
                   {"objective", res.objective},
                   {"weighted_value", res.point.J},
                   {"kappa", res.point.kappa},
                   {"budget", res.point.budget},
                   {"residual", res.residual},
                   {"iterations", res.iterations}};
    write_json(output_dir(cfg) / "fixed_point.json", report);
    return report;
}

void run_compare(const ExperimentConfig& cfg) {
    const MarketParams mp = make_market(cfg);
    const Utility u = make_utility(cfg);
    const GaussianSOD sod = make_gaussian_sod(cfg);
    const double gamma = cfg.ambiguity.gamma;
    const int gh = cfg.numerics.gh_nodes;
    const auto dir = output_dir(cfg);

    const ClosedFormSolution amb = solve_with_context(cfg, mp, sod, gamma, u);
    const ClosedFormSolution neutral =
        solve_with_context(cfg, mp, GaussianSOD(mp.mu0(), 0.0), gamma, u);

    const auto mu_grid = or_default(cfg.compare.mu_grid, linspace(0.02, 0.18, 33));
    CsvWriter eu("mu,eu_ambiguity,eu_neutral");
    for (double mu : mu_grid) {
        const double nu_mu = nu_of_mu(mp, mu);
        eu.row({mu, expected_utility_given_mu(amb, nu_mu), expected_utility_given_mu(neutral, nu_mu)});
    }
    eu.save(dir / "utility_vs_mu.csv");

    const auto s_grid = or_default(cfg.compare.sigma_mu_grid, linspace(0.0, 0.1, 21));
    struct Pair {
        double amb, neutral;
    };
    const auto values = parallel_map<Pair>(s_grid.size(), [&](std::size_t i) {
        const GaussianSOD si(mp.mu0(), s_grid[i]);
        const ClosedFormSolution a = solve_with_context(cfg, mp, si, gamma, u);
        return Pair{value_function(a, si, gh), value_function(neutral, si, gh)};
    });
    CsvWriter vf("sigma_mu,u_ambiguity,u_neutral");
    for (std::size_t i = 0; i < s_grid.size(); ++i) vf.row({s_grid[i], values[i].amb, values[i].neutral});
    vf.save(dir / "value_vs_sigma_mu.csv");

    const double t = cfg.compare.feedback_time.value_or(0.5 * mp.horizon());
    const auto w_grid = or_default(cfg.compare.w_grid, linspace(-2.0, 2.0, 41));
    auto fraction = [t](const ClosedFormSolution& sol, double w) {
        const double xt = wealth_feedback(sol, w, t);
        return strategy_feedback(sol, w, t, xt) / xt;
    };
    CsvWriter fb("w,fraction_ambiguity,fraction_neutral");
    for (double w : w_grid) fb.row({w, fraction(amb, w), fraction(neutral, w)});
    fb.save(dir / "feedback_vs_w.csv");
}

std::vector<fs::path> run_sweep(const ExperimentConfig& cfg) {
    const MarketParams mp = make_market(cfg);
    const std::string& param = cfg.sweep.parameter;
    const auto grid = cfg.sweep.grid.empty() ? default_sweep_grid(param) : cfg.sweep.grid;
    if (param == "sigma_mu") make_gaussian_sod(cfg);
    if (param == "beta" && cfg.utility.family == "cara")
        throw ValidationError("sweep: beta sweep requires crra or hara utility");
    if (cfg.ambiguity.kind != ExperimentConfig::SodKind::gaussian)
        throw ValidationError("sweep: requires a gaussian sod");

    auto series = [&](double gamma) {
        return parallel_map<double>(grid.size(), [&](std::size_t i) {
            ExperimentConfig c = cfg;
            c.ambiguity.gamma = gamma;
            if (param == "gamma") c.ambiguity.gamma = grid[i];
            if (param == "beta") c.utility.beta = grid[i];
            if (param == "sigma_mu") c.ambiguity.sigma_mu = grid[i];
            const Utility u = make_utility(c);
            PowerAmbiguity(c.ambiguity.gamma, ambiguity_branch(u));
            const GaussianSOD sod(mp.mu0(), c.ambiguity.sigma_mu);
            return pi0(solve_with_context(c, mp, sod, c.ambiguity.gamma, u));
        });
    };
    auto save = [&](const std::vector<double>& pis, const fs::path& path) {
        CsvWriter csv("param,pi0");
        for (std::size_t i = 0; i < grid.size(); ++i) csv.row({grid[i], pis[i]});
        csv.save(path);
    };

    const auto dir = output_dir(cfg);
    std::vector<fs::path> written;
    written.push_back(dir / ("sweep_" + param + ".csv"));
    save(series(cfg.ambiguity.gamma), written.back());

    if (param != "gamma") {
        std::vector<double> gammas = cfg.sweep.gammas;
        if (gammas.empty() && param == "sigma_mu") gammas = {0.0, 0.5};
        for (double g : gammas) {
            char tag[32];
            std::snprintf(tag, sizeof tag, "%.9g", g);
            written.push_back(dir / ("sweep_" + param + "_gamma_" + tag + ".csv"));
            save(series(g), written.back());
        }
    }
    return written;
}

bool VerifyReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

json VerifyReport::to_json() const {
    json arr = json::array();
    for (const auto& c : checks) {
        json j = {{"name", c.name}, {"threshold", c.threshold}, {"passed", c.passed}};
        j["value"] = std::isfinite(c.value) ? json(c.value) : json(nullptr);
        if (!c.message.empty()) j["message"] = c.message;
        arr.push_back(j);
    }
    return {{"all_passed", all_passed()}, {"checks", arr}};
}

namespace {

struct DrawRanges {
    std::mt19937_64 rng;
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
};

struct Instance {
    MarketParams mp;
    GaussianSOD sod;
    double gamma;
};

Instance random_instance(DrawRanges& d) {
    const double mu0 = d.uniform(0.03, 0.15);
    const double r = d.uniform(0.0, 0.03);
    const double sigma = d.uniform(0.1, 0.4);
    const double T = d.uniform(0.5, 5.0);
    const double x = d.uniform(0.5, 2.0);
    MarketParams mp(mu0, r, sigma, T, x);
    const double s0 = std::sqrt(d.uniform(0.5, 10.0));
    return {mp, GaussianSOD(mu0, sigma_mu_from_sigma0(s0, mp)), d.uniform(-2.0, 0.5)};
}

template <typename F>
void record(VerifyReport& rep, const std::string& name, double threshold, F&& measure) {
    try {
        const double v = measure();
        rep.checks.push_back({name, v, threshold, std::isfinite(v) && v <= threshold, ""});
    } catch (const std::exception& e) {
        rep.checks.push_back({name, std::nan(""), threshold, false, e.what()});
    }
}

double relative_budget_error(const ClosedFormSolution& sol, int gh) {
    const double target = sol.x * std::exp(sol.market.r() * sol.market.horizon());
    return std::abs(budget_by_quadrature(sol, gh) - target) / std::abs(target);
}

}  // namespace

VerifyReport run_verify(const ExperimentConfig& cfg) {
    const MarketParams mp = make_market(cfg);
    const Utility u = make_utility(cfg);
    const double gamma = cfg.ambiguity.gamma;
    const int gh = cfg.numerics.gh_nodes;
    const GaussianSOD sod = cfg.ambiguity.kind == ExperimentConfig::SodKind::gaussian
                                ? make_gaussian_sod(cfg)
                                : GaussianSOD(mp.mu0(), sigma_mu_from_sigma0(2.0, mp));
    const double beta = std::holds_alternative<Cara>(u) ? 1.0 / 3.0 : utility_scale(u);
    const double alpha = cfg.utility.alpha;
    const double shift = std::holds_alternative<Hara>(u) ? cfg.utility.a : 0.5;
    const std::vector<Utility> families = {Cara{alpha}, Crra{beta}, Hara{beta, shift}};

    VerifyReport rep;

    for (const auto* fam : {"crra", "cara"}) {
        record(rep, std::string("quadratic_residual_") + fam, 1e-12, [&] {
            DrawRanges d{std::mt19937_64(cfg.numerics.seed)};
            double worst = 0.0;
            int accepted = 0;
            while (accepted < 200) {
                const Instance in = random_instance(d);
                const double b = d.uniform(-2.0, 0.9);
                const double a = d.uniform(0.5, 3.0);
                if (std::string(fam) == "crra" && std::abs(b) < 0.05) continue;
                try {
                    const auto sol = std::string(fam) == "crra"
                                         ? solve_crra(in.mp, in.sod, in.gamma, b, in.mp.x0())
                                         : solve_cara(in.mp, in.sod, in.gamma, a, in.mp.x0());
                    worst = std::max(worst, std::abs(quadratic_residual(sol)));
                    ++accepted;
                } catch (const NumericalError&) {
                    // inadmissible draw, resample
                }
            }
            return worst;
        });
    }

    for (const auto& fu : families) {
        const std::string name = family_name(fu);
        record(rep, "budget_" + name, 1e-8, [&] {
            double worst = relative_budget_error(solve_closed_form(mp, sod, gamma, fu, mp.x0()), gh);
            DrawRanges d{std::mt19937_64(cfg.numerics.seed + 1)};
            int accepted = 0;
            while (accepted < 20) {
                const Instance in = random_instance(d);
                try {
                    const auto sol = solve_closed_form(in.mp, in.sod, in.gamma, fu, in.mp.x0());
                    if (!std::holds_alternative<Cara>(fu) && sol.p / beta > 0.5) continue;
                    worst = std::max(worst, relative_budget_error(sol, gh));
                    ++accepted;
                } catch (const NumericalError&) {
                }
            }
            return worst;
        });
    }

    record(rep, "first_order_condition_" + family_name(u), 1e-6, [&] {
        const auto sol = solve_closed_form(mp, sod, gamma, u, mp.x0());
        std::vector<double> ratios;
        for (double k : {-4.0, -2.0, 0.0, 2.0, 4.0})
            ratios.push_back(first_order_condition_ratio(sol, k * std::sqrt(mp.horizon()) * 0.5, gh));
        const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
        return (*hi - *lo) / std::abs(ratios[2]);
    });

    for (const auto& fu : {families[1], families[0]}) {
        record(rep, "merton_limit_" + family_name(fu), 1e-3, [&] {
            const GaussianSOD wide(mp.mu0(), sigma_mu_from_sigma0(1e4, mp));
            const auto sol = solve_closed_form(mp, wide, gamma, fu, mp.x0());
            const auto m = merton_baseline(mp, fu, mp.x0());
            const double s = utility_scale(fu);
            return std::max({std::abs(sol.p), std::abs(sol.q / s - m.slope), std::abs(sol.c / s - m.constant)});
        });
    }

    const DiscreteSOD dsod = cfg.ambiguity.kind == ExperimentConfig::SodKind::discrete
                                 ? make_discrete_sod(cfg)
                                 : DiscreteSOD({{0.15, 2.0 / 3.0}, {0.09, 1.0 / 3.0}});
    std::vector<WeightVector> lambdas;
    {
        const std::size_t n = dsod.size();
        std::vector<double> up(n), flat(n, 1.0), down(n);
        for (std::size_t i = 0; i < n; ++i) {
            up[i] = 1.0 + 2.0 * static_cast<double>(i);
            down[i] = 1.0 + 2.0 * static_cast<double>(n - 1 - i);
        }
        for (const auto& raw : {up, flat, down}) lambdas.push_back(normalize_weights(raw, dsod));
    }
    FrontierOptions fopts;
    fopts.gh_nodes = gh;
    for (const auto& fu : {families[1], families[0]}) {
        record(rep, "separability_" + family_name(fu), 1e-7, [&] {
            const auto s = separability_check(fu, mp, dsod, {0.5, 1.0, 2.0}, lambdas, fopts);
            return std::max(s.rank_one_defect, s.distortion_defect);
        });
    }

    SimConfig sim;
    sim.n_paths = cfg.numerics.mc_paths;
    sim.n_steps = cfg.numerics.mc_steps;
    sim.seed = cfg.numerics.seed;

    record(rep, "replication_slope_" + family_name(u), 0.15, [&] {
        const auto sol = solve_closed_form(mp, sod, gamma, u, mp.x0());
        const std::size_t s = cfg.numerics.mc_steps;
        return std::abs(replication_convergence(sol, sim, {s, 2 * s, 4 * s}).slope - 0.5);
    });

    record(rep, "zero_strategy_control", 4.0 * std::numeric_limits<double>::epsilon(), [&] {
        const auto sample = simulate_terminal_wealth(
            mp, mp.x0(), [](double, double, double) { return 0.0; }, sim);
        const double target = mp.x0() * std::exp(mp.r() * mp.horizon());
        double worst = 0.0;
        for (double xt : sample.x) worst = std::max(worst, std::abs(xt - target) / target);
        return worst;
    });

    record(rep, "conjugacy", 1e-10, [&] {
        const PowerAmbiguity pa(gamma, Branch::positive);
        double worst_gap = 0.0;
        for (double y : {0.1, 0.5, 1.0, 2.0, 10.0}) {
            const double psi = psi_eval(pa, y);
            const double xs = phi_prime_inv(pa, y);
            worst_gap = std::max(worst_gap, std::abs(psi - (phi_eval(pa, xs) - xs * y)) / (1.0 + std::abs(psi)));
            for (double x : {0.05, 0.3, 1.0, 3.0, 20.0})
                if (phi_eval(pa, x) - x * y > psi + 1e-12 * (1.0 + std::abs(psi))) return 1.0;
        }
        return worst_gap;
    });

    write_json(output_dir(cfg) / "verify.json", rep.to_json());
    return rep;
}

}  // namespace kmm
