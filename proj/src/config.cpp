#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include "kmm/errors.hpp"
#include "kmm/experiment.hpp"
#include "kmm/numerics.hpp"

namespace kmm {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ValidationError("config: " + where + ": " + what);
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    require_object(j, where);
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

template <typename Int>
Int get_count(const json& j, const std::string& where) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) fail(where, "expected an integer");
    if (j.is_number_integer() && j.get<long long>() < 0) fail(where, "must be nonnegative");
    return j.get<Int>();
}

std::string get_string(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

// A grid is either an explicit array or {"min", "max", "count"}.
std::vector<double> get_grid(const json& j, const std::string& where) {
    std::vector<double> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(get_number(j[i], where + "[" + std::to_string(i) + "]"));
        return out;
    }
    check_keys(j, where, {"min", "max", "count"});
    if (!j.contains("min") || !j.contains("max") || !j.contains("count"))
        fail(where, "range needs min, max and count");
    double lo = get_number(j["min"], where + ".min");
    double hi = get_number(j["max"], where + ".max");
    auto n = get_count<std::size_t>(j["count"], where + ".count");
    if (n == 0) fail(where, "count must be positive");
    if (n == 1) return {lo};
    for (std::size_t i = 0; i < n; ++i)
        out.push_back((lo * static_cast<double>(n - 1 - i) + hi * static_cast<double>(i)) /
                      static_cast<double>(n - 1));
    return out;
}

void parse_market(const json& j, ExperimentConfig::Market& m) {
    check_keys(j, "market", {"mu0", "r", "sigma", "T", "x0"});
    if (j.contains("mu0")) m.mu0 = get_number(j["mu0"], "market.mu0");
    if (j.contains("r")) m.r = get_number(j["r"], "market.r");
    if (j.contains("sigma")) m.sigma = get_number(j["sigma"], "market.sigma");
    if (j.contains("T")) m.T = get_number(j["T"], "market.T");
    if (j.contains("x0")) m.x0 = get_number(j["x0"], "market.x0");
}

void parse_ambiguity(const json& j, ExperimentConfig::Ambiguity& a) {
    check_keys(j, "ambiguity", {"gamma", "sod"});
    if (j.contains("gamma")) a.gamma = get_number(j["gamma"], "ambiguity.gamma");
    if (!j.contains("sod")) return;
    const json& sod = j["sod"];
    check_keys(sod, "ambiguity.sod", {"gaussian", "discrete"});
    if (sod.size() != 1) fail("ambiguity.sod", "exactly one of gaussian, discrete");
    if (sod.contains("gaussian")) {
        const json& g = sod["gaussian"];
        check_keys(g, "ambiguity.sod.gaussian", {"sigma_mu"});
        a.kind = ExperimentConfig::SodKind::gaussian;
        if (g.contains("sigma_mu")) a.sigma_mu = get_number(g["sigma_mu"], "ambiguity.sod.gaussian.sigma_mu");
        return;
    }
    const json& d = sod["discrete"];
    check_keys(d, "ambiguity.sod.discrete", {"points"});
    if (!d.contains("points") || !d["points"].is_array())
        fail("ambiguity.sod.discrete", "points must be an array");
    a.kind = ExperimentConfig::SodKind::discrete;
    a.points.clear();
    for (std::size_t i = 0; i < d["points"].size(); ++i) {
        const std::string where = "ambiguity.sod.discrete.points[" + std::to_string(i) + "]";
        const json& pt = d["points"][i];
        check_keys(pt, where, {"mu", "p"});
        if (!pt.contains("mu") || !pt.contains("p")) fail(where, "needs mu and p");
        a.points.push_back({get_number(pt["mu"], where + ".mu"), get_number(pt["p"], where + ".p")});
    }
}

void parse_utility(const json& j, ExperimentConfig::UtilitySpec& u) {
    check_keys(j, "utility", {"family", "alpha", "beta", "a"});
    if (j.contains("family")) u.family = get_string(j["family"], "utility.family");
    if (j.contains("alpha")) u.alpha = get_number(j["alpha"], "utility.alpha");
    if (j.contains("beta")) u.beta = get_number(j["beta"], "utility.beta");
    if (j.contains("a")) u.a = get_number(j["a"], "utility.a");
}

void parse_sweep(const json& j, ExperimentConfig::Sweep& s) {
    check_keys(j, "sweep", {"parameter", "grid", "gammas"});
    if (j.contains("parameter")) s.parameter = get_string(j["parameter"], "sweep.parameter");
    if (j.contains("grid")) s.grid = get_grid(j["grid"], "sweep.grid");
    if (j.contains("gammas")) s.gammas = get_grid(j["gammas"], "sweep.gammas");
}

void parse_frontier(const json& j, ExperimentConfig::Frontier& f) {
    check_keys(j, "frontier", {"grid_size", "damping", "tol", "max_iter"});
    if (j.contains("grid_size")) f.grid_size = get_count<std::size_t>(j["grid_size"], "frontier.grid_size");
    if (j.contains("damping")) f.damping = get_number(j["damping"], "frontier.damping");
    if (j.contains("tol")) f.tol = get_number(j["tol"], "frontier.tol");
    if (j.contains("max_iter")) f.max_iter = get_count<int>(j["max_iter"], "frontier.max_iter");
}

void parse_compare(const json& j, ExperimentConfig::Compare& c) {
    check_keys(j, "compare", {"mu_grid", "sigma_mu_grid", "w_grid", "feedback_time"});
    if (j.contains("mu_grid")) c.mu_grid = get_grid(j["mu_grid"], "compare.mu_grid");
    if (j.contains("sigma_mu_grid")) c.sigma_mu_grid = get_grid(j["sigma_mu_grid"], "compare.sigma_mu_grid");
    if (j.contains("w_grid")) c.w_grid = get_grid(j["w_grid"], "compare.w_grid");
    if (j.contains("feedback_time")) c.feedback_time = get_number(j["feedback_time"], "compare.feedback_time");
}

void parse_numerics(const json& j, ExperimentConfig::Numerics& n) {
    check_keys(j, "numerics", {"gh_nodes", "seed", "mc_paths", "mc_steps"});
    if (j.contains("gh_nodes")) n.gh_nodes = get_count<int>(j["gh_nodes"], "numerics.gh_nodes");
    if (j.contains("seed")) n.seed = get_count<std::uint64_t>(j["seed"], "numerics.seed");
    if (j.contains("mc_paths")) n.mc_paths = get_count<std::size_t>(j["mc_paths"], "numerics.mc_paths");
    if (j.contains("mc_steps")) n.mc_steps = get_count<std::size_t>(j["mc_steps"], "numerics.mc_steps");
}

void parse_output(const json& j, ExperimentConfig::Output& o) {
    check_keys(j, "output", {"directory", "format"});
    if (j.contains("directory")) o.directory = get_string(j["directory"], "output.directory");
    if (j.contains("format")) o.format = get_string(j["format"], "output.format");
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc, "root",
               {"market", "ambiguity", "utility", "experiment", "sweep", "frontier", "compare",
                "numerics", "output"});
    ExperimentConfig cfg;
    if (doc.contains("market")) parse_market(doc["market"], cfg.market);
    if (doc.contains("ambiguity")) parse_ambiguity(doc["ambiguity"], cfg.ambiguity);
    if (doc.contains("utility")) parse_utility(doc["utility"], cfg.utility);
    if (doc.contains("experiment")) cfg.experiment = get_string(doc["experiment"], "experiment");
    if (doc.contains("sweep")) parse_sweep(doc["sweep"], cfg.sweep);
    if (doc.contains("frontier")) parse_frontier(doc["frontier"], cfg.frontier);
    if (doc.contains("compare")) parse_compare(doc["compare"], cfg.compare);
    if (doc.contains("numerics")) parse_numerics(doc["numerics"], cfg.numerics);
    if (doc.contains("output")) parse_output(doc["output"], cfg.output);
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config: " + path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

MarketParams make_market(const ExperimentConfig& cfg) {
    const auto& m = cfg.market;
    return MarketParams(m.mu0, m.r, m.sigma, m.T, m.x0);
}

Utility make_utility(const ExperimentConfig& cfg) {
    const auto& u = cfg.utility;
    Utility out;
    if (u.family == "cara")
        out = Cara{u.alpha};
    else if (u.family == "crra")
        out = Crra{u.beta};
    else if (u.family == "hara")
        out = Hara{u.beta, u.a};
    else
        throw ValidationError("config: utility.family must be cara, crra or hara");
    validate(out);
    return out;
}

GaussianSOD make_gaussian_sod(const ExperimentConfig& cfg) {
    if (cfg.ambiguity.kind != ExperimentConfig::SodKind::gaussian)
        throw ValidationError("config: experiment requires a gaussian sod");
    return GaussianSOD(cfg.market.mu0, cfg.ambiguity.sigma_mu);
}

DiscreteSOD make_discrete_sod(const ExperimentConfig& cfg) {
    if (cfg.ambiguity.kind != ExperimentConfig::SodKind::discrete)
        throw ValidationError("config: experiment requires a discrete sod");
    return DiscreteSOD(cfg.ambiguity.points);
}

void validate_config(const ExperimentConfig& cfg) {
    make_market(cfg);
    Utility u = make_utility(cfg);
    PowerAmbiguity(cfg.ambiguity.gamma, ambiguity_branch(u));
    if (cfg.ambiguity.kind == ExperimentConfig::SodKind::gaussian)
        GaussianSOD(cfg.market.mu0, cfg.ambiguity.sigma_mu);
    else
        DiscreteSOD{cfg.ambiguity.points};

    static const std::set<std::string> experiments = {"solve",   "frontier", "fixed-point",
                                                      "compare", "sweep",    "verify"};
    if (!experiments.count(cfg.experiment))
        fail("experiment", "unknown experiment '" + cfg.experiment + "'");

    static const std::set<std::string> params = {"gamma", "beta", "sigma_mu"};
    if (!params.count(cfg.sweep.parameter))
        fail("sweep.parameter", "must be gamma, beta or sigma_mu");
    if (!all_finite(cfg.sweep.grid)) fail("sweep.grid", "values must be finite");
    if (!all_finite(cfg.sweep.gammas)) fail("sweep.gammas", "values must be finite");
    for (double g : cfg.sweep.gammas)
        if (!(g < 1.0)) fail("sweep.gammas", "gamma must be below 1");

    const auto& f = cfg.frontier;
    if (f.grid_size < 2) fail("frontier.grid_size", "must be at least 2");
    if (!(f.damping > 0.0 && f.damping <= 1.0)) fail("frontier.damping", "must lie in (0, 1]");
    if (!(f.tol > 0.0)) fail("frontier.tol", "must be positive");
    if (f.max_iter < 1) fail("frontier.max_iter", "must be positive");

    const auto& c = cfg.compare;
    if (!all_finite(c.mu_grid)) fail("compare.mu_grid", "values must be finite");
    if (!all_finite(c.w_grid)) fail("compare.w_grid", "values must be finite");
    if (!all_finite(c.sigma_mu_grid)) fail("compare.sigma_mu_grid", "values must be finite");
    for (double s : c.sigma_mu_grid)
        if (s < 0.0) fail("compare.sigma_mu_grid", "values must be nonnegative");
    if (c.feedback_time && !(*c.feedback_time >= 0.0 && *c.feedback_time < cfg.market.T))
        fail("compare.feedback_time", "must lie in [0, T)");

    const auto& n = cfg.numerics;
    if (n.gh_nodes < 1 || n.gh_nodes > kMaxGaussHermiteNodes / 2)
        fail("numerics.gh_nodes", "must lie in [1, 256]");
    if (n.mc_paths < 1) fail("numerics.mc_paths", "must be positive");
    if (n.mc_steps < 1) fail("numerics.mc_steps", "must be positive");

    if (cfg.output.directory.empty()) fail("output.directory", "must not be empty");
    if (cfg.output.format != "csv") fail("output.format", "only csv is supported");
}

std::vector<double> default_sweep_grid(const std::string& parameter) {
    std::vector<double> g;
    if (parameter == "gamma") {
        for (int k = 0; k < 40; ++k) g.push_back((k - 30) / 10.0);
    } else if (parameter == "beta") {
        for (int k = 1; k <= 18; ++k) g.push_back(k / 20.0);
    } else if (parameter == "sigma_mu") {
        for (int k = 0; k <= 20; ++k) g.push_back(k / 200.0);
    } else {
        throw ValidationError("config: sweep.parameter must be gamma, beta or sigma_mu");
    }
    return g;
}

}  // namespace kmm
