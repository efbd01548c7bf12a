#include "kmm/utility.hpp"

#include <cmath>

#include "kmm/errors.hpp"

namespace kmm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_beta(double beta) {
    if (!std::isfinite(beta) || beta >= 1.0 || beta == 0.0)
        throw ValidationError("utility: beta must be < 1 and nonzero");
}

}  // namespace

void validate(const Utility& u) {
    std::visit(overloaded{
                   [](const Cara& c) {
                       if (!std::isfinite(c.alpha) || c.alpha <= 0.0)
                           throw ValidationError("utility: alpha must be positive");
                   },
                   [](const Crra& c) { check_beta(c.beta); },
                   [](const Hara& h) {
                       check_beta(h.beta);
                       if (!std::isfinite(h.a) || h.a < 0.0)
                           throw ValidationError("utility: HARA shift a must be >= 0");
                   },
               },
               u);
}

std::string family_name(const Utility& u) {
    return std::visit(overloaded{
                          [](const Cara&) { return std::string("cara"); },
                          [](const Crra&) { return std::string("crra"); },
                          [](const Hara&) { return std::string("hara"); },
                      },
                      u);
}

double utility_value(const Utility& u, double x) {
    return std::visit(overloaded{
                          [x](const Cara& c) { return -std::exp(-c.alpha * x) / c.alpha; },
                          [x](const Crra& c) { return std::pow(x, c.beta) / c.beta; },
                          [x](const Hara& h) { return std::pow(x + h.a, h.beta) / h.beta; },
                      },
                      u);
}

double marginal_utility(const Utility& u, double x) {
    return std::visit(overloaded{
                          [x](const Cara& c) { return std::exp(-c.alpha * x); },
                          [x](const Crra& c) { return std::pow(x, c.beta - 1.0); },
                          [x](const Hara& h) { return std::pow(x + h.a, h.beta - 1.0); },
                      },
                      u);
}

double inverse_marginal_from_log(const Utility& u, double log_y) {
    return std::visit(overloaded{
                          [log_y](const Cara& c) { return -log_y / c.alpha; },
                          [log_y](const Crra& c) { return std::exp(log_y / (c.beta - 1.0)); },
                          [log_y](const Hara& h) { return std::exp(log_y / (h.beta - 1.0)) - h.a; },
                      },
                      u);
}

Branch ambiguity_branch(const Utility& u) {
    return std::visit(overloaded{
                          [](const Cara&) { return Branch::negative; },
                          [](const Crra& c) { return c.beta > 0.0 ? Branch::positive : Branch::negative; },
                          [](const Hara& h) { return h.beta > 0.0 ? Branch::positive : Branch::negative; },
                      },
                      u);
}

}  // namespace kmm
