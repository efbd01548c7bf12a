#pragma once

#include <string>
#include <variant>

#include "kmm/ambiguity.hpp"

namespace kmm {

/// U(x) = -exp(-alpha x) / alpha
struct Cara {
    double alpha;
};

/// U(x) = x^beta / beta, beta < 1, beta != 0
struct Crra {
    double beta;
};

/// U(x) = (x + a)^beta / beta
struct Hara {
    double beta;
    double a;
};

using Utility = std::variant<Cara, Crra, Hara>;

/// Throws ValidationError when the family parameters are out of range.
void validate(const Utility& u);

std::string family_name(const Utility& u);

double utility_value(const Utility& u, double x);
double marginal_utility(const Utility& u, double x);
/// I = (U')^{-1}, evaluated from log y so that extreme densities do not overflow.
double inverse_marginal_from_log(const Utility& u, double log_y);

/// Branch of phi matching the sign of U's range.
Branch ambiguity_branch(const Utility& u);

}  // namespace kmm
