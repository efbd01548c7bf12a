#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace kmm {

/// Input that violates a documented precondition or type invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: divergence, non-convergence, singular map.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what,
                            double detail = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), detail_(detail) {}

    /// Diagnostic attached by the failing routine (last residual, path index...).
    double detail() const noexcept { return detail_; }

private:
    double detail_;
};

}  // namespace kmm
