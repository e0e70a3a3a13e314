#pragma once

#include <stdexcept>
#include <string>

namespace grftail {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad JSON, wrong dimensions, invalid parameters).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The requested threshold has no solution in the admissible region.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double minimum_b)
        : Error(what), minimum_b_(minimum_b) {}

    [[nodiscard]] double minimum_b() const noexcept { return minimum_b_; }

private:
    double minimum_b_;
};

/// Factorization or evaluation broke down numerically.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace grftail
