#pragma once

#include <stdexcept>
#include <string>

namespace qbe {

/// Argument outside the mathematical domain of an operation (negative radius, alpha past a pole, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite intermediate values or a root bracket that failed to converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent sizes, mismatched grids, invalid run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace qbe
