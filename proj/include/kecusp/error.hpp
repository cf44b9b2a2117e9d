#pragma once

#include <stdexcept>
#include <string>

namespace kecusp {

/// Invalid arguments or violated type invariants (bad domain, bad divisor, ...).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Point outside the chart of a model potential.
class ChartError : public InputError {
public:
    using InputError::InputError;
};

/// Newton / continuation failure that cannot be reported through a SolveReport.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Diagnostic precondition failure (grid mismatch, positivity loss, ...).
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Config validation failure; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace kecusp
