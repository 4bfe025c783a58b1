#pragma once

#include <stdexcept>
#include <string>

namespace pgdpo {

/// Input outside the mathematical domain of an operation (ordering, finiteness).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller violated an interface contract (missing tape data, wrong kernel family).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid constructor arguments for a problem, kernel or policy.
class ConstructionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite value produced inside a numerical routine.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, int layer)
        : std::runtime_error(what + " (layer " + std::to_string(layer) + ")"), layer_(layer) {}
    int layer() const noexcept { return layer_; }

private:
    int layer_;
};

/// Euler rollout produced a non-finite state.
class SimulationDiverged : public std::runtime_error {
public:
    SimulationDiverged(int step, long path)
        : std::runtime_error("simulation diverged at step " + std::to_string(step) +
                             " of path " + std::to_string(path)),
          step_(step), path_(path) {}
    int step() const noexcept { return step_; }
    long path() const noexcept { return path_; }

private:
    int step_;
    long path_;
};

/// Stage-1 training gave up after too many diverged iterations.
class TrainingAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Run configuration rejected; `field()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace pgdpo
