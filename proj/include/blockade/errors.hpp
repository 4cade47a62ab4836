#pragma once

#include <stdexcept>

namespace blockade {

// Bad or ambiguous user input (config files, record files, flags).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Solver failures: degenerate steady states, step-size collapse, non-stationary input.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Estimates that cannot be trusted with the data at hand.
class StatisticsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace blockade
