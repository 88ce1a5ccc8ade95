#pragma once

#include <stdexcept>
#include <string>

namespace atomize {

// Operand shapes do not agree.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operand outside an op's numeric domain (sqrt of a negative, 1/0, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Invalid user-supplied configuration or spec.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    DivergenceError(int epoch, std::string term)
        : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                             " in term " + term),
          epoch(epoch),
          term(std::move(term)) {}
    int epoch;
    std::string term;
};

// Input files disagree with each other (checkpoint vs dataset, ...).
struct MismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace atomize
