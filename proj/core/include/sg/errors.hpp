#pragma once

#include <stdexcept>
#include <string>

namespace sg {

// Shape/dimension mismatch between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Violated operation precondition (empty input, missing channel, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Bad or inconsistent configuration. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value produced during evaluation; carries the layer index
// where it was first observed (-1 when not layer-specific). CLI maps
// this to exit code 3.
struct OverflowError : std::runtime_error {
    int layer = -1;
    OverflowError(const std::string& msg, int layer_index)
        : std::runtime_error(msg), layer(layer_index) {}
};

// Mathematical domain error (zero norm denominator, empty vector, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace sg
