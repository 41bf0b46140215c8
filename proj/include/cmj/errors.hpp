#pragma once

#include <stdexcept>

namespace cmj {

// Bad user input or configuration (CLI exit code 2).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A callback broke its declared contract (probability out of range, τ above
// its stated bound, negative sampled age, ...).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Event cap, atom cap, runaway chain.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation undefined at this point of the state space (e.g. b(t) = 0).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cmj
