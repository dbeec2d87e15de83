#pragma once

#include <stdexcept>
#include <string>

namespace hottbandit {

// Bad dimensions or out-of-range parameters supplied by the caller.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition (duplicate slate items, empty
// off-policy slate, uncoverable item, ...).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Randomized instance construction gave up after its retry budget.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hottbandit
