#pragma once

#include <stdexcept>

namespace decu {

// Vector arguments that must agree in length do not. Signals a caller bug;
// nothing is ever silently broadcast.
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// KL divergence, Bhattacharyya distance and differential entropy have no
// value when a variance entry is zero (point-mass component).
struct UndefinedForDegenerate : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a training loss goes non-finite (learning-rate blow-up or a
// corrupt batch); maps to a distinct process exit code in the CLI.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace decu
