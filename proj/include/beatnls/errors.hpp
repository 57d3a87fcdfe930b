#pragma once

#include <stdexcept>
#include <string>

namespace beat {

// Invalid arguments supplied by a caller (bad sextuple length, empty sets, ...).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Evaluation outside the domain of a formula, e.g. a negative square-root argument.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Iterative solver did not converge.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computed quantity disagrees with its closed form. Indicates a bug.
struct VerificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A small divisor fell below the admissible threshold.
struct DivisorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input or output file could not be parsed or written.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace beat
