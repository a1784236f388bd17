#pragma once

#include <stdexcept>
#include <string>

namespace blab {

// Invalid parameters or malformed spec strings.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Requested feature exists but not for this domain/strategy combination.
struct UnsupportedError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Point outside domain, non-finite integrand, excluded target point.
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Breakdown of a numerical procedure (indefinite Gram, non-PD metric, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed experiment configuration; maps to process exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace blab
