#pragma once

#include <stdexcept>
#include <string>

namespace specnet {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input, violated precondition, inconsistent configuration.
struct ValidationError : Error {
    using Error::Error;
};

// Statistic undefined on this instance (e.g. zero degree dispersion).
struct DegenerateError : Error {
    using Error::Error;
};

// A retry/search budget ran out or the request is combinatorially impossible.
struct InfeasibleError : Error {
    using Error::Error;
};

// Numerical routine failed (eigensolver breakdown, singular matrix, ...).
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace specnet
