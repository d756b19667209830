#ifndef SLOC_ERRORS_HPP
#define SLOC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sloc {

// Error taxonomy used across the library.  The CLI maps these onto exit
// codes, so the distinction matters: configuration and input problems are
// usage errors, capability and numerical problems are runtime failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unknown catalog name, malformed option value, contradictory settings.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Structurally invalid data: weights that do not sum to one, duplicate
// atoms, dimension mismatches, non-finite densities.
class InputError : public Error {
public:
    using Error::Error;
};

// An operation was called outside its stated preconditions.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// The request is well formed but outside the supported regime
// (support too large for the exact solver, rejection rate too low, ...).
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Iteration failed to converge, eigensolve failed, step budget exhausted.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace sloc

#endif
