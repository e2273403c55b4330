#pragma once

#include <stdexcept>
#include <string>

namespace ldlab {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad parameters, unknown names, malformed configuration.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An operation was refused because the model does not satisfy the
/// structural hypothesis it needs (log-concavity, equal edge exponents, ...).
class HypothesisGate : public Error {
public:
    using Error::Error;
};

/// Numerical procedure failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace ldlab
