#pragma once

#include <stdexcept>
#include <string>

namespace rotadic {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched dimensions or incompatible grids.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// An argument outside the mathematical domain of an operation (t <= 0, p < 1, x = y, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A request that is inconsistent with the configured group, norm or profile.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// A grid or sample budget would be exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// An operation precondition on its inputs does not hold (e.g. psi not mean-zero).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration input.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace rotadic
