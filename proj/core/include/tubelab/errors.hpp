#pragma once

#include <stdexcept>
#include <string>

namespace tubelab {

/// Argument outside the domain an operation is defined on.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller violated a documented precondition.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative method failed to converge or produced a non-finite value.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested accuracy exceeds the configured resource budget.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A construction step produced an object that violates its invariants.
class ConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fit had too few usable points.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tubelab
