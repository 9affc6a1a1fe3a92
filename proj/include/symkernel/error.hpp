#pragma once

#include <stdexcept>
#include <string>

namespace symkernel {

/// Base of every error raised by the library. The CLI maps these to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unknown or malformed catalog label.
class CatalogError : public Error {
public:
    using Error::Error;
};

/// Root data that violates its algebraic invariants (singular base, non-integral coefficients).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Argument outside the operation's domain (outside the chamber, t <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Point or group element that does not lie on its model manifold.
class ModelError : public Error {
public:
    using Error::Error;
};

/// An envelope was requested outside the distance regime of the bound (d(x,o) < 2).
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// Non-finite value reached a report.
class ComputationError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature ran out of budget before reaching tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double partial, double abs_error)
        : Error(what), partial_value(partial), error_estimate(abs_error) {}

    double partial_value;
    double error_estimate;
};

/// Not enough data for a critical-exponent regression.
class EstimationError : public Error {
public:
    using Error::Error;
};

} // namespace symkernel
