#pragma once

#include <stdexcept>
#include <string>

namespace ratchetlab {

// Base of every exception the library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input data: malformed files, machines that fail validation,
// distributions that are not distributions. CLI exit code 2.
struct ValidationError : Error {
    using Error::Error;
};
struct ParseError : ValidationError {
    using ValidationError::ValidationError;
};
struct NegativeProbability : ValidationError {
    using ValidationError::ValidationError;
};
struct NotHermitian : ValidationError {
    using ValidationError::ValidationError;
};
struct NotPositive : ValidationError {
    using ValidationError::ValidationError;
};
struct NotUnitTrace : ValidationError {
    using ValidationError::ValidationError;
};
struct DimensionMismatch : ValidationError {
    using ValidationError::ValidationError;
};
struct UnknownSymbol : ValidationError {
    using ValidationError::ValidationError;
};
struct InvalidAlpha : ValidationError {
    using ValidationError::ValidationError;
};

// Structural preconditions of an operation not met. CLI exit code 3.
struct PreconditionError : Error {
    using Error::Error;
};
struct NotEpsilonMachine : PreconditionError {
    using PreconditionError::PreconditionError;
};
struct NotReverseEpsilonMachine : PreconditionError {
    using PreconditionError::PreconditionError;
};

// Resource/limit and numeric failures. CLI exit code 1.
struct EnumerationCapExceeded : Error {
    std::uint64_t required;
    EnumerationCapExceeded(std::uint64_t req, std::uint64_t cap)
        : Error("enumeration needs " + std::to_string(req) +
                " entries, cap is " + std::to_string(cap)),
          required(req) {}
};
struct BeliefCapExceeded : Error {
    using Error::Error;
};
struct NonConvergence : Error {
    double residual;
    NonConvergence(const std::string& what, double resid)
        : Error(what + " (residual " + std::to_string(resid) + ")"), residual(resid) {}
};
struct NotSynchronized : Error {
    using Error::Error;
};
struct SingularOutput : Error {
    using Error::Error;
};
struct DegenerateGeneric : Error {
    double gap;
    DegenerateGeneric(double g)
        : Error("generic combination spectrum nearly degenerate (gap " +
                std::to_string(g) + ")"),
          gap(g) {}
};
struct SupportViolation : Error {
    using Error::Error;
};
struct ConstructionError : Error {
    using Error::Error;
};

// Internal consistency checks (two routes to the same answer disagreeing).
struct VerificationError : Error {
    using Error::Error;
};

}  // namespace ratchetlab
