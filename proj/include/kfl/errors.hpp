#pragma once

#include <stdexcept>
#include <string>

namespace kfl {

// Base of every exception thrown by this library. Callers that only want
// "did it fail" semantics can catch this one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exponent outside the admissible range (p < 1, q < 1, or q > p).
struct InvalidExponentError : Error {
    using Error::Error;
};

// Value vector fails the positivity requirement of the octant.
struct OctantViolationError : Error {
    using Error::Error;
};

// Mismatched vector lengths, too few samples, or non-monotone parameters.
struct ShapeError : Error {
    using Error::Error;
};

// Input outside the mathematical domain of an operation (negative density,
// non-positive weight, ...).
struct DomainError : Error {
    using Error::Error;
};

// Grid resolution outside the supported range.
struct ResolutionError : Error {
    using Error::Error;
};

// Candidate potential whose induced density is not strictly positive.
struct NotKahlerError : Error {
    using Error::Error;
};

// Inputs that must agree (unit mean, shared geometry, matching metadata) do not.
struct InconsistencyError : Error {
    using Error::Error;
};

// NaN/Inf produced where a finite value is required.
struct NumericError : Error {
    using Error::Error;
};

// Input span has lower rank than the construction needs.
struct RankError : Error {
    using Error::Error;
};

// Triangle perimeter too large for the model space comparison.
struct NotComparableError : Error {
    using Error::Error;
};

// Flow left the space of admissible potentials.
struct FlowDegenerationError : Error {
    FlowDegenerationError(const std::string& what, double t) : Error(what), time(t) {}
    double time;
};

// Step rejection cascade exhausted; the time step cannot resolve the dynamics.
struct StiffnessError : Error {
    using Error::Error;
};

// Operation applied to a geometry kind it is not defined for.
struct KindError : Error {
    using Error::Error;
};

// Fit window contains no usable (positive, finite) samples.
struct FitDomainError : Error {
    using Error::Error;
};

// Family construction inputs fail a structural precheck.
struct ConstructionUnsuitableError : Error {
    using Error::Error;
};

// Empty or otherwise invalid parameter schedule.
struct ScheduleError : Error {
    using Error::Error;
};

// Precondition of an experiment violated (wrong exponent regime, ...).
struct PreconditionError : Error {
    using Error::Error;
};

// Bad command line or config input.
struct UsageError : Error {
    using Error::Error;
};

// File missing, unreadable, unwritable, or with a malformed payload.
struct IoError : Error {
    using Error::Error;
};

}  // namespace kfl
