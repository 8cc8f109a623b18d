#pragma once

#include <stdexcept>
#include <string>

namespace olpi {

// Base type for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A policy returned (or a simulation encountered) a control outside U_k(x_k).
struct InfeasibleControlError : Error {
  using Error::Error;
};

// A trajectory failed the dynamics/constraint feasibility check.
struct FeasibilityError : Error {
  using Error::Error;
};

// Trajectory shape disagrees with the problem horizon.
struct ShapeError : Error {
  using Error::Error;
};

// A control set lacks the enumerate capability, or an enumerated-state lookup
// missed (the per-stage state lists are not closed under the dynamics).
struct EnumerationError : Error {
  using Error::Error;
};

// Brute-force enumeration exceeded the configured sequence cap.
struct CapExceededError : Error {
  using Error::Error;
};

// A candidate set does not contain the incumbent control.
struct IncumbentExclusionError : Error {
  using Error::Error;
};

// A builder produced a candidate that fails the membership test.
struct InfeasibleCandidateError : Error {
  using Error::Error;
};

// Membership filtering removed every candidate of a coordinate set, including
// the incumbent; signals an inconsistent problem definition.
struct EmptyCoordinateSetError : Error {
  using Error::Error;
};

// A generated policy failed the consistency check.
struct ConsistencyError : Error {
  using Error::Error;
};

// Regressor training produced a non-finite loss.
struct TrainingDivergenceError : Error {
  using Error::Error;
};

// Invalid experiment or scenario configuration; the message names the field.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace olpi
