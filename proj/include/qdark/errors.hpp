#pragma once

#include <stdexcept>
#include <string>

namespace qdark {

/// Base class of every exception thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad angular-momentum arguments: parity mismatch, triangle violation,
/// or a projection out of range.
struct InvalidAngularMomentum : Error {
  using Error::Error;
};

/// Basis enumeration (or an oracle domain) exceeded its state budget.
struct CapacityError : Error {
  using Error::Error;
};

/// An operator application produced amplitudes outside the target basis.
struct OutOfSectorError : Error {
  using Error::Error;
};

/// Operands built against incompatible mode sets or bases.
struct SectorMismatchError : Error {
  using Error::Error;
};

/// A physical constraint was violated (no-dark-state regime, bad recipe).
struct ConstraintViolation : Error {
  using Error::Error;
};

/// A construction evaluated to the zero vector.
struct ZeroStateError : ConstraintViolation {
  using ConstraintViolation::ConstraintViolation;
};

/// Requested photon truncation leaves too much coherent tail mass.
struct TruncationError : ConstraintViolation {
  using ConstraintViolation::ConstraintViolation;
};

/// Malformed user input: CLI flags, config files, serialized payloads.
struct ParseError : Error {
  using Error::Error;
};

/// Operation requires a nonzero state vector.
struct ZeroVectorError : Error {
  using Error::Error;
};

}  // namespace qdark
