#pragma once

#include <stdexcept>
#include <string>

namespace mxp {

// Error taxonomy. Everything derives from Error so callers can catch broadly;
// the CLI maps the categories to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or rank disagreement between operands.
struct DimensionError : Error {
  using Error::Error;
};

// A value outside the legal domain of an operation (e.g. -inf fed to matmul).
struct DomainError : Error {
  using Error::Error;
};

// Bad caller-supplied parameter (range violations, ragged tables, ...).
struct ArgumentError : Error {
  using Error::Error;
};

// A reduction slice or mask column with no admissible entry.
struct DegenerateError : Error {
  using Error::Error;
};

// NaN/inf surfaced where finite values are required; aborts training.
struct NumericFault : Error {
  using Error::Error;
};

// Malformed file: bad magic, truncated payload, header/payload mismatch.
struct FormatError : Error {
  using Error::Error;
};

// Invariant broken inside the engine itself (never the caller's fault).
struct InternalError : Error {
  using Error::Error;
};

}  // namespace mxp
