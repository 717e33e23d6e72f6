#pragma once

#include <stdexcept>
#include <string>

namespace rbl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (D vs D', M×K vs M'×K', ...).
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// A value violates a documented precondition or type invariant.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Not enough observations to determine the requested quantity.
class InsufficientData : public Error {
public:
  using Error::Error;
};

/// A design matrix or point configuration lacks the rank needed for a unique answer.
class RankDeficient : public Error {
public:
  using Error::Error;
};

/// Input is too far from a Euclidean distance matrix to embed.
class NonEuclidean : public Error {
public:
  using Error::Error;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure, message carries the offending path.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace rbl
