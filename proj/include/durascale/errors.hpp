#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace durascale {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// exit codes, so new errors should derive from one of the two families below.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: malformed tapes, degenerate samples, too few points.
class DataError : public Error {
public:
  using Error::Error;
};

/// Arguments outside a function's mathematical domain.
class DomainError : public Error {
public:
  using Error::Error;
};

class ParamError : public DomainError {
public:
  using DomainError::DomainError;
};

class MalformedRow : public DataError {
public:
  MalformedRow(std::size_t row, const std::string &what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}

  /// 1-based line number in the source, header included.
  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

class EmptyTape : public DataError {
public:
  EmptyTape() : DataError("tape contains no trade records") {}
};

class EmptyInput : public DataError {
public:
  using DataError::DataError;
};

class DegenerateSeries : public DataError {
public:
  using DataError::DataError;
};

class DegenerateSample : public DataError {
public:
  using DataError::DataError;
};

class TooFewSamples : public DataError {
public:
  using DataError::DataError;
};

class TooFewEnsembles : public DataError {
public:
  using DataError::DataError;
};

class InsufficientBins : public DataError {
public:
  using DataError::DataError;
};

class EmptyGroup : public DataError {
public:
  using DataError::DataError;
};

class MixedEstimators : public DataError {
public:
  using DataError::DataError;
};

class LineageMismatch : public DataError {
public:
  using DataError::DataError;
};

/// A numerical routine could not reach its tolerance.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

} // namespace durascale
