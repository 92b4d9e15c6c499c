#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toda {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, inconsistent cutoffs, basis mismatches, malformed files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical guard fired: overflow, drift, truncation, invalid density, ...
class NumericalError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Energy drift exceeded tolerance while integrating.
class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, double time, std::size_t point_index)
      : NumericalError(what), time_(time), point_index_(point_index) {}

  double time() const noexcept { return time_; }
  std::size_t point_index() const noexcept { return point_index_; }

 private:
  double time_;
  std::size_t point_index_;
};

/// Coherent-state expansion does not fit in the truncated basis.
class TruncationError : public NumericalError {
 public:
  TruncationError(const std::string& what, double deficit, int required_n_max)
      : NumericalError(what), deficit_(deficit), required_n_max_(required_n_max) {}

  double deficit() const noexcept { return deficit_; }
  int required_n_max() const noexcept { return required_n_max_; }

 private:
  double deficit_;
  int required_n_max_;
};

class EigenError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidDensityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Bad input data for the analysis routines (windows, sample counts, alignment).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A fitted law cannot be inverted for a saturation time.
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace toda
