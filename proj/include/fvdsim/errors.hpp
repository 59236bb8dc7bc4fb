#pragma once

#include <stdexcept>
#include <string>

namespace fvd {

// Bad physical or numerical input (odd n_s, r <= 0, empty grid, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative method did not reach its tolerance.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double residual)
      : std::runtime_error(what + " (achieved residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Request exceeds what a method supports (dense oracle on too many sites).
class CapabilityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Waveform evaluated outside its breakpoints.
class ScheduleDomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Log-domain fit hit a non-positive sample, or a window could not be found.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WindowNotFound : public FitError {
 public:
  using FitError::FitError;
};

// Config parsing / validation failure; message carries the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File-system failure while emitting results; message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fvd
