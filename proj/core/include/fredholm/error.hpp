#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace fredholm {

using Complex = std::complex<double>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A kernel (or right-hand side) produced a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double s, double t)
      : Error(what + " at (s, t) = (" + std::to_string(s) + ", " + std::to_string(t) + ")"),
        s_(s), t_(t) {}

  double s() const noexcept { return s_; }
  double t() const noexcept { return t_; }

 private:
  double s_;
  double t_;
};

/// Invalid name, parameter or option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A discretized operator failed a structural check (negative spectrum, failed factorization).
class DiscretizationError : public Error {
 public:
  using Error::Error;
};

/// A requested computation exceeds a configured cost cap.
class CostLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace fredholm
