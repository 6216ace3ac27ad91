#pragma once

// Shared vocabulary: complex type, normalized physical constants, error
// hierarchy and (value, error-estimate) pairs.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hg {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Internal unit system: eps0 = mu0 = c = 1. SI inputs are rescaled at I/O.
inline constexpr double kEps0 = 1.0;
inline constexpr double kMu0 = 1.0;
inline constexpr double kLightSpeed = 1.0;

namespace si {
inline constexpr double kEps0 = 8.8541878128e-12;      // F/m
inline constexpr double kMu0 = 1.25663706212e-6;       // H/m
inline constexpr double kLightSpeed = 299792458.0;     // m/s
}  // namespace si

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the stated mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class PoleProximityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class GapViolationError : public DomainError {
 public:
  using DomainError::DomainError;
};

class PeriodicityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

// Laplace inversion of a sampler that does not decay inside the window.
class NonDecayingError : public Error {
 public:
  using Error::Error;
};

// Malformed medium file or run configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

// Result of a numerical approximation together with its error estimate.
// Callers decide pass/fail; math code only reports.
template <class T>
struct Estimated {
  T value{};
  double error = 0.0;
  bool converged = true;
};

inline double sqr(double x) { return x * x; }

}  // namespace hg
