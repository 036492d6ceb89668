#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bdlab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A point was evaluated outside the closure of its domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// A caller-side precondition does not hold (bad argument, wrong ordering, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Nearest-point projection was asked for a point beyond its reach.
class ProjectionReachError : public Error {
public:
  using Error::Error;
};

/// Simulation aborted after exhausting the step-halving budget.
class SimulationError : public Error {
public:
  using Error::Error;
};

/// A deterministic solver did not reach its residual target.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Neumann data violate current conservation, <f, 1> != 0 on the boundary.
class CompatibilityError : public Error {
public:
  using Error::Error;
};

/// Kernel evaluated on the diagonal, where it diverges.
class SingularityError : public Error {
public:
  using Error::Error;
};

/// Argument outside the range covered by a finite record.
class OutOfRangeError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Reduces an angle to [0, 2pi).
inline double wrap_angle(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

/// Reduces an angle difference to (-pi, pi].
inline double wrap_difference(double delta) {
  double r = std::fmod(delta + kPi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - kPi;
}

/// Shortest "%g" rendering with the given significant digits; nan and inf spelled out.
inline std::string format_number(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace bdlab
