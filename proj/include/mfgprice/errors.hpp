#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfgprice {

// Numerical failures carry the time at which the solver gave up, so callers
// can report where on [0, T] the integration broke down.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double t)
      : std::runtime_error(what), time_(t) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Thrown when 1 + a2_3 falls below the configured floor and the price
// volatility ratio stops being well defined.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Thrown when a coefficient magnitude exceeds the overflow guard.  When the
// blow-up is the Riccati one (negative terminal x^2 weight), predicted_time
// holds the analytic explosion time, otherwise it is NaN.
class BlowupError : public NumericalError {
 public:
  BlowupError(const std::string& what, double t,
              double predicted_time = std::nan(""))
      : NumericalError(what, t), predicted_time_(predicted_time) {}

  double predicted_time() const noexcept { return predicted_time_; }

 private:
  double predicted_time_;
};

}  // namespace mfgprice
