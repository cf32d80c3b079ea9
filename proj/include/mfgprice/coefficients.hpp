#pragma once

// Backward-in-time system for the ten coefficients of the quadratic value
// ansatz
//   u(x, q, w, t) = a0 + a1_1 x + a1_2 q + a1_3 w
//                 + a2_1 x^2 + a2_2 xq + a2_3 xw + a2_4 q^2 + a2_5 qw + a2_6 w^2.
// Plugging the ansatz into the dynamic-programming PDE with quadratic trading
// cost and eliminating the price volatility through
//   sigma^P = -sigma^S (c + a2_2) / (1 + a2_3)
// closes the system: grouping by monomials in (x, q, w) yields one ODE per
// coefficient.  The system is integrated backward from t = T with classical
// RK4 on a uniform grid and queried through cubic Hermite interpolation whose
// slopes are the solver's own right-hand sides, so interpolated values agree
// with the integrator to the same order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mfgprice/errors.hpp"
#include "mfgprice/model.hpp"

namespace mfgprice {

using Vec10 = std::array<double, 10>;

// Component order shared by the solver, the CSV schema, and the tests.
enum CoeffIndex : std::size_t {
  A0 = 0,
  A1_1,
  A1_2,
  A1_3,
  A2_1,
  A2_2,
  A2_3,
  A2_4,
  A2_5,
  A2_6,
};

inline constexpr double kSingularityFloor = 1e-6;  // minimum allowed 1 + a2_3
inline constexpr double kOverflowGuard = 1e12;     // |a| beyond this is blow-up

// Analytic explosion time of the x^2 coefficient when the terminal x^2
// weight is negative: the closed-form denominator c + 2 c2_xx (T - t)
// vanishes at t = T - c / (2 |c2_xx|), provided that lies in [0, T).
inline std::optional<double> riccati_explosion_time(double c, double c2_xx,
                                                    double T) {
  if (c2_xx >= 0.0) return std::nullopt;
  const double t_star = T - c / (2.0 * -c2_xx);
  if (t_star < 0.0) return std::nullopt;
  return t_star;
}

// a2_1 decouples from the rest and solves in closed form:
//   a2_1(t) = c c2_xx / (c + 2 c2_xx (T - t)).
inline double a21_closed_form(double c, double c2_xx, double T, double t) {
  const double denom = c + 2.0 * c2_xx * (T - t);
  if (denom <= 0.0) {
    std::ostringstream msg;
    msg << "x^2 coefficient explodes before t = " << t;
    if (auto t_star = riccati_explosion_time(c, c2_xx, T)) {
      msg << "; finite-time blow-up at t = " << *t_star
          << " (T - c / (2 |c2_xx|))";
      throw BlowupError(msg.str(), t, *t_star);
    }
    throw BlowupError(msg.str(), t);
  }
  return c * c2_xx / denom;
}

// Right-hand side of d a / dt for the full ten-component state.  Throws
// SingularityError whenever the volatility ratio denominator 1 + a2_3 falls
// below the floor, including at RK4 stage points.
inline Vec10 coefficient_rates(const ModelSpec& spec, double t, const Vec10& a) {
  const double c = spec.c;
  const double b0 = spec.supply_drift.k0(t);
  const double b1 = spec.supply_drift.k1(t);
  const double b2 = spec.supply_drift.k2(t);
  const double s0 = spec.supply_vol.k0(t);
  const double s1 = spec.supply_vol.k1(t);
  const double s2 = spec.supply_vol.k2(t);

  const double a11 = a[A1_1], a12 = a[A1_2], a13 = a[A1_3];
  const double a21 = a[A2_1], a22 = a[A2_2], a23 = a[A2_3];
  const double a24 = a[A2_4], a25 = a[A2_5], a26 = a[A2_6];

  const double one_a23 = 1.0 + a23;
  if (one_a23 < kSingularityFloor) {
    std::ostringstream msg;
    msg << "volatility ratio denominator 1 + a2_3 = " << one_a23
        << " fell below " << kSingularityFloor << " at t = " << t;
    throw SingularityError(msg.str(), t);
  }
  // k is the ratio -sigma^P / sigma^S; D collects the second-derivative
  // terms that multiply squared volatilities.
  const double k = (c + a22) / one_a23;
  const double D = a25 * k - a26 * k * k - a24;

  Vec10 r;
  r[A2_1] = 2.0 * a21 * a21 / c;
  r[A2_2] = c * b1 * a23 - b1 * a22 + 2.0 * a21 * a22 / c;
  r[A2_3] = c * b2 * a23 - b2 * a22 + 2.0 * a21 * one_a23 / c;
  r[A1_1] = c * b0 * a23 - b0 * a22 + 2.0 * a11 * a21 / c;
  r[A2_4] = c * a25 * b1 - 2.0 * a24 * b1 + s1 * s1 * D + a22 * a22 / (2.0 * c);
  r[A2_5] = 2.0 * c * a26 * b1 + c * a25 * b2 - a25 * b1 - 2.0 * a24 * b2 +
            2.0 * s1 * s2 * D + a22 * one_a23 / c;
  r[A2_6] = 2.0 * c * a26 * b2 - a25 * b2 + s2 * s2 * D +
            one_a23 * one_a23 / (2.0 * c);
  r[A0] = c * a13 * b0 - a12 * b0 + s0 * s0 * D + a11 * a11 / (2.0 * c);
  r[A1_2] = c * a25 * b0 + c * a13 * b1 - 2.0 * a24 * b0 - a12 * b1 +
            2.0 * s0 * s1 * D + a11 * a22 / c;
  r[A1_3] = 2.0 * c * a26 * b0 + c * a13 * b2 - a25 * b0 - a12 * b2 +
            2.0 * s0 * s2 * D + a11 * one_a23 / c;
  return r;
}

namespace detail {

template <std::size_t N, class F>
std::array<double, N> rk4_step(const F& f, double t, const std::array<double, N>& y,
                               double h) {
  auto axpy = [](const std::array<double, N>& base, double scale,
                 const std::array<double, N>& dir) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = base[i] + scale * dir[i];
    return out;
  };
  const auto k1 = f(t, y);
  const auto k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
  const auto k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
  const auto k4 = f(t + h, axpy(y, h, k3));
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

inline void check_overflow(const std::array<double, 10>& y, double t, double c,
                           double c2_xx, double T) {
  for (double v : y) {
    if (std::isfinite(v) && std::abs(v) <= kOverflowGuard) continue;
    std::ostringstream msg;
    msg << "coefficient magnitude exceeded " << kOverflowGuard << " at t = " << t;
    if (auto t_star = riccati_explosion_time(c, c2_xx, T)) {
      msg << "; consistent with finite-time blow-up at t = " << *t_star
          << " (T - c / (2 |c2_xx|))";
      throw BlowupError(msg.str(), t, *t_star);
    }
    throw BlowupError(msg.str(), t);
  }
}

}  // namespace detail

// Solved coefficient trajectories on a uniform grid over [0, T], with cubic
// Hermite evaluation between nodes.  Node values and node slopes are exactly
// the integrator's, so `values_at` reproduces grid nodes bitwise.
class CoefficientPath {
 public:
  const ModelSpec& spec() const { return spec_; }
  std::size_t nodes() const { return values_.size(); }
  std::span<const double> grid() const { return grid_; }
  double step() const { return spec_.T / static_cast<double>(values_.size() - 1); }

  const Vec10& node_values(std::size_t k) const { return values_[k]; }
  const Vec10& node_rates(std::size_t k) const { return rates_[k]; }

  Vec10 values_at(double t) const {
    const auto [k, s, h] = locate(t);
    if (s == 0.0) return values_[k];
    if (s == 1.0) return values_[k + 1];
    const double s2 = s * s;
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s2 * (3.0 - 2.0 * s);
    const double h11 = s2 * (s - 1.0);
    Vec10 out;
    for (std::size_t i = 0; i < 10; ++i)
      out[i] = h00 * values_[k][i] + h10 * h * rates_[k][i] +
               h01 * values_[k + 1][i] + h11 * h * rates_[k + 1][i];
    return out;
  }

  // Time derivative of the coefficients at t, from the analytic right-hand
  // side applied to the interpolated values.
  Vec10 rates_at(double t) const {
    return coefficient_rates(spec_, clamp_time(t), values_at(t));
  }

 private:
  friend CoefficientPath solve_coefficients(const ModelSpec&, double);

  double clamp_time(double t) const {
    return std::min(std::max(t, 0.0), spec_.T);
  }

  // Interval index and local parameter for t; tolerates 1e-12 of overshoot.
  std::tuple<std::size_t, double, double> locate(double t) const {
    const double T = spec_.T;
    if (t < -1e-12 || t > T + 1e-12)
      throw std::out_of_range("time " + std::to_string(t) +
                              " outside coefficient horizon [0, " +
                              std::to_string(T) + "]");
    t = clamp_time(t);
    const std::size_t n = values_.size() - 1;
    std::size_t k = static_cast<std::size_t>(t / T * static_cast<double>(n));
    if (k >= n) k = n - 1;
    while (k > 0 && t < grid_[k]) --k;
    while (k + 1 < n && t >= grid_[k + 1]) ++k;
    const double h = grid_[k + 1] - grid_[k];
    double s = (t - grid_[k]) / h;
    if (t == grid_[k]) s = 0.0;
    if (t == grid_[k + 1]) s = 1.0;
    return {k, s, h};
  }

  ModelSpec spec_;
  std::vector<double> grid_;
  std::vector<Vec10> values_;
  std::vector<Vec10> rates_;
};

// Integrates the full ten-component system backward from t = T with RK4 on a
// uniform grid of width `step` (default T/1000 when step <= 0).  The terminal
// node stores psi_to_terminal_conditions(spec.terminal) bitwise.
inline CoefficientPath solve_coefficients(const ModelSpec& spec,
                                          double step = 0.0) {
  if (!(spec.T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (step <= 0.0) step = spec.T * 1e-3;
  const double intervals = spec.T / step;
  if (intervals < 10.0 - 1e-9)
    throw std::invalid_argument("step must divide [0, T] into at least 10 intervals");
  const std::size_t n =
      static_cast<std::size_t>(std::llround(std::max(intervals, 10.0)));

  CoefficientPath path;
  path.spec_ = spec;
  path.grid_.resize(n + 1);
  path.values_.resize(n + 1);
  path.rates_.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    path.grid_[k] = spec.T * static_cast<double>(k) / static_cast<double>(n);

  auto f = [&spec](double t, const Vec10& y) {
    return coefficient_rates(spec, t, y);
  };
  const double c2_xx = spec.terminal.c2[0];

  path.values_[n] = psi_to_terminal_conditions(spec.terminal);
  path.rates_[n] = f(spec.T, path.values_[n]);
  for (std::size_t k = n; k-- > 0;) {
    const double h = path.grid_[k] - path.grid_[k + 1];
    path.values_[k] =
        detail::rk4_step<10>(f, path.grid_[k + 1], path.values_[k + 1], h);
    detail::check_overflow(path.values_[k], path.grid_[k], spec.c, c2_xx, spec.T);
    path.rates_[k] = f(path.grid_[k], path.values_[k]);
  }
  return path;
}

// The (a2_2, a2_3) pair forms a closed linear subsystem once a2_1 is known;
// this solves it alone on the supplied ascending grid, taking a2_1 from the
// closed form at every stage point.
struct CrossCoefficients {
  std::vector<double> a2_2;
  std::vector<double> a2_3;
};

inline CrossCoefficients solve_a22_a23(const ModelSpec& spec,
                                       std::span<const double> grid) {
  if (grid.size() < 2) throw std::invalid_argument("grid needs at least two nodes");
  const double c = spec.c;
  const double c2_xx = spec.terminal.c2[0];
  auto f = [&](double t, const std::array<double, 2>& y) {
    const double b1 = spec.supply_drift.k1(t);
    const double b2 = spec.supply_drift.k2(t);
    const double a21 = a21_closed_form(c, c2_xx, spec.T, t);
    return std::array<double, 2>{
        c * b1 * y[1] - b1 * y[0] + 2.0 * a21 * y[0] / c,
        c * b2 * y[1] - b2 * y[0] + 2.0 * a21 * (1.0 + y[1]) / c};
  };

  const std::size_t n = grid.size() - 1;
  CrossCoefficients out;
  out.a2_2.resize(n + 1);
  out.a2_3.resize(n + 1);
  out.a2_2[n] = spec.terminal.c2[1];
  out.a2_3[n] = spec.terminal.c2[2];
  std::array<double, 2> y{out.a2_2[n], out.a2_3[n]};
  for (std::size_t k = n; k-- > 0;) {
    y = detail::rk4_step<2>(f, grid[k + 1], y, grid[k] - grid[k + 1]);
    out.a2_2[k] = y[0];
    out.a2_3[k] = y[1];
  }
  return out;
}

// Market-clearing price process coefficients.  Drift mirrors the supply
// drift scaled by -c; volatility carries the time-dependent ratio
// -(c + a2_2) / (1 + a2_3); w_bar pins the initial price level so the market
// clears at t = 0.
struct PricingRule {
  AffineCoeff bP;
  AffineCoeff sigmaP;
  double w_bar = 0.0;
  std::shared_ptr<const CoefficientPath> coefficients;

  double vol_ratio(double t) const {
    const Vec10 a = coefficients->values_at(t);
    const double denom = 1.0 + a[A2_3];
    if (denom < kSingularityFloor) {
      std::ostringstream msg;
      msg << "volatility ratio denominator 1 + a2_3 = " << denom
          << " fell below " << kSingularityFloor << " at t = " << t;
      throw SingularityError(msg.str(), t);
    }
    return -(coefficients->spec().c + a[A2_2]) / denom;
  }
};

inline PricingRule derive_pricing_rule(const ModelSpec& spec,
                                       const CoefficientPath& coefficients) {
  PricingRule rule;
  rule.coefficients = std::make_shared<CoefficientPath>(coefficients);

  const double c = spec.c;
  auto negate_scaled = [c](const AffineComponent& comp) {
    if (comp.is_constant()) return AffineComponent(-c * comp.constant_value());
    return AffineComponent::function(
        [c, comp](double t) { return -c * comp(t); });
  };
  rule.bP.k0 = negate_scaled(spec.supply_drift.k0);
  rule.bP.k1 = negate_scaled(spec.supply_drift.k1);
  rule.bP.k2 = negate_scaled(spec.supply_drift.k2);

  auto path = rule.coefficients;
  auto scale_by_ratio = [path](const AffineComponent& comp) {
    return AffineComponent::function([path, comp](double t) {
      const Vec10 a = path->values_at(t);
      const double denom = 1.0 + a[A2_3];
      if (denom < kSingularityFloor) {
        std::ostringstream msg;
        msg << "volatility ratio denominator 1 + a2_3 = " << denom
            << " fell below " << kSingularityFloor << " at t = " << t;
        throw SingularityError(msg.str(), t);
      }
      return -comp(t) * (path->spec().c + a[A2_2]) / denom;
    });
  };
  rule.sigmaP.k0 = scale_by_ratio(spec.supply_vol.k0);
  rule.sigmaP.k1 = scale_by_ratio(spec.supply_vol.k1);
  rule.sigmaP.k2 = scale_by_ratio(spec.supply_vol.k2);

  const Vec10 a0 = coefficients.node_values(0);
  const double denom = 1.0 + a0[A2_3];
  if (denom < kSingularityFloor)
    throw SingularityError("volatility ratio denominator 1 + a2_3 vanishes at t = 0",
                           0.0);
  rule.w_bar = -(a0[A1_1] + 2.0 * a0[A2_1] * spec.agents.mean +
                 (a0[A2_2] + c) * spec.q_bar) /
               denom;
  return rule;
}

}  // namespace mfgprice
