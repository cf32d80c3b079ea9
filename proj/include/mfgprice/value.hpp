#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfgprice/coefficients.hpp"
#include "mfgprice/model.hpp"

namespace mfgprice {

struct StateSample {
  double x = 0.0;
  double q = 0.0;
  double w = 0.0;
  double t = 0.0;
};

// Quadratic ansatz evaluation from a raw coefficient vector.  The monomial
// order matches TerminalCost::eval term for term, so the two agree at t = T
// up to rounding.
inline double ansatz_value(const Vec10& a, double x, double q, double w) {
  return a[A0] + a[A1_1] * x + a[A1_2] * q + a[A1_3] * w + a[A2_1] * x * x +
         a[A2_2] * x * q + a[A2_3] * x * w + a[A2_4] * q * q + a[A2_5] * q * w +
         a[A2_6] * w * w;
}

inline double ansatz_ux(const Vec10& a, double x, double q, double w) {
  return a[A1_1] + 2.0 * a[A2_1] * x + a[A2_2] * q + a[A2_3] * w;
}

struct ValuePartials {
  double u, ux, uq, uw, uxx, uxq, uxw, uqq, uqw, uww;
};

inline ValuePartials ansatz_partials(const Vec10& a, double x, double q,
                                     double w) {
  ValuePartials p;
  p.u = ansatz_value(a, x, q, w);
  p.ux = ansatz_ux(a, x, q, w);
  p.uq = a[A1_2] + a[A2_2] * x + 2.0 * a[A2_4] * q + a[A2_5] * w;
  p.uw = a[A1_3] + a[A2_3] * x + a[A2_5] * q + 2.0 * a[A2_6] * w;
  p.uxx = 2.0 * a[A2_1];
  p.uxq = a[A2_2];
  p.uxw = a[A2_3];
  p.uqq = 2.0 * a[A2_4];
  p.uqw = a[A2_5];
  p.uww = 2.0 * a[A2_6];
  return p;
}

inline double value(const CoefficientPath& coefficients, const StateSample& s) {
  return ansatz_value(coefficients.values_at(s.t), s.x, s.q, s.w);
}

inline double u_x(const CoefficientPath& coefficients, const StateSample& s) {
  return ansatz_ux(coefficients.values_at(s.t), s.x, s.q, s.w);
}

inline ValuePartials value_partials(const CoefficientPath& coefficients,
                                    const StateSample& s) {
  return ansatz_partials(coefficients.values_at(s.t), s.x, s.q, s.w);
}

// Maximizer of -v (w + u_x) - c v^2 / 2 over trading rates v.
inline double optimal_control(const CoefficientPath& coefficients, double c,
                              const StateSample& s) {
  return -(s.w + u_x(coefficients, s)) / c;
}

// Low-discrepancy states in [lo, hi]^3 x [0, T]; additive Weyl recurrence
// with the quartic-root base 1/phi4^i, phi4^5 = phi4 + 1.
inline std::vector<StateSample> quasi_random_states(std::size_t n, double lo,
                                                    double hi, double T) {
  constexpr double alpha[4] = {0.8566748838545029, 0.7338918566271259,
                               0.6287067210378086, 0.5385972572236101};
  std::vector<StateSample> states;
  states.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    double u[4];
    for (int d = 0; d < 4; ++d) {
      const double v = 0.5 + alpha[d] * static_cast<double>(i);
      u[d] = v - std::floor(v);
    }
    states.push_back({lo + (hi - lo) * u[0], lo + (hi - lo) * u[1],
                      lo + (hi - lo) * u[2], T * u[3]});
  }
  return states;
}

struct ResidualStats {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  std::size_t count = 0;
};

// Pointwise residual of the dynamic-programming PDE
//   -u_t + (w + u_x)^2 / (2c) - b^P u_w - b^S u_q
//        - (sigma^P)^2 u_ww / 2 - (sigma^S)^2 u_qq / 2 - sigma^P sigma^S u_qw.
// By default u_t comes from the analytic right-hand side at the same
// interpolated coefficients.  Passing `ut_reference` evaluates the u_t term
// on a separately solved path instead, which exposes the interpolation and
// integration error of `coefficients` as a nonzero residual.
inline double hjb_residual_at(const ModelSpec& spec,
                              const CoefficientPath& coefficients,
                              const PricingRule& rule, const StateSample& s,
                              const CoefficientPath* ut_reference = nullptr) {
  const Vec10 a = coefficients.values_at(s.t);
  const Vec10 da =
      ut_reference ? ut_reference->rates_at(s.t) : coefficient_rates(spec, s.t, a);
  const double u_t = ansatz_value(da, s.x, s.q, s.w);
  const ValuePartials p = ansatz_partials(a, s.x, s.q, s.w);

  const double bS = spec.supply_drift.eval(s.t, s.q, s.w);
  const double bP = rule.bP.eval(s.t, s.q, s.w);
  const double sS = spec.supply_vol.eval(s.t, s.q, s.w);
  const double sP = rule.sigmaP.eval(s.t, s.q, s.w);

  const double hamiltonian = (s.w + p.ux) * (s.w + p.ux) / (2.0 * spec.c);
  return -u_t + hamiltonian - bP * p.uw - bS * p.uq - 0.5 * sP * sP * p.uww -
         0.5 * sS * sS * p.uqq - sP * sS * p.uqw;
}

inline ResidualStats hjb_residual(const ModelSpec& spec,
                                  const CoefficientPath& coefficients,
                                  const PricingRule& rule,
                                  std::span<const StateSample> states,
                                  const CoefficientPath* ut_reference = nullptr) {
  ResidualStats stats;
  double sum = 0.0;
  for (const StateSample& s : states) {
    const double r =
        std::abs(hjb_residual_at(spec, coefficients, rule, s, ut_reference));
    stats.max_abs = std::max(stats.max_abs, r);
    sum += r;
  }
  stats.count = states.size();
  if (stats.count > 0) sum /= static_cast<double>(stats.count);
  stats.mean_abs = sum;
  return stats;
}

}  // namespace mfgprice
