#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mfgprice/rng.hpp"

namespace mfgprice {

// One scalar coefficient of an affine-in-(q, w) field, as a function of time.
// Backed by a constant, a uniformly tabulated curve on [0, t_end] with linear
// interpolation, or an arbitrary callable.
class AffineComponent {
 public:
  AffineComponent() : impl_(0.0) {}
  AffineComponent(double constant) : impl_(constant) {}  // NOLINT: implicit by design

  static AffineComponent constant(double v) { return AffineComponent(v); }

  static AffineComponent tabulated(std::vector<double> samples, double t_end) {
    AffineComponent c;
    c.impl_ = Table{std::move(samples), t_end};
    return c;
  }

  static AffineComponent function(std::function<double(double)> f) {
    AffineComponent c;
    c.impl_ = std::move(f);
    return c;
  }

  double operator()(double t) const {
    if (const double* v = std::get_if<double>(&impl_)) return *v;
    if (const Table* tab = std::get_if<Table>(&impl_)) return tab->eval(t);
    return std::get<std::function<double(double)>>(impl_)(t);
  }

  bool is_constant() const { return std::holds_alternative<double>(impl_); }

  // Only meaningful when is_constant().
  double constant_value() const { return std::get<double>(impl_); }

 private:
  struct Table {
    std::vector<double> samples;
    double t_end;

    double eval(double t) const {
      if (samples.size() == 1) return samples[0];
      const double n = static_cast<double>(samples.size() - 1);
      double s = t / t_end * n;
      if (s <= 0.0) return samples.front();
      if (s >= n) return samples.back();
      const std::size_t k = static_cast<std::size_t>(s);
      const double frac = s - static_cast<double>(k);
      return samples[k] + frac * (samples[k + 1] - samples[k]);
    }
  };

  std::variant<double, Table, std::function<double(double)>> impl_;
};

// Affine field k0(t) + k1(t) q + k2(t) w; used for the supply drift and
// volatility, and reused for the derived price coefficients.
struct AffineCoeff {
  AffineComponent k0, k1, k2;

  double eval(double t, double q, double w) const {
    return k0(t) + k1(t) * q + k2(t) * w;
  }
};

// Quadratic terminal cost
//   Psi(x, q, w) = c0 + c1 . (x, q, w) + quadratic form with coefficients c2
// where c2 lists the monomial weights in the order xx, xq, xw, qq, qw, ww.
struct TerminalCost {
  double c0 = 0.0;
  std::array<double, 3> c1{{0.0, 0.0, 0.0}};
  std::array<double, 6> c2{{0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};

  double eval(double x, double q, double w) const {
    return c0 + c1[0] * x + c1[1] * q + c1[2] * w + c2[0] * x * x +
           c2[1] * x * q + c2[2] * x * w + c2[3] * q * q + c2[4] * q * w +
           c2[5] * w * w;
  }
};

// Terminal cost for an agent whose preferred terminal holding is shifted by
// alpha: Psi_alpha(x, q, w) = Psi(x - alpha, q, w).
inline TerminalCost shifted_in_x(const TerminalCost& base, double alpha) {
  TerminalCost out = base;
  out.c0 = base.c0 - base.c1[0] * alpha + base.c2[0] * alpha * alpha;
  out.c1[0] = base.c1[0] - 2.0 * base.c2[0] * alpha;
  out.c1[1] = base.c1[1] - base.c2[1] * alpha;
  out.c1[2] = base.c1[2] - base.c2[2] * alpha;
  return out;
}

// Initial distribution of agent holdings.  `mean` is authoritative for the
// analytic pieces (clearing level, price constant); `draw` produces the Monte
// Carlo cloud from the distribution's own seed.
struct InitialDistribution {
  enum class Family { gaussian, point, samples };

  Family family = Family::gaussian;
  double mean = 0.0;
  double variance = 1.0;              // gaussian only
  std::vector<double> samples;        // samples only
  std::uint64_t seed = 1;

  std::vector<double> draw(std::size_t n) const {
    std::vector<double> out(n);
    Rng rng(seed);
    switch (family) {
      case Family::point:
        for (auto& x : out) x = mean;
        break;
      case Family::gaussian: {
        const double sd = std::sqrt(variance);
        for (auto& x : out) x = mean + sd * rng.normal();
        break;
      }
      case Family::samples:
        if (n == samples.size()) {
          out = samples;
        } else {
          // Bootstrap resample when the requested cloud size differs.
          for (auto& x : out) {
            const std::size_t j = static_cast<std::size_t>(
                rng.next_u64() % static_cast<std::uint64_t>(samples.size()));
            x = samples[j];
          }
        }
        break;
    }
    return out;
  }
};

// Full problem data: trading cost c, horizon T, exogenous supply dynamics
//   dQ = b^S(t, Q, w) dt + sigma^S(t, Q, w) dW,
// terminal cost, mean supply level q_bar, and the agent population.
struct ModelSpec {
  double c = 1.0;
  double T = 1.0;
  AffineCoeff supply_drift;
  AffineCoeff supply_vol;
  TerminalCost terminal;
  double q_bar = 0.0;
  InitialDistribution agents;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

namespace detail {

inline bool finite_on_horizon(const AffineComponent& comp, double T) {
  // Constants are checked directly; curves are sampled on a fixed grid
  // including both endpoints.
  if (comp.is_constant()) return std::isfinite(comp.constant_value());
  constexpr int kProbes = 65;
  for (int i = 0; i < kProbes; ++i) {
    const double t = T * static_cast<double>(i) / (kProbes - 1);
    if (!std::isfinite(comp(t))) return false;
  }
  return true;
}

}  // namespace detail

inline ValidationResult validate(const ModelSpec& spec) {
  ValidationResult result;
  auto flag = [&](const std::string& msg) { result.violations.push_back(msg); };

  if (!(spec.c > 0.0) || !std::isfinite(spec.c)) flag("c must be positive");
  if (!(spec.T > 0.0) || !std::isfinite(spec.T)) flag("T must be positive");

  const double T = std::isfinite(spec.T) && spec.T > 0.0 ? spec.T : 1.0;
  const char* drift_names[3] = {"supply_drift.k0", "supply_drift.k1",
                                "supply_drift.k2"};
  const char* vol_names[3] = {"supply_vol.k0", "supply_vol.k1",
                              "supply_vol.k2"};
  const AffineComponent* drift[3] = {&spec.supply_drift.k0,
                                     &spec.supply_drift.k1,
                                     &spec.supply_drift.k2};
  const AffineComponent* vol[3] = {&spec.supply_vol.k0, &spec.supply_vol.k1,
                                   &spec.supply_vol.k2};
  for (int i = 0; i < 3; ++i) {
    if (!detail::finite_on_horizon(*drift[i], T))
      flag(std::string(drift_names[i]) + " is not finite on [0, T]");
    if (!detail::finite_on_horizon(*vol[i], T))
      flag(std::string(vol_names[i]) + " is not finite on [0, T]");
  }

  bool terminal_finite = std::isfinite(spec.terminal.c0);
  for (double v : spec.terminal.c1) terminal_finite &= std::isfinite(v);
  for (double v : spec.terminal.c2) terminal_finite &= std::isfinite(v);
  if (!terminal_finite) flag("terminal cost coefficients must be finite");

  if (!std::isfinite(spec.q_bar)) flag("q_bar must be finite");

  if (!std::isfinite(spec.agents.mean)) flag("agents.mean must be finite");
  switch (spec.agents.family) {
    case InitialDistribution::Family::gaussian:
      if (!(spec.agents.variance >= 0.0) || !std::isfinite(spec.agents.variance))
        flag("agents sampler is malformed: variance must be nonnegative");
      break;
    case InitialDistribution::Family::point:
      break;
    case InitialDistribution::Family::samples:
      if (spec.agents.samples.empty()) {
        flag("agents sampler is malformed: sample list is empty");
      } else {
        for (double v : spec.agents.samples) {
          if (!std::isfinite(v)) {
            flag("agents sampler is malformed: sample list has non-finite entries");
            break;
          }
        }
      }
      break;
  }

  return result;
}

// Terminal conditions of the ten coefficient ODEs, in solver order
//   a0, a1_1, a1_2, a1_3, a2_1, a2_2, a2_3, a2_4, a2_5, a2_6.
// The quadratic ansatz matches Psi at t = T exactly when the coefficients
// equal the corresponding monomial weights of Psi.
inline std::array<double, 10> psi_to_terminal_conditions(const TerminalCost& psi) {
  return {psi.c0,    psi.c1[0], psi.c1[1], psi.c1[2], psi.c2[0],
          psi.c2[1], psi.c2[2], psi.c2[3], psi.c2[4], psi.c2[5]};
}

}  // namespace mfgprice
