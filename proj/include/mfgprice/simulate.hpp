#pragma once

// Monte Carlo layer: Euler-Maruyama paths of the supply/price pair driven by
// one shared Brownian motion (the common noise), a particle cloud of agent
// holdings pushed through the optimal feedback control, and the statistical
// verifications built on top (market clearing, drift-free price impact,
// weak transport residual).

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mfgprice/coefficients.hpp"
#include "mfgprice/model.hpp"
#include "mfgprice/rng.hpp"
#include "mfgprice/value.hpp"

namespace mfgprice {

namespace detail {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : std::min(hw, 8u);
}

// Runs fn(i) for i in [0, n).  Each index must write only its own output
// slot; under that contract results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    constexpr std::size_t kChunk = 8;
    for (;;) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= n) return;
      const std::size_t end = std::min(begin + kChunk, n);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Brownian increments on a uniform step, pre-drawn so every consumer of the
// path sees the identical noise.
struct NoisePath {
  double dt = 0.0;
  std::vector<double> increments;
  std::uint64_t seed = 0;

  static NoisePath generate(std::uint64_t seed, double dt, std::size_t steps) {
    if (!(dt > 0.0)) throw std::invalid_argument("noise step must be positive");
    NoisePath path;
    path.dt = dt;
    path.seed = seed;
    path.increments.resize(steps);
    Rng rng(seed);
    const double scale = std::sqrt(dt);
    for (auto& dw : path.increments) dw = scale * rng.normal();
    return path;
  }

  // Sums consecutive increments; the coarse path visits the same Brownian
  // trajectory, which is what step-halving convergence studies need.
  NoisePath coarsened(std::size_t factor) const {
    if (factor == 0 || increments.size() % factor != 0)
      throw std::invalid_argument("coarsening factor must divide the step count");
    NoisePath out;
    out.dt = dt * static_cast<double>(factor);
    out.seed = seed;
    out.increments.resize(increments.size() / factor);
    for (std::size_t k = 0; k < out.increments.size(); ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j < factor; ++j)
        sum += increments[k * factor + j];
      out.increments[k] = sum;
    }
    return out;
  }
};

struct SupplyPricePath {
  std::vector<double> times;
  std::vector<double> Q;
  std::vector<double> price;
};

// Left-point Euler-Maruyama for the supply/price pair, both driven by the
// same increments.  The price starts at the clearing level w_bar.
inline SupplyPricePath simulate_supply_price(const ModelSpec& spec,
                                             const PricingRule& rule,
                                             const NoisePath& noise) {
  const std::size_t m = noise.increments.size();
  if (m == 0) throw std::invalid_argument("noise path is empty");
  if (std::abs(static_cast<double>(m) * noise.dt - spec.T) >
      noise.dt * (1.0 + 1e-9))
    throw std::invalid_argument("noise path does not span [0, T]");

  SupplyPricePath path;
  path.times.resize(m + 1);
  path.Q.resize(m + 1);
  path.price.resize(m + 1);
  for (std::size_t k = 0; k <= m; ++k)
    path.times[k] =
        spec.T * static_cast<double>(k) / static_cast<double>(m);

  path.Q[0] = spec.q_bar;
  path.price[0] = rule.w_bar;
  for (std::size_t k = 0; k < m; ++k) {
    const double t = path.times[k];
    const double h = path.times[k + 1] - t;
    const double q = path.Q[k];
    const double w = path.price[k];
    const double dw = noise.increments[k];
    path.Q[k + 1] = q + h * spec.supply_drift.eval(t, q, w) +
                    spec.supply_vol.eval(t, q, w) * dw;
    path.price[k + 1] =
        w + h * rule.bP.eval(t, q, w) + rule.sigmaP.eval(t, q, w) * dw;
  }
  return path;
}

// One simulated market: supply, price, price impact Pi, and the agent cloud's
// first two moments per time step.  The particle matrix is kept only on
// request; the verification identities need just the moments because the
// noise is common to all agents.
struct PathEnsemble {
  std::vector<double> times;
  std::vector<double> Q;
  std::vector<double> price;
  std::vector<double> Pi;
  std::vector<double> mean_holdings;
  std::vector<double> second_moment;
  std::vector<std::vector<double>> particles;  // per step, when stored
  NoisePath noise;
  std::size_t n_particles = 0;
};

struct AgentOptions {
  bool center = true;           // recenter draws on the analytic mean
  bool store_particles = false;
};

// Pushes n agent holdings through the optimal feedback
//   v = -((1 + a2_3) w + a1_1 + a2_2 Q + 2 a2_1 x) / c
// with left-point coefficients on the supply/price path's grid.
inline PathEnsemble simulate_agents(const ModelSpec& spec,
                                    const CoefficientPath& coefficients,
                                    const SupplyPricePath& supply,
                                    const NoisePath& noise, std::size_t n,
                                    AgentOptions options = {}) {
  if (n < 2) throw std::invalid_argument("particle cloud needs at least 2 agents");
  const std::size_t m = supply.times.size() - 1;

  PathEnsemble ens;
  ens.times = supply.times;
  ens.Q = supply.Q;
  ens.price = supply.price;
  ens.noise = noise;
  ens.n_particles = n;
  ens.Pi.resize(m + 1);
  ens.mean_holdings.resize(m + 1);
  ens.second_moment.resize(m + 1);
  if (options.store_particles) ens.particles.reserve(m + 1);

  std::vector<double> x = spec.agents.draw(n);
  if (options.center) {
    double sum = 0.0;
    for (double v : x) sum += v;
    const double shift = spec.agents.mean - sum / static_cast<double>(n);
    for (double& v : x) v += shift;
  }

  const double c = spec.c;
  auto record = [&](std::size_t k, const Vec10& a) {
    double sum = 0.0, sum2 = 0.0;
    for (double v : x) {
      sum += v;
      sum2 += v * v;
    }
    ens.mean_holdings[k] = sum / static_cast<double>(n);
    ens.second_moment[k] = sum2 / static_cast<double>(n);
    ens.Pi[k] = a[A1_1] + 2.0 * a[A2_1] * ens.mean_holdings[k] +
                a[A2_2] * ens.Q[k] + a[A2_3] * ens.price[k];
    if (options.store_particles) ens.particles.push_back(x);
  };

  record(0, coefficients.values_at(0.0));
  for (std::size_t k = 0; k < m; ++k) {
    const double t = ens.times[k];
    const double h = ens.times[k + 1] - t;
    const Vec10 a = coefficients.values_at(t);
    const double A = -((1.0 + a[A2_3]) * ens.price[k] + a[A1_1] +
                       a[A2_2] * ens.Q[k]) /
                     c;
    const double B = -2.0 * a[A2_1] / c;
    for (double& v : x) v += h * (A + B * v);
    record(k + 1, coefficients.values_at(ens.times[k + 1]));
  }
  return ens;
}

inline PathEnsemble simulate_ensemble(const ModelSpec& spec,
                                      const CoefficientPath& coefficients,
                                      const PricingRule& rule,
                                      const NoisePath& noise, std::size_t n,
                                      AgentOptions options = {}) {
  const SupplyPricePath supply = simulate_supply_price(spec, rule, noise);
  return simulate_agents(spec, coefficients, supply, noise, n, options);
}

struct ClearingReport {
  std::vector<double> residual;  // |Q_t + (w_t + Pi_t) / c| per node
  double sup = 0.0;
};

// Market clearing: aggregate demand -(w + Pi) / c should absorb the supply.
inline ClearingReport clearing_residual(const ModelSpec& spec,
                                        const PathEnsemble& ens) {
  ClearingReport report;
  report.residual.resize(ens.times.size());
  for (std::size_t k = 0; k < ens.times.size(); ++k) {
    report.residual[k] =
        std::abs(ens.Q[k] + (ens.price[k] + ens.Pi[k]) / spec.c);
    report.sup = std::max(report.sup, report.residual[k]);
  }
  return report;
}

struct MartingaleStats {
  std::size_t paths = 0;
  double mean_increment = 0.0;   // mean over paths of Pi_T - Pi_0
  double std_error = 0.0;
  double t_statistic = 0.0;
  double regression_slope = 0.0;  // pooled through-origin slope of dPi on
                                  // (a2_2 sigma^S + a2_3 sigma^P) dW
  double regression_r2 = 0.0;
  std::vector<double> path_slopes;  // first paths, for pathwise checks
};

// Drift-free price impact: along each simulated path, Pi increments should be
// pure noise with the loading a2_2 sigma^S + a2_3 sigma^P.  The population
// mean enters through the closed mean-holdings recursion, which is exact for
// the infinite cloud because the noise is common.
inline MartingaleStats martingale_test(const ModelSpec& spec,
                                       const CoefficientPath& coefficients,
                                       const PricingRule& rule, std::size_t M,
                                       double dt, std::uint64_t seed,
                                       unsigned threads = 0) {
  if (M < 100) throw std::invalid_argument("martingale test needs at least 100 paths");
  const std::size_t m = static_cast<std::size_t>(std::llround(spec.T / dt));
  if (m == 0) throw std::invalid_argument("step larger than horizon");

  struct PathSums {
    double total = 0.0;  // Pi_T - Pi_0
    double syz = 0.0, szz = 0.0, syy = 0.0;
    double slope = 0.0;
  };
  std::vector<PathSums> sums(M);

  // Grid quantities that do not depend on the path.
  std::vector<double> times(m + 1);
  for (std::size_t k = 0; k <= m; ++k)
    times[k] = spec.T * static_cast<double>(k) / static_cast<double>(m);
  std::vector<Vec10> coeff(m + 1);
  for (std::size_t k = 0; k <= m; ++k) coeff[k] = coefficients.values_at(times[k]);

  detail::parallel_for(M, threads, [&](std::size_t j) {
    NoisePath noise = NoisePath::generate(seed ^ j, dt, m);
    double q = spec.q_bar;
    double w = rule.w_bar;
    double xbar = spec.agents.mean;
    const Vec10& a0 = coeff[0];
    double pi_prev =
        a0[A1_1] + 2.0 * a0[A2_1] * xbar + a0[A2_2] * q + a0[A2_3] * w;
    const double pi_start = pi_prev;
    PathSums acc;
    for (std::size_t k = 0; k < m; ++k) {
      const double t = times[k];
      const double h = times[k + 1] - t;
      const double dw = noise.increments[k];
      const Vec10& a = coeff[k];
      const double sS = spec.supply_vol.eval(t, q, w);
      const double sP = rule.sigmaP.eval(t, q, w);
      const double z = (a[A2_2] * sS + a[A2_3] * sP) * dw;

      const double A =
          -((1.0 + a[A2_3]) * w + a[A1_1] + a[A2_2] * q) / spec.c;
      const double B = -2.0 * a[A2_1] / spec.c;
      const double q_next = q + h * spec.supply_drift.eval(t, q, w) + sS * dw;
      const double w_next = w + h * rule.bP.eval(t, q, w) + sP * dw;
      xbar += h * (A + B * xbar);
      q = q_next;
      w = w_next;

      const Vec10& an = coeff[k + 1];
      const double pi =
          an[A1_1] + 2.0 * an[A2_1] * xbar + an[A2_2] * q + an[A2_3] * w;
      const double y = pi - pi_prev;
      pi_prev = pi;
      acc.syz += y * z;
      acc.szz += z * z;
      acc.syy += y * y;
    }
    acc.total = pi_prev - pi_start;
    acc.slope = acc.szz > 0.0 ? acc.syz / acc.szz : 0.0;
    sums[j] = acc;
  });

  MartingaleStats stats;
  stats.paths = M;
  double sy = 0.0, sy2 = 0.0, syz = 0.0, szz = 0.0, syy = 0.0;
  for (const PathSums& p : sums) {
    sy += p.total;
    sy2 += p.total * p.total;
    syz += p.syz;
    szz += p.szz;
    syy += p.syy;
  }
  const double n = static_cast<double>(M);
  stats.mean_increment = sy / n;
  const double var = (sy2 - sy * sy / n) / (n - 1.0);
  stats.std_error = std::sqrt(std::max(var, 0.0) / n);
  stats.t_statistic =
      stats.std_error > 0.0 ? stats.mean_increment / stats.std_error : 0.0;
  stats.regression_slope = szz > 0.0 ? syz / szz : 0.0;
  const double ss_res = syy - 2.0 * stats.regression_slope * syz +
                        stats.regression_slope * stats.regression_slope * szz;
  stats.regression_r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  const std::size_t keep = std::min<std::size_t>(M, 32);
  stats.path_slopes.resize(keep);
  for (std::size_t j = 0; j < keep; ++j) stats.path_slopes[j] = sums[j].slope;
  return stats;
}

// Quadratic observable psi(x, q, w) used in the weak transport residual.
struct QuadraticTestFunction {
  std::string name;
  double p0 = 0.0, px = 0.0, pq = 0.0, pw = 0.0;
  double pxx = 0.0, pxq = 0.0, pxw = 0.0, pqq = 0.0, pqw = 0.0, pww = 0.0;
};

inline std::vector<QuadraticTestFunction> standard_test_functions() {
  std::vector<QuadraticTestFunction> fns(7);
  fns[0].name = "1";
  fns[0].p0 = 1.0;
  fns[1].name = "x";
  fns[1].px = 1.0;
  fns[2].name = "q";
  fns[2].pq = 1.0;
  fns[3].name = "w";
  fns[3].pw = 1.0;
  fns[4].name = "x^2";
  fns[4].pxx = 1.0;
  fns[5].name = "xq";
  fns[5].pxq = 1.0;
  fns[6].name = "xw";
  fns[6].pxw = 1.0;
  return fns;
}

// Weak-form transport residual: along the realized flow of measures,
//   d <psi, mu_t> = <Dpsi . drift + half-trace diffusion, mu_t> dt
//                 + <Dpsi . vol, mu_t> dW
// must hold; the residual integrates the right side with left-point
// quadrature on the shared noise and compares against the left side.  All
// population integrals reduce to the stored first two moments because every
// agent sees the same (Q, w) and the control is affine in x.
inline std::vector<double> transport_weak_residual(
    const ModelSpec& spec, const CoefficientPath& coefficients,
    const PricingRule& rule, const PathEnsemble& ens,
    std::span<const QuadraticTestFunction> fns) {
  const std::size_t m = ens.times.size() - 1;
  std::vector<double> max_residual(fns.size(), 0.0);

  auto mean_psi = [&](const QuadraticTestFunction& f, std::size_t k) {
    const double xb = ens.mean_holdings[k];
    const double m2 = ens.second_moment[k];
    const double q = ens.Q[k];
    const double w = ens.price[k];
    return f.p0 + f.px * xb + f.pq * q + f.pw * w + f.pxx * m2 +
           f.pxq * xb * q + f.pxw * xb * w + f.pqq * q * q + f.pqw * q * w +
           f.pww * w * w;
  };

  std::vector<double> rhs(fns.size(), 0.0);
  std::vector<double> base(fns.size());
  for (std::size_t i = 0; i < fns.size(); ++i) base[i] = mean_psi(fns[i], 0);

  for (std::size_t k = 0; k < m; ++k) {
    const double t = ens.times[k];
    const double h = ens.times[k + 1] - t;
    const double dw = ens.noise.increments[k];
    const double q = ens.Q[k];
    const double w = ens.price[k];
    const double xb = ens.mean_holdings[k];
    const double m2 = ens.second_moment[k];
    const Vec10 a = coefficients.values_at(t);
    const double A =
        -((1.0 + a[A2_3]) * w + a[A1_1] + a[A2_2] * q) / spec.c;
    const double B = -2.0 * a[A2_1] / spec.c;
    const double bS = spec.supply_drift.eval(t, q, w);
    const double bP = rule.bP.eval(t, q, w);
    const double sS = spec.supply_vol.eval(t, q, w);
    const double sP = rule.sigmaP.eval(t, q, w);

    for (std::size_t i = 0; i < fns.size(); ++i) {
      const QuadraticTestFunction& f = fns[i];
      const double mean_psix_v = (f.px + f.pxq * q + f.pxw * w) * (A + B * xb) +
                                 2.0 * f.pxx * (A * xb + B * m2);
      const double mean_psiq = f.pq + f.pxq * xb + 2.0 * f.pqq * q + f.pqw * w;
      const double mean_psiw = f.pw + f.pxw * xb + f.pqw * q + 2.0 * f.pww * w;
      const double second = sS * sS * f.pqq + sS * sP * f.pqw + sP * sP * f.pww;
      const double drift = mean_psix_v + mean_psiq * bS + mean_psiw * bP + second;
      const double vol = mean_psiq * sS + mean_psiw * sP;
      rhs[i] += drift * h + vol * dw;
      const double lhs = mean_psi(f, k + 1) - base[i];
      max_residual[i] = std::max(max_residual[i], std::abs(lhs - rhs[i]));
    }
  }
  return max_residual;
}

inline double pearson_correlation(std::span<const double> xs,
                                  std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("correlation needs two equal-length samples");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw std::invalid_argument("correlation undefined for constant samples");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mfgprice
