#pragma once

// Experiment orchestration: sweep the terminal-preference shift alpha over a
// shared Brownian draw, derive the pricing rule per alpha, simulate, verify,
// and write the artifact set (coefficient tables, path tables, figure,
// summary).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mfgprice/config.hpp"
#include "mfgprice/coefficients.hpp"
#include "mfgprice/io.hpp"
#include "mfgprice/model.hpp"
#include "mfgprice/simulate.hpp"
#include "mfgprice/value.hpp"

namespace mfgprice {

class ValidationFailure : public std::runtime_error {
 public:
  explicit ValidationFailure(std::vector<std::string> violations)
      : std::runtime_error(join(violations)),
        violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid experiment:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }

  std::vector<std::string> violations_;
};

inline ModelSpec model_for_alpha(const ExperimentConfig& cfg, double alpha) {
  ModelSpec model = cfg.model;
  model.terminal = shifted_in_x(cfg.model.terminal, alpha);
  return model;
}

struct AlphaRun {
  double alpha = 0.0;
  ModelSpec model;
  std::shared_ptr<const CoefficientPath> coefficients;
  PricingRule rule;
  PathEnsemble ensemble;
  double w_bar = 0.0;
  double corr_supply_price = 0.0;
  double clearing_t0 = 0.0;
  double sup_clearing = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<AlphaRun> runs;
  MartingaleStats martingale;
  bool offset_applicable = false;
  double offset_deviation = 0.0;
  std::vector<std::string> files;
};

namespace detail {

inline std::string alpha_label(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", alpha);
  return buf;
}

// The price-offset identity needs a supply that does not feed back on the
// price, so that all alphas share the identical supply path.
inline bool offset_identity_applies(const ExperimentConfig& cfg) {
  auto is_zero = [](const AffineComponent& c) {
    return c.is_constant() && c.constant_value() == 0.0;
  };
  return cfg.alphas.size() >= 2 && is_zero(cfg.model.supply_drift.k2) &&
         is_zero(cfg.model.supply_vol.k2);
}

}  // namespace detail

// Runs the sweep without touching the filesystem.
inline ExperimentResult compute_experiment(const ExperimentConfig& cfg,
                                           unsigned threads = 0) {
  if (auto violations = validate_config(cfg); !violations.empty())
    throw ValidationFailure(std::move(violations));

  ExperimentResult result;
  result.config = cfg;

  const std::size_t steps =
      static_cast<std::size_t>(std::llround(cfg.model.T / cfg.dt_sde));
  const NoisePath noise = NoisePath::generate(cfg.seed, cfg.dt_sde, steps);

  for (double alpha : cfg.alphas) {
    AlphaRun run;
    run.alpha = alpha;
    run.model = model_for_alpha(cfg, alpha);
    run.coefficients = std::make_shared<CoefficientPath>(
        solve_coefficients(run.model, cfg.dt_ode));
    run.rule = derive_pricing_rule(run.model, *run.coefficients);
    run.w_bar = run.rule.w_bar;
    run.ensemble = simulate_ensemble(run.model, *run.coefficients, run.rule,
                                     noise, cfg.particles);
    run.corr_supply_price =
        pearson_correlation(run.ensemble.Q, run.ensemble.price);
    const ClearingReport clearing = clearing_residual(run.model, run.ensemble);
    run.clearing_t0 = clearing.residual.front();
    run.sup_clearing = clearing.sup;
    result.runs.push_back(std::move(run));
  }

  const AlphaRun& base = result.runs.front();
  result.martingale =
      martingale_test(base.model, *base.coefficients, base.rule,
                      cfg.martingale_paths, cfg.dt_sde, cfg.seed, threads);

  result.offset_applicable = detail::offset_identity_applies(cfg);
  if (result.offset_applicable) {
    double dev = 0.0;
    for (std::size_t i = 1; i < result.runs.size(); ++i) {
      const double shift = result.runs[i].w_bar - base.w_bar;
      for (std::size_t k = 0; k < base.ensemble.times.size(); ++k) {
        const double d = (result.runs[i].ensemble.price[k] -
                          base.ensemble.price[k]) -
                         shift;
        dev = std::max(dev, std::abs(d));
      }
    }
    result.offset_deviation = dev;
  }
  return result;
}

inline void write_summary(std::ostream& os, const ExperimentResult& result) {
  const ExperimentConfig& cfg = result.config;
  os << "[experiment]\n";
  os << "alphas =";
  for (double a : cfg.alphas) os << ' ' << format_g17(a);
  os << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "dt_ode = " << format_g17(cfg.dt_ode) << '\n';
  os << "dt_sde = " << format_g17(cfg.dt_sde) << '\n';
  os << "particles = " << cfg.particles << '\n';
  os << "martingale_paths = " << cfg.martingale_paths << '\n';

  for (const AlphaRun& run : result.runs) {
    os << "\n[alpha_" << detail::alpha_label(run.alpha) << "]\n";
    os << "w_bar = " << format_g17(run.w_bar) << '\n';
    os << "corr_supply_price = " << format_g17(run.corr_supply_price) << '\n';
    os << "clearing_t0 = " << format_g17(run.clearing_t0) << '\n';
    os << "sup_clearing = " << format_g17(run.sup_clearing) << '\n';
  }

  os << "\n[martingale]\n";
  os << "paths = " << result.martingale.paths << '\n';
  os << "mean_increment = " << format_g17(result.martingale.mean_increment)
     << '\n';
  os << "std_error = " << format_g17(result.martingale.std_error) << '\n';
  os << "t_statistic = " << format_g17(result.martingale.t_statistic) << '\n';
  os << "regression_slope = " << format_g17(result.martingale.regression_slope)
     << '\n';
  os << "regression_r2 = " << format_g17(result.martingale.regression_r2)
     << '\n';

  os << "\n[offset]\n";
  os << "applicable = " << (result.offset_applicable ? 1 : 0) << '\n';
  os << "max_deviation = " << format_g17(result.offset_deviation) << '\n';
}

inline std::vector<std::string> write_artifacts(
    const ExperimentResult& result, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> files;

  auto open = [&](const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    files.push_back(p.string());
    return os;
  };

  for (const AlphaRun& run : result.runs) {
    const std::string label = detail::alpha_label(run.alpha);
    {
      auto os = open(out_dir / ("coefficients_alpha_" + label + ".csv"));
      write_coefficient_csv(os, *run.coefficients);
    }
    {
      auto os = open(out_dir / ("paths_alpha_" + label + ".csv"));
      write_ensemble_csv(os, run.model, run.ensemble);
    }
  }

  {
    std::vector<PlotPanel> panels;
    PlotPanel overlay;
    overlay.title = "Common supply path and clearing price per preference shift";
    overlay.y_label = "level";
    const AlphaRun& base = result.runs.front();
    overlay.series.push_back(
        {"supply Q", base.ensemble.times, base.ensemble.Q});
    for (const AlphaRun& run : result.runs)
      overlay.series.push_back({"price, alpha=" + detail::alpha_label(run.alpha),
                                run.ensemble.times, run.ensemble.price});
    panels.push_back(std::move(overlay));
    for (const AlphaRun& run : result.runs) {
      PlotPanel p;
      p.title = "alpha = " + detail::alpha_label(run.alpha);
      p.y_label = "level";
      p.series.push_back({"supply Q", run.ensemble.times, run.ensemble.Q});
      p.series.push_back({"price", run.ensemble.times, run.ensemble.price});
      p.series.push_back({"impact Pi", run.ensemble.times, run.ensemble.Pi});
      panels.push_back(std::move(p));
    }
    auto os = open(out_dir / "prices.svg");
    write_svg_plot(os, "Price formation under common supply noise", panels);
  }

  {
    auto os = open(out_dir / "summary.txt");
    write_summary(os, result);
  }
  return files;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       unsigned threads = 0) {
  ExperimentResult result = compute_experiment(cfg, threads);
  result.files = write_artifacts(result, cfg.output_dir);
  return result;
}

// The bundled storage-competition showcase: quadratic holdings penalty with
// preferred level alpha, mean-reverting supply with multiplicative noise.
inline ExperimentConfig fig1_config(std::uint64_t seed = 42,
                                    std::string output_dir = "out") {
  ExperimentConfig cfg;
  cfg.model.c = 1.0;
  cfg.model.T = 1.0;
  cfg.model.q_bar = 1.0;
  cfg.model.supply_drift.k0 = AffineComponent(1.0);
  cfg.model.supply_drift.k1 = AffineComponent(-1.0);
  cfg.model.supply_drift.k2 = AffineComponent(0.0);
  cfg.model.supply_vol.k0 = AffineComponent(0.0);
  cfg.model.supply_vol.k1 = AffineComponent(1.0);
  cfg.model.supply_vol.k2 = AffineComponent(0.0);
  cfg.model.terminal = TerminalCost{};
  cfg.model.terminal.c2[0] = 1.0;  // Psi(x) = x^2 before the alpha shift
  cfg.model.agents.family = InitialDistribution::Family::gaussian;
  cfg.model.agents.mean = 0.0;
  cfg.model.agents.variance = 1.0;
  cfg.model.agents.seed = 1;
  cfg.alphas = {0.0, 0.1, 0.25, 0.5};
  cfg.seed = seed;
  cfg.dt_ode = 1e-3;
  cfg.dt_sde = 1e-3;
  cfg.particles = 10000;
  cfg.martingale_paths = 2000;
  cfg.output_dir = std::move(output_dir);
  return cfg;
}

inline ExperimentResult run_preset_fig1(std::uint64_t seed = 42,
                                        const std::string& output_dir = "out",
                                        unsigned threads = 0) {
  return run_experiment(fig1_config(seed, output_dir), threads);
}

// ---- verification suite ----

// Acceptance thresholds, fixed once here and in the acceptance tests.
namespace acceptance {
inline constexpr double kClosedFormTol = 1e-8;
inline constexpr double kHjbTol = 1e-6;
inline constexpr double kHjbMinOrder = 3.5;
inline constexpr double kTerminalTol = 1e-12;
inline constexpr double kClearingT0Tol = 1e-12;
inline constexpr double kClearingSupTol = 1e-2;
inline constexpr double kOrderLo = 0.8;
inline constexpr double kOrderHi = 1.2;
inline constexpr double kMartingaleMaxT = 4.0;
inline constexpr double kMartingaleMinR2 = 0.999;
inline constexpr double kTransportExactTol = 1e-10;
inline constexpr double kOffsetTol = 1e-12;
}  // namespace acceptance

struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string requirement;
  bool pass = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
};

namespace detail {

inline double log_log_slope(std::span<const double> h,
                            std::span<const double> err) {
  // Least-squares slope of log err against log h.
  const std::size_t n = h.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(std::max(err[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace detail

inline VerifyReport verify_experiment(const ExperimentConfig& cfg,
                                      unsigned threads = 0) {
  using namespace acceptance;
  VerifyReport report;
  auto add = [&](std::string name, double value, std::string requirement,
                 bool pass) {
    report.checks.push_back(
        {std::move(name), value, std::move(requirement), pass});
    report.all_pass = report.all_pass && pass;
  };

  const ExperimentResult result = compute_experiment(cfg, threads);
  const AlphaRun& base = result.runs.front();
  const double T = cfg.model.T;

  // Closed form of the x^2 coefficient against the integrated path.
  {
    double err = 0.0;
    const CoefficientPath& path = *base.coefficients;
    for (std::size_t k = 0; k < path.nodes(); ++k) {
      const double exact = a21_closed_form(
          base.model.c, base.model.terminal.c2[0], T, path.grid()[k]);
      err = std::max(err, std::abs(path.node_values(k)[A2_1] - exact));
    }
    add("x2_coefficient_closed_form", err,
        "< " + format_g17(kClosedFormTol), err < kClosedFormTol);
  }

  const std::vector<StateSample> states = quasi_random_states(100, -3.0, 3.0, T);

  // Terminal slice of the ansatz against the terminal cost.
  {
    double err = 0.0;
    for (const AlphaRun& run : result.runs) {
      const Vec10 aT = run.coefficients->values_at(T);
      for (const StateSample& s : states) {
        const double lhs = ansatz_value(aT, s.x, s.q, s.w);
        const double rhs = run.model.terminal.eval(s.x, s.q, s.w);
        err = std::max(err,
                       std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
      }
    }
    add("terminal_value_match", err, "< " + format_g17(kTerminalTol),
        err < kTerminalTol);
  }

  // Dynamic-programming residual at interpolated times.
  {
    const ResidualStats stats =
        hjb_residual(base.model, *base.coefficients, base.rule, states);
    add("hjb_residual", stats.max_abs, "< " + format_g17(kHjbTol),
        stats.max_abs < kHjbTol);
  }

  // Residual order against a fine reference path as the step coarsens.
  {
    const double h_ref = std::min(cfg.dt_ode, T / 4000.0);
    const CoefficientPath reference = solve_coefficients(base.model, h_ref);
    std::vector<double> hs = {T / 10.0, T / 20.0, T / 40.0};
    std::vector<double> errs;
    for (double h : hs) {
      const CoefficientPath coarse = solve_coefficients(base.model, h);
      const PricingRule rule = derive_pricing_rule(base.model, coarse);
      const ResidualStats stats =
          hjb_residual(base.model, coarse, rule, states, &reference);
      errs.push_back(stats.max_abs);
    }
    if (errs.front() < 1e-13) {
      add("hjb_residual_order", errs.front(),
          "exactly integrated model (residual below 1e-13)", true);
    } else {
      const double order = detail::log_log_slope(hs, errs);
      add("hjb_residual_order", order, ">= " + format_g17(kHjbMinOrder),
          order >= kHjbMinOrder);
    }
  }

  // Market clearing at t = 0 and over the horizon.
  {
    double t0 = 0.0, sup = 0.0;
    for (const AlphaRun& run : result.runs) {
      t0 = std::max(t0, run.clearing_t0);
      sup = std::max(sup, run.sup_clearing);
    }
    add("clearing_t0", t0, "< " + format_g17(kClearingT0Tol),
        t0 < kClearingT0Tol);
    add("clearing_sup", sup, "< " + format_g17(kClearingSupTol),
        sup < kClearingSupTol);
  }

  // Step-halving studies share one Brownian draw via increment coarsening.
  const std::size_t fine_steps =
      4 * static_cast<std::size_t>(std::llround(T / cfg.dt_sde));
  const NoisePath fine = NoisePath::generate(cfg.seed, T / static_cast<double>(fine_steps), fine_steps);
  std::vector<NoisePath> noises;
  noises.push_back(fine.coarsened(4));
  noises.push_back(fine.coarsened(2));
  noises.push_back(fine);
  std::vector<PathEnsemble> ensembles;
  for (const NoisePath& n : noises)
    ensembles.push_back(simulate_ensemble(base.model, *base.coefficients,
                                          base.rule, n, cfg.particles));

  {
    std::vector<double> hs, errs;
    for (std::size_t i = 0; i < noises.size(); ++i) {
      hs.push_back(noises[i].dt);
      errs.push_back(clearing_residual(base.model, ensembles[i]).sup);
    }
    const double order = detail::log_log_slope(hs, errs);
    add("clearing_order", order,
        "in [" + format_g17(kOrderLo) + ", " + format_g17(kOrderHi) + "]",
        order >= kOrderLo && order <= kOrderHi);
  }

  // Drift-free price impact.
  {
    add("martingale_t_statistic", result.martingale.t_statistic,
        "|t| < " + format_g17(kMartingaleMaxT),
        std::abs(result.martingale.t_statistic) < kMartingaleMaxT);
    add("martingale_regression_r2", result.martingale.regression_r2,
        "> " + format_g17(kMartingaleMinR2),
        result.martingale.regression_r2 > kMartingaleMinR2);
  }

  // Weak transport residual: exact observables and first-order ones.
  {
    const auto fns = standard_test_functions();
    const std::vector<QuadraticTestFunction> exact(fns.begin(), fns.begin() + 4);
    const std::vector<QuadraticTestFunction> first_order(fns.begin() + 4,
                                                         fns.end());
    const auto exact_res = transport_weak_residual(
        base.model, *base.coefficients, base.rule, ensembles.back(), exact);
    const double exact_max =
        *std::max_element(exact_res.begin(), exact_res.end());
    add("transport_exact", exact_max, "< " + format_g17(kTransportExactTol),
        exact_max < kTransportExactTol);

    std::vector<std::vector<double>> residuals;
    for (const PathEnsemble& ens : ensembles)
      residuals.push_back(transport_weak_residual(
          base.model, *base.coefficients, base.rule, ens, first_order));
    std::vector<double> hs;
    for (const NoisePath& n : noises) hs.push_back(n.dt);
    for (std::size_t f = 0; f < first_order.size(); ++f) {
      std::vector<double> errs;
      for (const auto& r : residuals) errs.push_back(r[f]);
      const double order = detail::log_log_slope(hs, errs);
      add("transport_order_" + first_order[f].name, order,
          "in [" + format_g17(kOrderLo) + ", " + format_g17(kOrderHi) + "]",
          order >= kOrderLo && order <= kOrderHi);
    }
  }

  // Storage competition qualitatives.
  {
    double max_corr = -1.0;
    for (const AlphaRun& run : result.runs)
      max_corr = std::max(max_corr, run.corr_supply_price);
    add("negative_supply_price_correlation", max_corr, "< 0", max_corr < 0.0);
  }
  if (result.runs.size() >= 2) {
    std::vector<std::size_t> order_idx(result.runs.size());
    std::iota(order_idx.begin(), order_idx.end(), 0);
    std::sort(order_idx.begin(), order_idx.end(), [&](std::size_t a, std::size_t b) {
      return result.runs[a].alpha < result.runs[b].alpha;
    });
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < order_idx.size(); ++i)
      min_gap = std::min(min_gap, result.runs[order_idx[i]].w_bar -
                                      result.runs[order_idx[i - 1]].w_bar);
    add("w_bar_strictly_increasing", min_gap, "> 0", min_gap > 0.0);
  }
  if (result.offset_applicable) {
    add("price_offset_identity", result.offset_deviation,
        "< " + format_g17(kOffsetTol), result.offset_deviation < kOffsetTol);
  }

  return report;
}

}  // namespace mfgprice
