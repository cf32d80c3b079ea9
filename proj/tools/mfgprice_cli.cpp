// Command-line front end: run the bundled storage-competition preset, run an
// experiment described by a config file, or run the verification suite alone.
//
// Exit codes: 0 success, 1 validation or config error, 2 numerical failure,
// 3 failed verification check under --strict.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfgprice/experiment.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> dt_sde;
  std::optional<std::size_t> particles;
  unsigned threads = 0;
  bool strict = false;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--seed", ov.seed, "Brownian driver seed");
  cmd->add_option("--out", ov.out, "output directory");
  cmd->add_option("--dt-sde", ov.dt_sde, "Euler-Maruyama step")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--particles", ov.particles, "agent cloud size");
  cmd->add_option("--threads", ov.threads,
                  "worker threads (0 = auto); results do not depend on this");
  cmd->add_flag("--strict", ov.strict,
                "fail with exit code 3 if any verification check fails");
}

// Output directory precedence: --out flag, then MFGPRICE_OUT, then config.
void apply_overrides(mfgprice::ExperimentConfig& cfg, const Overrides& ov) {
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.dt_sde) cfg.dt_sde = *ov.dt_sde;
  if (ov.particles) cfg.particles = *ov.particles;
  if (ov.out) {
    cfg.output_dir = *ov.out;
  } else if (const char* env = std::getenv("MFGPRICE_OUT");
             env != nullptr && env[0] != '\0') {
    cfg.output_dir = env;
  }
}

void print_result(const mfgprice::ExperimentResult& result) {
  std::printf("alphas:");
  for (const auto& run : result.runs) std::printf(" %g", run.alpha);
  std::printf("\n");
  for (const auto& run : result.runs) {
    std::printf(
        "alpha=%-6g w_bar=% .6f corr(Q,price)=% .4f sup|clearing|=%.3e\n",
        run.alpha, run.w_bar, run.corr_supply_price, run.sup_clearing);
  }
  std::printf("martingale: t=% .3f slope=%.6f R2=%.6f over %zu paths\n",
              result.martingale.t_statistic, result.martingale.regression_slope,
              result.martingale.regression_r2, result.martingale.paths);
  if (result.offset_applicable)
    std::printf("price offset identity deviation: %.3e\n",
                result.offset_deviation);
  for (const auto& file : result.files) std::printf("wrote %s\n", file.c_str());
}

int print_verify_report(const mfgprice::VerifyReport& report, bool strict) {
  for (const auto& check : report.checks) {
    std::printf("[%s] %-34s value=%- .6g  require %s\n",
                check.pass ? "PASS" : "FAIL", check.name.c_str(), check.value,
                check.requirement.c_str());
  }
  std::printf("%s\n", report.all_pass ? "all checks passed"
                                      : "some checks FAILED");
  if (!report.all_pass && strict) return 3;
  return 0;
}

int run_strict_verification(const mfgprice::ExperimentConfig& cfg,
                            const Overrides& ov) {
  if (!ov.strict) return 0;
  std::printf("\nstrict mode: running verification suite\n");
  const auto report = mfgprice::verify_experiment(cfg, ov.threads);
  return print_verify_report(report, true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Linear-quadratic mean-field trading lab: value-function coefficients, "
      "market-clearing price formation, and Monte Carlo verification under "
      "common supply noise"};
  app.require_subcommand(1);

  Overrides fig1_ov, run_ov, verify_ov;
  std::string run_config_path, verify_config_path;

  CLI::App* fig1 = app.add_subcommand(
      "fig1", "storage-competition preset: price paths for four preference shifts");
  add_override_flags(fig1, fig1_ov);

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", run_config_path, "experiment config file")
      ->required();
  add_override_flags(run, run_ov);

  CLI::App* verify =
      app.add_subcommand("verify", "verification suite for an experiment config");
  verify->add_option("config", verify_config_path, "experiment config file")
      ->required();
  add_override_flags(verify, verify_ov);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fig1->parsed()) {
      mfgprice::ExperimentConfig cfg = mfgprice::fig1_config();
      apply_overrides(cfg, fig1_ov);
      print_result(mfgprice::run_experiment(cfg, fig1_ov.threads));
      return run_strict_verification(cfg, fig1_ov);
    }
    if (run->parsed()) {
      mfgprice::ExperimentConfig cfg =
          mfgprice::parse_experiment_config(run_config_path);
      apply_overrides(cfg, run_ov);
      print_result(mfgprice::run_experiment(cfg, run_ov.threads));
      return run_strict_verification(cfg, run_ov);
    }
    mfgprice::ExperimentConfig cfg =
        mfgprice::parse_experiment_config(verify_config_path);
    apply_overrides(cfg, verify_ov);
    const auto report = mfgprice::verify_experiment(cfg, verify_ov.threads);
    return print_verify_report(report, verify_ov.strict);
  } catch (const mfgprice::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const mfgprice::ValidationFailure& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const mfgprice::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
