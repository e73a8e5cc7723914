// Simulation CLI: seeded Monte-Carlo experiments, FISTA gamma calibration,
// the band-gradient proximity probe, and a quick self test.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpursuit/harness.hpp"
#include "gpursuit/metrics.hpp"
#include "gpursuit/version.hpp"

using namespace gpursuit;

namespace {

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  file >> j;
  return ExperimentConfig::from_json(j);
}

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                     std::optional<int> trials, std::optional<std::string> out,
                     std::optional<int> threads,
                     std::optional<std::string> op_mode) {
  if (seed) cfg.system.seed = *seed;
  if (trials) cfg.trials = *trials;
  if (out) cfg.output = *out;
  if (threads) cfg.threads = *threads;
  if (op_mode) {
    if (*op_mode == "dense")
      cfg.forced_mode = OperatorMode::dense;
    else if (*op_mode == "fft")
      cfg.forced_mode = OperatorMode::fft;
    else
      throw ConfigError("--operator must be dense or fft");
  }
}

int cmd_run(const ExperimentConfig& cfg) {
  const ExperimentResult result = run_experiment(cfg);
  write_experiment(result, cfg.output);
  std::printf("wrote %zu rows to %s (+ %s.meta.json)\n", result.rows.size(),
              cfg.output.c_str(), cfg.output.c_str());
  return 0;
}

int cmd_calibrate(const ExperimentConfig& cfg, double snr_db, int pilots) {
  const auto& sys = cfg.system;
  auto training = std::make_shared<const TrainingSequence>(make_zc_training(sys.n, sys.t));
  auto dict = std::make_shared<const Dictionary>(
      make_dictionary(sys.m, sys.n, sys.b_rx, sys.b_tx));
  const double rho = std::pow(10.0, snr_db / 10.0);
  const OperatorMode mode =
      cfg.forced_mode.value_or(MeasurementOperator::default_mode(sys.b_rx));
  MeasurementOperator op(dict, training, mode);

  auto make_pilot = [&](int k) {
    Philox rng(sys.seed, (1ull << 32) + k);
    const PathSet paths = random_paths(sys.l, rng);
    SystemConfig pilot_cfg = sys;
    pilot_cfg.rho = rho;
    const MeasurementSet meas = simulate_measurement(
        pilot_cfg, paths, training, dict, rng, cfg.noiseless);
    return ObjectiveContext(op, meas.y_hat, rho, PriorMode::ml);
  };
  const GammaCalibration cal =
      calibrate_gamma(make_pilot, pilots, cfg.gamma_target_multiple * sys.l);
  nlohmann::json out{{"snr_db", snr_db},
                     {"gamma", cal.gamma},
                     {"mean_sparsity", cal.mean_sparsity},
                     {"target", cfg.gamma_target_multiple * sys.l},
                     {"pilots", pilots},
                     {"fista_runs", cal.evaluations}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_probe(const ExperimentConfig& cfg, double snr_db) {
  const auto& sys = cfg.system;
  auto training = std::make_shared<const TrainingSequence>(make_zc_training(sys.n, sys.t));
  auto dict = std::make_shared<const Dictionary>(
      make_dictionary(sys.m, sys.n, sys.b_rx, sys.b_tx));
  const EtaSelection sel = select_eta(*dict, *training);
  if (sel.degenerate) {
    std::cout << nlohmann::json{{"degenerate_bands", true}, {"pairs", 0}}.dump(2)
              << '\n';
    return 0;
  }
  const auto bands = CoherenceStructure::build(*dict, *training, sel.eta);

  const double rho = std::pow(10.0, snr_db / 10.0);
  Philox rng(sys.seed, 0);
  const PathSet paths = random_paths(sys.l, rng);
  SystemConfig probe_cfg = sys;
  probe_cfg.rho = rho;
  const MeasurementSet meas =
      simulate_measurement(probe_cfg, paths, training, dict, rng, cfg.noiseless);
  const OperatorMode mode =
      cfg.forced_mode.value_or(MeasurementOperator::default_mode(sys.b_rx));
  MeasurementOperator op(dict, training, mode);
  ObjectiveContext ctx(op, meas.y_hat, rho, PriorMode::map);

  const ConjectureGapStats stats =
      conjecture_probe(ctx, bands, cvec::Zero(ctx.b()), 2000, sys.seed);
  nlohmann::json out{{"eta", sel.eta},   {"snr_db", snr_db}, {"pairs", stats.pairs},
                     {"median", stats.median}, {"mean", stats.mean},
                     {"p90", stats.p90}, {"max", stats.max}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  {
    auto dict = std::make_shared<const Dictionary>(make_dictionary(8, 8, 16, 16));
    auto training = std::make_shared<const TrainingSequence>(make_zc_training(8, 10));
    MeasurementOperator dense(dict, training, OperatorMode::dense);
    MeasurementOperator fft(dict, training, OperatorMode::fft);
    Philox rng(1, 0);
    bool ok = true;
    for (int i = 0; i < 10; ++i) {
      cvec x(dense.cols());
      for (int k = 0; k < x.size(); ++k) x[k] = rng.next_cnormal();
      const cvec yd = dense.forward(x);
      ok = ok && (yd - fft.forward(x)).norm() <= 1e-10 * yd.norm();
    }
    report("operator fft/dense agreement", ok);
  }
  {
    report("log_ncdf(0) = -log 2",
           std::abs(log_ncdf(0.0) + std::log(2.0)) < 1e-14);
    report("inverse_mills(0) = sqrt(2/pi)",
           std::abs(inverse_mills(0.0) - std::sqrt(2.0 / M_PI)) < 1e-13);
  }
  {
    SystemConfig cfg{8, 8, 10, 2, 16, 16, 10.0, 7};
    auto training = std::make_shared<const TrainingSequence>(make_zc_training(8, 10));
    auto dict = std::make_shared<const Dictionary>(make_dictionary(8, 8, 16, 16));
    Philox rng(7, 0);
    const PathSet paths = random_paths(2, rng);
    const MeasurementSet meas =
        simulate_measurement(cfg, paths, training, dict, rng, false);
    const auto ctx = ObjectiveContext::from_measurement(meas, PriorMode::map,
                                                        OperatorMode::dense);
    report("objective closed form at zero",
           std::abs(ctx.value(cvec::Zero(ctx.b())) +
                    2.0 * ctx.mt() * std::log(2.0)) < 1e-10);
  }
  {
    ExperimentConfig cfg;
    cfg.system = {8, 8, 10, 2, 16, 16, 1.0, 5};
    cfg.snr_db = {10.0};
    cfg.trials = 2;
    cfg.estimators = {{"bmsgrasp"}};
    const std::string a = run_experiment(cfg).csv();
    const std::string b = run_experiment(cfg).csv();
    report("experiment determinism", a == b);
  }
  std::printf("%s\n", failures == 0 ? "selftest passed" : "selftest FAILED");
  return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-bit mmWave massive MIMO channel estimation via gradient pursuit"};
  app.set_version_flag("--version", GPURSUIT_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, threads;
  std::optional<std::string> out, op_mode;
  double snr_db = 0.0;
  int pilots = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config (json)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the rng seed");
    sub->add_option("--threads", threads, "worker threads for trials");
    sub->add_option("--operator", op_mode, "force operator mode: dense|fft");
  };

  auto* run = app.add_subcommand("run", "run a Monte-Carlo experiment");
  add_common(run, true);
  run->add_option("--trials", trials, "override the trial count");
  run->add_option("--out", out, "override the output csv path");

  auto* cal = app.add_subcommand("calibrate-gamma",
                                 "bisect the FISTA l1 weight to the target sparsity");
  add_common(cal, true);
  cal->add_option("--snr-db", snr_db, "SNR point to calibrate at")->required();
  cal->add_option("--pilots", pilots, "pilot trial count (default from config)");

  auto* probe = app.add_subcommand("probe-conjecture",
                                   "report gradient gaps across coherence bands");
  add_common(probe, true);
  probe->add_option("--snr-db", snr_db, "SNR point for the probe");

  app.add_subcommand("selftest", "run quick invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      apply_overrides(cfg, seed, trials, out, threads, op_mode);
      return cmd_run(cfg);
    }
    if (cal->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      apply_overrides(cfg, seed, trials, out, threads, op_mode);
      return cmd_calibrate(cfg, snr_db, pilots > 0 ? pilots : cfg.gamma_pilots);
    }
    if (probe->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      apply_overrides(cfg, seed, trials, out, threads, op_mode);
      return cmd_probe(cfg, snr_db);
    }
    return cmd_selftest();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
