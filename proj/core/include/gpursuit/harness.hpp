#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpursuit/model.hpp"
#include "gpursuit/solvers.hpp"

namespace gpursuit {

enum class ChannelMode { random, fixed, spread };

// One estimator entry of an experiment. Grid sizes of 0 inherit the
// experiment defaults; absent options resolve to per-estimator defaults
// (GraSP family debiases, prior follows the channel mode, FISTA's gamma is
// calibrated per SNR point).
struct EstimatorSpec {
  std::string name; // grasp|grahtp|begrasp|begrahtp|bmsgrasp|bmsgrahtp|fista
  int b_rx = 0;
  int b_tx = 0;
  std::optional<bool> debias;
  std::optional<PriorMode> prior;
  std::optional<double> gamma;
};

struct ExperimentConfig {
  SystemConfig system;
  ChannelMode channel_mode = ChannelMode::random;
  PathSet fixed_paths;            // fixed mode
  double spread_step = M_PI / 18; // spread mode: aoa_l = aod_l = step (l-1)
  bool noiseless = false;
  std::vector<double> snr_db{0.0};
  int trials = 1;
  std::vector<EstimatorSpec> estimators;
  std::string output = "results.csv";
  int gamma_pilots = 20;
  int gamma_target_multiple = 3; // target sparsity = multiple * L
  std::optional<OperatorMode> forced_mode;
  int threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ResultRow {
  std::string estimator;
  double snr_db = 0.0;
  int trial = 0;
  double mse_gain = 0.0;
  double mse_aoa = 0.0;
  double mse_aod = 0.0;
  double nmse = 0.0;
  int outer_iters = 0;
  double normalized_complexity = 0.0;
  std::string flags;
};

struct ExperimentResult {
  std::vector<ResultRow> rows; // (estimator, snr, trial) order
  nlohmann::json sidecar;      // config echo, version, eta/gamma calibration

  std::string csv() const;
};

// Seeded Monte-Carlo sweep: per trial draws one channel and one noise
// realization from the (seed, trial) stream, shares them across SNR points
// and estimators, runs every estimator, and emits one row per
// (estimator, SNR, trial). Deterministic given the config, including under
// multi-threaded trial execution.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_experiment(const ExperimentResult& result, const std::string& csv_path);

// Multiply count divided by one fft-mode forward+adjoint pair at the
// operator's grid size (the per-iteration cost of message-passing-style
// estimators, which need exactly A x and A^H c each iteration).
double normalized_complexity(double multiply_count, const MeasurementOperator& op);
double normalized_complexity(const SolverReport& report, const MeasurementOperator& op);

struct ConjectureGapStats {
  int pairs = 0;
  double median = 0.0;
  double mean = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

// Diagnostic for the band-gradient proximity assumption: samples band pairs
// (i, j) with x_i = x_j and reports |grad_i - grad_j| / max_k |grad_k|.
// Purely observational; nothing is asserted.
ConjectureGapStats conjecture_probe(const ObjectiveContext& ctx,
                                    const CoherenceStructure& bands, const cvec& x,
                                    int max_pairs = 2000, std::uint64_t seed = 0);

} // namespace gpursuit
