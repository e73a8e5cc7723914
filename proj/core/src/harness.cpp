#include "gpursuit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "gpursuit/metrics.hpp"
#include "gpursuit/version.hpp"

namespace gpursuit {

namespace {

// Pilot streams for gamma calibration live far above any trial index.
constexpr std::uint64_t kPilotStreamBase = 1ull << 32;
constexpr int kMaxCollisionRetries = 64;

struct EstimatorKind {
  bool is_fista = false;
  Algorithm alg = Algorithm::grasp;
  ThresholdStrategy strategy = ThresholdStrategy::plain;
};

EstimatorKind parse_estimator_name(const std::string& name) {
  if (name == "fista") return {true, Algorithm::grasp, ThresholdStrategy::plain};
  if (name == "grasp") return {false, Algorithm::grasp, ThresholdStrategy::plain};
  if (name == "grahtp") return {false, Algorithm::grahtp, ThresholdStrategy::plain};
  if (name == "begrasp")
    return {false, Algorithm::grasp, ThresholdStrategy::band_excluding};
  if (name == "begrahtp")
    return {false, Algorithm::grahtp, ThresholdStrategy::band_excluding};
  if (name == "bmsgrasp")
    return {false, Algorithm::grasp, ThresholdStrategy::band_maximum};
  if (name == "bmsgrahtp")
    return {false, Algorithm::grahtp, ThresholdStrategy::band_maximum};
  throw ConfigError("unknown estimator: " + name);
}

struct EstimatorRuntime {
  EstimatorSpec spec;
  EstimatorKind kind;
  bool debias = false;
  PriorMode prior = PriorMode::map;
  std::shared_ptr<const Dictionary> dict;
  std::shared_ptr<const CoherenceStructure> bands;
  double eta = 0.0;
  bool degenerate_bands = false;
  std::unique_ptr<MeasurementOperator> op_proto;
  std::vector<double> gamma_by_snr;
};

PathSet spread_paths(int l, double step) {
  PathSet paths;
  paths.gains.resize(l);
  paths.aoa.resize(l);
  paths.aod.resize(l);
  for (int i = 0; i < l; ++i) {
    paths.gains[i] = std::polar(0.8 + 0.1 * i, M_PI / 4 * i);
    paths.aoa[i] = step * i;
    paths.aod[i] = step * i;
  }
  return paths;
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += '|';
    out += f;
  }
  return out;
}

} // namespace

void ExperimentConfig::validate() const {
  system.validate();
  if (trials < 1) throw ConfigError("ExperimentConfig: trials must be >= 1");
  if (snr_db.empty()) throw ConfigError("ExperimentConfig: SNR list is empty");
  if (estimators.empty()) throw ConfigError("ExperimentConfig: no estimators");
  if (threads < 1) throw ConfigError("ExperimentConfig: threads must be >= 1");
  if (gamma_pilots < 1 || gamma_target_multiple < 1)
    throw ConfigError("ExperimentConfig: bad gamma calibration settings");
  for (const auto& est : estimators) {
    parse_estimator_name(est.name);
    if (est.b_rx < 0 || est.b_tx < 0)
      throw ConfigError("ExperimentConfig: negative grid size");
  }
  if (channel_mode == ChannelMode::fixed) {
    fixed_paths.validate();
    if (fixed_paths.size() != system.l)
      throw ConfigError("ExperimentConfig: fixed paths must match system.l");
  }
  if (channel_mode == ChannelMode::spread) {
    if (!(spread_step >= 0.0) || spread_step * (system.l - 1) > M_PI / 2)
      throw ConfigError("ExperimentConfig: spread step pushes angles past pi/2");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["system"] = system;
  switch (channel_mode) {
    case ChannelMode::random: j["channel"] = {{"mode", "random"}}; break;
    case ChannelMode::fixed:
      j["channel"] = {{"mode", "fixed"}, {"paths", fixed_paths}};
      break;
    case ChannelMode::spread:
      j["channel"] = {{"mode", "spread"}, {"step", spread_step}};
      break;
  }
  j["noiseless"] = noiseless;
  j["snr_db"] = snr_db;
  j["trials"] = trials;
  nlohmann::json ests = nlohmann::json::array();
  for (const auto& e : estimators) {
    nlohmann::json je{{"name", e.name}};
    if (e.b_rx > 0) je["b_rx"] = e.b_rx;
    if (e.b_tx > 0) je["b_tx"] = e.b_tx;
    if (e.debias) je["debias"] = *e.debias;
    if (e.prior) je["prior"] = *e.prior == PriorMode::map ? "map" : "ml";
    if (e.gamma) je["gamma"] = *e.gamma;
    ests.push_back(std::move(je));
  }
  j["estimators"] = std::move(ests);
  j["output"] = output;
  j["gamma_pilots"] = gamma_pilots;
  j["gamma_target_multiple"] = gamma_target_multiple;
  if (forced_mode)
    j["operator"] = *forced_mode == OperatorMode::dense ? "dense" : "fft";
  j["threads"] = threads;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.system = j.at("system").get<SystemConfig>();
  if (j.contains("channel")) {
    const auto& ch = j.at("channel");
    const std::string mode = ch.value("mode", "random");
    if (mode == "random") {
      cfg.channel_mode = ChannelMode::random;
    } else if (mode == "fixed") {
      cfg.channel_mode = ChannelMode::fixed;
      cfg.fixed_paths = ch.at("paths").get<PathSet>();
    } else if (mode == "spread") {
      cfg.channel_mode = ChannelMode::spread;
      cfg.spread_step = ch.at("step").get<double>();
    } else {
      throw ConfigError("ExperimentConfig: unknown channel mode " + mode);
    }
  }
  cfg.noiseless = j.value("noiseless", false);
  cfg.snr_db = j.at("snr_db").get<std::vector<double>>();
  cfg.trials = j.value("trials", 1);
  for (const auto& je : j.at("estimators")) {
    EstimatorSpec e;
    e.name = je.at("name").get<std::string>();
    e.b_rx = je.value("b_rx", 0);
    e.b_tx = je.value("b_tx", 0);
    if (je.contains("debias")) e.debias = je.at("debias").get<bool>();
    if (je.contains("prior")) {
      const std::string p = je.at("prior").get<std::string>();
      if (p == "map")
        e.prior = PriorMode::map;
      else if (p == "ml")
        e.prior = PriorMode::ml;
      else
        throw ConfigError("ExperimentConfig: unknown prior " + p);
    }
    if (je.contains("gamma")) e.gamma = je.at("gamma").get<double>();
    cfg.estimators.push_back(std::move(e));
  }
  cfg.output = j.value("output", std::string("results.csv"));
  cfg.gamma_pilots = j.value("gamma_pilots", 20);
  cfg.gamma_target_multiple = j.value("gamma_target_multiple", 3);
  if (j.contains("operator")) {
    const std::string m = j.at("operator").get<std::string>();
    if (m == "dense")
      cfg.forced_mode = OperatorMode::dense;
    else if (m == "fft")
      cfg.forced_mode = OperatorMode::fft;
    else
      throw ConfigError("ExperimentConfig: unknown operator mode " + m);
  }
  cfg.threads = j.value("threads", 1);
  return cfg;
}

namespace {

// Channel draw for one trial; collisions on the reference grid regenerate
// the path set from the same stream.
PathSet draw_paths(const ExperimentConfig& cfg, const Dictionary& reference_grid,
                   Philox& rng) {
  switch (cfg.channel_mode) {
    case ChannelMode::fixed: return cfg.fixed_paths;
    case ChannelMode::spread: return spread_paths(cfg.system.l, cfg.spread_step);
    case ChannelMode::random: break;
  }
  for (int attempt = 0; attempt < kMaxCollisionRetries; ++attempt) {
    PathSet paths = random_paths(cfg.system.l, rng);
    try {
      nearest_grid_map(paths, reference_grid);
      return paths;
    } catch (const GridCollisionError&) {
      continue;
    }
  }
  throw ConfigError("run_experiment: could not draw a collision-free path set");
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  const auto& sys = cfg.system;
  auto training = std::make_shared<const TrainingSequence>(make_zc_training(sys.n, sys.t));
  auto reference_grid = std::make_shared<const Dictionary>(
      make_dictionary(sys.m, sys.n, sys.b_rx, sys.b_tx));

  // Per-estimator immutable resources.
  std::vector<EstimatorRuntime> runtimes;
  for (const auto& spec : cfg.estimators) {
    EstimatorRuntime rt;
    rt.spec = spec;
    rt.kind = parse_estimator_name(spec.name);
    const int b_rx = spec.b_rx > 0 ? spec.b_rx : sys.b_rx;
    const int b_tx = spec.b_tx > 0 ? spec.b_tx : sys.b_tx;
    rt.dict = (b_rx == sys.b_rx && b_tx == sys.b_tx)
                  ? reference_grid
                  : std::make_shared<const Dictionary>(
                        make_dictionary(sys.m, sys.n, b_rx, b_tx));
    rt.debias = spec.debias.value_or(rt.kind.alg == Algorithm::grasp && !rt.kind.is_fista);
    rt.prior = spec.prior.value_or(cfg.channel_mode == ChannelMode::random
                                       ? PriorMode::map
                                       : PriorMode::ml);
    if (rt.kind.is_fista) rt.prior = PriorMode::ml; // FISTA handles its own prior
    const OperatorMode mode =
        cfg.forced_mode.value_or(MeasurementOperator::default_mode(b_rx));
    rt.op_proto = std::make_unique<MeasurementOperator>(rt.dict, training, mode);
    if (rt.kind.strategy != ThresholdStrategy::plain) {
      const EtaSelection sel = select_eta(*rt.dict, *training);
      rt.degenerate_bands = sel.degenerate;
      rt.eta = sel.degenerate ? 0.5 : sel.eta;
      rt.bands = std::make_shared<const CoherenceStructure>(
          CoherenceStructure::build(*rt.dict, *training, rt.eta));
    }
    rt.gamma_by_snr.assign(cfg.snr_db.size(), 0.0);
    runtimes.push_back(std::move(rt));
  }

  // Gamma calibration per FISTA estimator and SNR point.
  nlohmann::json gamma_log = nlohmann::json::array();
  for (std::size_t e = 0; e < runtimes.size(); ++e) {
    auto& rt = runtimes[e];
    if (!rt.kind.is_fista) continue;
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
      if (rt.spec.gamma) {
        rt.gamma_by_snr[si] = *rt.spec.gamma;
        continue;
      }
      const double rho = std::pow(10.0, cfg.snr_db[si] / 10.0);
      auto make_pilot = [&, si](int k) {
        Philox rng(sys.seed, kPilotStreamBase + si * cfg.gamma_pilots + k);
        const PathSet paths = draw_paths(cfg, *reference_grid, rng);
        const cmat h = make_channel(paths, sys.m, sys.n);
        const cmat noise = make_noise(sys.m, sys.t, rng);
        MeasurementSet meas = compose_measurement(
            rho, h, training, rt.dict, cfg.noiseless ? nullptr : &noise);
        return ObjectiveContext(*rt.op_proto, meas.y_hat, rho, PriorMode::ml);
      };
      const GammaCalibration cal =
          calibrate_gamma(make_pilot, cfg.gamma_pilots,
                          cfg.gamma_target_multiple * sys.l);
      rt.gamma_by_snr[si] = cal.gamma;
      gamma_log.push_back({{"estimator", rt.spec.name},
                           {"snr_db", cfg.snr_db[si]},
                           {"gamma", cal.gamma},
                           {"mean_sparsity", cal.mean_sparsity},
                           {"fista_runs", cal.evaluations}});
    }
  }

  const int n_snr = static_cast<int>(cfg.snr_db.size());
  const int n_est = static_cast<int>(runtimes.size());
  std::vector<std::vector<ResultRow>> rows_by_trial(cfg.trials);

  auto run_trial = [&](int trial) {
    Philox rng(sys.seed, static_cast<std::uint64_t>(trial));
    const PathSet paths = draw_paths(cfg, *reference_grid, rng);
    const cmat h = make_channel(paths, sys.m, sys.n);
    const cmat noise =
        cfg.noiseless ? cmat() : make_noise(sys.m, sys.t, rng);

    std::vector<ResultRow>& rows = rows_by_trial[trial];
    rows.resize(static_cast<std::size_t>(n_est) * n_snr);
    for (int si = 0; si < n_snr; ++si) {
      const double rho = std::pow(10.0, cfg.snr_db[si] / 10.0);
      const MeasurementSet meas =
          compose_measurement(rho, h, training, reference_grid,
                              cfg.noiseless ? nullptr : &noise);
      for (int e = 0; e < n_est; ++e) {
        const auto& rt = runtimes[e];
        ObjectiveContext ctx(*rt.op_proto, meas.y_hat, rho, rt.prior);

        ResultRow row;
        row.estimator = rt.spec.name;
        row.snr_db = cfg.snr_db[si];
        row.trial = trial;
        std::vector<std::string> flags;

        VirtualChannel estimate;
        if (rt.kind.is_fista) {
          const FistaResult fr = fista(ctx, rt.gamma_by_snr[si]);
          estimate = VirtualChannel::from_dense(fr.x, rt.dict->b_rx(),
                                                rt.dict->b_tx(), 1e-8);
          row.outer_iters = fr.iters;
          if (!fr.converged) flags.push_back("fista_max_iters");
          row.normalized_complexity =
              normalized_complexity(ctx.op().multiply_count(), ctx.op());
        } else {
          SolverOptions opts;
          opts.sparsity = sys.l;
          opts.strategy = rt.kind.strategy;
          opts.debias = rt.debias;
          opts.bands = rt.bands;
          const SolverReport report = run_estimator(ctx, rt.kind.alg, opts);
          estimate = report.estimate;
          row.outer_iters = report.outer_iters;
          if (report.hit_max_outer) flags.push_back("max_outer");
          if (report.short_support) flags.push_back("short_support");
          row.normalized_complexity = normalized_complexity(report, ctx.op());
        }
        if (rt.degenerate_bands) flags.push_back("degenerate_bands");

        // Path metrics need at most L estimates; over-complete estimates
        // (FISTA) are reduced to their L strongest entries.
        VirtualChannel for_paths = estimate;
        if (estimate.nnz() > sys.l) {
          const ThresholdResult top = hard_threshold(estimate.dense(), sys.l);
          for_paths = VirtualChannel::from_dense(top.values, estimate.b_rx,
                                                 estimate.b_tx);
        }
        const auto est_paths = extract_paths(for_paths, *rt.dict);
        const PathMatch match = match_paths(est_paths, paths);
        const PathErrors errs = mse_metrics(est_paths, paths, match);
        row.mse_gain = errs.mse_gain;
        row.mse_aoa = errs.mse_aoa;
        row.mse_aod = errs.mse_aod;
        row.nmse = nmse_channel(estimate, *rt.dict, h);
        row.flags = join_flags(flags);
        rows[static_cast<std::size_t>(e) * n_snr + si] = std::move(row);
      }
    }
  };

  if (cfg.threads == 1 || cfg.trials == 1) {
    for (int trial = 0; trial < cfg.trials; ++trial) run_trial(trial);
  } else {
    std::atomic<int> next_trial{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const int trial = next_trial.fetch_add(1);
        if (trial >= cfg.trials) return;
        try {
          run_trial(trial);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(cfg.threads, cfg.trials);
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ExperimentResult result;
  result.rows.reserve(static_cast<std::size_t>(cfg.trials) * n_est * n_snr);
  for (int e = 0; e < n_est; ++e)
    for (int si = 0; si < n_snr; ++si)
      for (int trial = 0; trial < cfg.trials; ++trial)
        result.rows.push_back(
            rows_by_trial[trial][static_cast<std::size_t>(e) * n_snr + si]);

  nlohmann::json estimators_meta = nlohmann::json::array();
  for (const auto& rt : runtimes) {
    nlohmann::json je{{"name", rt.spec.name},
                      {"b_rx", rt.dict->b_rx()},
                      {"b_tx", rt.dict->b_tx()},
                      {"prior", rt.prior == PriorMode::map ? "map" : "ml"},
                      {"operator", rt.op_proto->mode() == OperatorMode::dense
                                       ? "dense"
                                       : "fft"}};
    if (rt.bands) {
      je["eta"] = rt.eta;
      je["degenerate_bands"] = rt.degenerate_bands;
    }
    if (!rt.kind.is_fista) je["debias"] = rt.debias;
    estimators_meta.push_back(std::move(je));
  }
  result.sidecar = {{"version", version()},
                    {"config", cfg.to_json()},
                    {"estimators", estimators_meta},
                    {"gamma_calibration", gamma_log}};
  return result;
}

std::string ExperimentResult::csv() const {
  std::string out =
      "estimator,snr_db,trial,mse_gain,mse_aoa,mse_aod,nmse,outer_iters,"
      "normalized_complexity,flags\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%d,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%s\n",
                  r.estimator.c_str(), r.snr_db, r.trial, r.mse_gain, r.mse_aoa,
                  r.mse_aod, r.nmse, r.outer_iters, r.normalized_complexity,
                  r.flags.c_str());
    out += buf;
  }
  return out;
}

void write_experiment(const ExperimentResult& result, const std::string& csv_path) {
  {
    std::ofstream file(csv_path, std::ios::binary);
    if (!file) throw ConfigError("write_experiment: cannot open " + csv_path);
    file << result.csv();
  }
  std::ofstream meta(csv_path + ".meta.json", std::ios::binary);
  if (!meta) throw ConfigError("write_experiment: cannot open sidecar");
  meta << result.sidecar.dump(2) << '\n';
}

double normalized_complexity(double multiply_count, const MeasurementOperator& op) {
  return multiply_count / op.fft_pair_cost();
}

double normalized_complexity(const SolverReport& report, const MeasurementOperator& op) {
  return normalized_complexity(report.multiply_count, op);
}

ConjectureGapStats conjecture_probe(const ObjectiveContext& ctx,
                                    const CoherenceStructure& bands, const cvec& x,
                                    int max_pairs, std::uint64_t seed) {
  ConjectureGapStats stats;
  if (bands.all_singleton()) return stats;
  const cvec g = ctx.gradient(x);
  const double gmax = g.cwiseAbs().maxCoeff();
  if (gmax == 0.0) return stats;

  Philox rng(seed, 0xC011EC7ull);
  std::vector<double> gaps;
  const int attempts = max_pairs * 4;
  for (int a = 0; a < attempts && static_cast<int>(gaps.size()) < max_pairs; ++a) {
    const int i = static_cast<int>(rng.next_u64() % bands.size());
    for (int j : bands.band(i)) {
      if (j == i || x[j] != x[i]) continue;
      gaps.push_back(std::abs(g[i] - g[j]) / gmax);
      if (static_cast<int>(gaps.size()) == max_pairs) break;
    }
  }
  if (gaps.empty()) return stats;
  std::sort(gaps.begin(), gaps.end());
  stats.pairs = static_cast<int>(gaps.size());
  stats.median = gaps[gaps.size() / 2];
  stats.p90 = gaps[static_cast<std::size_t>(0.9 * (gaps.size() - 1))];
  stats.max = gaps.back();
  double sum = 0.0;
  for (double v : gaps) sum += v;
  stats.mean = sum / gaps.size();
  return stats;
}

} // namespace gpursuit
