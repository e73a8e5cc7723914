#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "gpursuit/likelihood.hpp"
#include "gpursuit/threshold.hpp"

namespace gpursuit {

enum class ThresholdStrategy { plain, band_excluding, band_maximum };
enum class Algorithm { grasp, grahtp };

struct SolverOptions {
  int sparsity = 4; // L
  ThresholdStrategy strategy = ThresholdStrategy::band_maximum;
  bool debias = false; // GraSP family only
  int max_outer_iters = 50;
  int max_inner_iters = 200;
  double grad_tolerance = 1e-6;
  double backtrack_shrink = 0.5;
  double backtrack_slope = 1e-4;
  double initial_step = 1.0;
  int max_kappa_halvings = 20;
  std::shared_ptr<const CoherenceStructure> bands; // required for BE/BMS

  void validate() const;
};

struct StepRecord {
  std::vector<int> support;
  double objective = 0.0;
  int inner_iters = 0;
  double kappa = 0.0; // GraHTP only
  bool short_support = false;
};

struct SolverReport {
  VirtualChannel estimate;
  std::vector<StepRecord> history;
  int outer_iters = 0;
  double multiply_count = 0.0;
  bool halted_on_support = false; // support repeated, the natural halt
  bool hit_max_outer = false;
  bool short_support = false;

  nlohmann::json to_json() const;
};

bool operator==(const SolverReport& a, const SolverReport& b);

struct InnerSolveResult {
  cvec x; // length B, zero outside the support
  int iters = 0;
  double grad_norm = 0.0;
  std::vector<double> objective_history; // non-decreasing
};

// Maximizes h over { x : supp(x) subset I } by gradient ascent with
// backtracking line search on the restricted objective; only h and its
// gradient are evaluated. Throws NumericalError on non-finite values.
InnerSolveResult restricted_maximize(const ObjectiveContext& ctx,
                                     std::span<const int> support,
                                     const cvec* warm_start,
                                     const SolverOptions& opts);

// One outer iteration of the GraSP family: threshold the gradient at 2L,
// union with the current support, maximize there, keep the best L terms
// (or re-maximize on them when debiasing).
std::pair<cvec, StepRecord> grasp_step(const ObjectiveContext& ctx, const cvec& x,
                                       const SolverOptions& opts);

// One outer iteration of the GraHTP family: threshold x + kappa grad at L
// with kappa from backtracking, then maximize on that support.
std::pair<cvec, StepRecord> grahtp_step(const ObjectiveContext& ctx, const cvec& x,
                                        const SolverOptions& opts);

// Iterates the chosen step from x = 0 until the support repeats or the
// outer-iteration cap is reached.
SolverReport run_estimator(const ObjectiveContext& ctx, Algorithm alg,
                           const SolverOptions& opts);

struct FistaOptions {
  int max_iters = 500;
  double tol = 1e-6;
  double initial_step = 1.0;
  double backtrack_shrink = 0.5;
};

struct FistaResult {
  cvec x;
  std::vector<double> objective_history; // non-decreasing (monotone restarts)
  int iters = 0;
  bool converged = false;
};

// Maximizes f(x) - gamma ||x||_1 by accelerated proximal gradient ascent
// with complex soft thresholding and monotone restarts. The context must be
// in ML mode so value() is the bare log-likelihood.
FistaResult fista(const ObjectiveContext& ctx, double gamma,
                  const FistaOptions& opts = {});

struct GammaCalibration {
  double gamma = 0.0;
  double mean_sparsity = 0.0;
  int evaluations = 0;
};

// Bisects gamma (log-domain) until the mean nonzero count of the FISTA
// estimate over the pilot contexts lands in [target-1, target+1].
// Nonzeros are counted at magnitude > 1e-8.
GammaCalibration calibrate_gamma(const std::function<ObjectiveContext(int)>& make_pilot,
                                 int n_pilots, int target_sparsity,
                                 const FistaOptions& opts = {},
                                 double gamma_lo = 1e-6, double gamma_hi = 1e6);

} // namespace gpursuit
