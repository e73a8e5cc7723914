#pragma once

#include <vector>

#include "gpursuit/model.hpp"
#include "gpursuit/types.hpp"

namespace gpursuit {

// One recovered path: the nonzero's value and the grid angles of its cell.
struct PathEstimate {
  cplx gain;
  double aoa = 0.0;
  double aod = 0.0;
};

std::vector<PathEstimate> extract_paths(const VirtualChannel& x, const Dictionary& dict);

// Assignment of estimates to ground-truth paths: estimate_for_truth[l] is
// the index into the (dummy-padded) estimate list, or -1 for a dummy.
struct PathMatch {
  std::vector<int> estimate_for_truth;
  double cost = 0.0;
};

// Minimum-cost assignment with per-pair cost
// (aoa_e - aoa_l)^2 + (aod_e - aod_l)^2, exact by permutation enumeration
// (L <= 8). Short estimate lists are padded with zero-gain dummies at angle
// +pi so missed paths contribute their full gain error.
PathMatch match_paths(const std::vector<PathEstimate>& est, const PathSet& truth);

struct PathErrors {
  double mse_gain = 0.0;
  double mse_aoa = 0.0;
  double mse_aod = 0.0;
};

// Single-trial means of |gain error|^2 and squared angle errors over the
// matched pairs; the harness averages across trials.
PathErrors mse_metrics(const std::vector<PathEstimate>& est, const PathSet& truth,
                       const PathMatch& match);

// || A_RX X A_TX^H - H ||_F^2 / ||H||_F^2.
double nmse_channel(const VirtualChannel& x, const Dictionary& dict, const cmat& h_true);

} // namespace gpursuit
