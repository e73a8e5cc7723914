#include "gpursuit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpursuit/errors.hpp"

namespace gpursuit {

std::vector<PathEstimate> extract_paths(const VirtualChannel& x, const Dictionary& dict) {
  if (x.b_rx != dict.b_rx() || x.b_tx != dict.b_tx())
    throw ConfigError("extract_paths: grid mismatch");
  std::vector<PathEstimate> est;
  est.reserve(x.support.size());
  for (std::size_t k = 0; k < x.support.size(); ++k) {
    const int idx = x.support[k];
    est.push_back({x.values[k], dict.grid_rx[index_to_rx(idx, x.b_rx)],
                   dict.grid_tx[index_to_tx(idx, x.b_rx)]});
  }
  return est;
}

PathMatch match_paths(const std::vector<PathEstimate>& est, const PathSet& truth) {
  const int l = truth.size();
  if (static_cast<int>(est.size()) > l)
    throw ConfigError("match_paths: more estimates than ground-truth paths");
  if (l > 8) throw ConfigError("match_paths: exact assignment limited to L <= 8");

  // Dummy-padded estimate list; dummies sit at angle +pi with zero gain so a
  // missed path keeps its full gain error and a large angle penalty.
  std::vector<PathEstimate> padded = est;
  while (static_cast<int>(padded.size()) < l) padded.push_back({0.0, M_PI, M_PI});

  std::vector<int> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  PathMatch best;
  best.cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < l; ++i) {
      const auto& e = padded[perm[i]];
      const double da = e.aoa - truth.aoa[i];
      const double dd = e.aod - truth.aod[i];
      cost += da * da + dd * dd;
    }
    if (cost < best.cost) {
      best.cost = cost;
      best.estimate_for_truth = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  for (int& idx : best.estimate_for_truth)
    if (idx >= static_cast<int>(est.size())) idx = -1; // matched to a dummy
  return best;
}

PathErrors mse_metrics(const std::vector<PathEstimate>& est, const PathSet& truth,
                       const PathMatch& match) {
  const int l = truth.size();
  if (static_cast<int>(match.estimate_for_truth.size()) != l)
    throw ConfigError("mse_metrics: match/truth size mismatch");
  PathErrors errs;
  for (int i = 0; i < l; ++i) {
    const int idx = match.estimate_for_truth[i];
    const PathEstimate e = idx >= 0 ? est[idx] : PathEstimate{0.0, M_PI, M_PI};
    errs.mse_gain += std::norm(e.gain - truth.gains[i]);
    errs.mse_aoa += (e.aoa - truth.aoa[i]) * (e.aoa - truth.aoa[i]);
    errs.mse_aod += (e.aod - truth.aod[i]) * (e.aod - truth.aod[i]);
  }
  if (l > 0) {
    errs.mse_gain /= l;
    errs.mse_aoa /= l;
    errs.mse_aod /= l;
  }
  return errs;
}

double nmse_channel(const VirtualChannel& x, const Dictionary& dict, const cmat& h_true) {
  if (x.b_rx != dict.b_rx() || x.b_tx != dict.b_tx())
    throw ConfigError("nmse_channel: grid mismatch");
  if (h_true.rows() != dict.m() || h_true.cols() != dict.n())
    throw ConfigError("nmse_channel: channel dims mismatch");
  const double denom = h_true.squaredNorm();
  if (denom == 0.0) throw ConfigError("nmse_channel: true channel is zero");

  cmat h_est = cmat::Zero(dict.m(), dict.n());
  for (std::size_t k = 0; k < x.support.size(); ++k) {
    const int idx = x.support[k];
    h_est.noalias() += x.values[k] * dict.a_rx.col(index_to_rx(idx, x.b_rx)) *
                       dict.a_tx.col(index_to_tx(idx, x.b_rx)).adjoint();
  }
  return (h_est - h_true).squaredNorm() / denom;
}

} // namespace gpursuit
