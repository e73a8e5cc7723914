#include "gpursuit/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gpursuit/linops.hpp"

namespace gpursuit {

namespace {

bool training_rows_orthogonal(const TrainingSequence& training) {
  const cmat gram = training.s * training.s.adjoint();
  const double t = static_cast<double>(training.t());
  return (gram - t * cmat::Identity(training.n(), training.n())).cwiseAbs().maxCoeff() <
         1e-8 * t;
}

std::vector<double> axis_coherence_table(const cmat& a) {
  const int b = static_cast<int>(a.cols());
  std::vector<double> mu(b);
  for (int d = 0; d < b; ++d) mu[d] = std::abs(a.col(0).dot(a.col(d)));
  mu[0] = 1.0;
  return mu;
}

// Indices ordered by decreasing |z|, ties by lower index; exact zeros are
// dropped (they can never be stored nonzeros).
std::vector<int> magnitude_order(const cvec& z) {
  std::vector<int> order;
  order.reserve(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (std::abs(z[i]) > 0.0) order.push_back(static_cast<int>(i));
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(z[a]), mb = std::abs(z[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  return order;
}

ThresholdResult make_result(const cvec& z, std::vector<int> support, int s) {
  ThresholdResult res;
  res.short_support = static_cast<int>(support.size()) < s;
  std::sort(support.begin(), support.end());
  res.values = cvec::Zero(z.size());
  for (int k : support) res.values[k] = z[k];
  res.support = std::move(support);
  return res;
}

} // namespace

CoherenceStructure CoherenceStructure::build(const Dictionary& dict,
                                             const TrainingSequence& training,
                                             double eta) {
  if (!(eta > 0.0 && eta < 1.0))
    throw ConfigError("CoherenceStructure: eta must lie in (0, 1)");
  CoherenceStructure cs;
  cs.eta_ = eta;
  cs.b_rx_ = dict.b_rx();
  cs.b_tx_ = dict.b_tx();
  cs.factorized_ = training.circulant() && training_rows_orthogonal(training);
  const int b = dict.b();
  cs.bands_.resize(b);

  if (cs.factorized_) {
    cs.mu_rx_ = axis_coherence_table(dict.a_rx);
    cs.mu_tx_ = axis_coherence_table(dict.a_tx);
    // Offset stencil: mu_rx(|dr|) mu_tx(|dt|) >= eta. Factors are <= 1, so
    // each factor alone must already clear eta.
    std::vector<std::pair<int, int>> stencil;
    for (int dr = -(cs.b_rx_ - 1); dr <= cs.b_rx_ - 1; ++dr) {
      const double mr = cs.mu_rx_[std::abs(dr)];
      if (mr < eta) continue;
      for (int dt = -(cs.b_tx_ - 1); dt <= cs.b_tx_ - 1; ++dt)
        if (mr * cs.mu_tx_[std::abs(dt)] >= eta) stencil.emplace_back(dr, dt);
    }
    for (int k = 0; k < b; ++k) {
      const int ir = index_to_rx(k, cs.b_rx_);
      const int it = index_to_tx(k, cs.b_rx_);
      for (const auto& [dr, dt] : stencil) {
        const int jr = ir + dr;
        const int jt = it + dt;
        if (jr >= 0 && jr < cs.b_rx_ && jt >= 0 && jt < cs.b_tx_)
          cs.bands_[k].push_back(cell_to_index(jr, jt, cs.b_rx_));
      }
      std::sort(cs.bands_[k].begin(), cs.bands_[k].end());
    }
    return cs;
  }

  // Dense fallback: explicit normalized columns of A.
  MeasurementOperator op(std::make_shared<Dictionary>(dict),
                         std::make_shared<TrainingSequence>(training),
                         OperatorMode::dense);
  cmat a = op.dense_matrix();
  for (int k = 0; k < b; ++k) a.col(k) /= a.col(k).norm();
  cs.normalized_columns_ = std::move(a);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j)
      if (i == j ||
          std::abs(cs.normalized_columns_.col(i).dot(cs.normalized_columns_.col(j))) >=
              eta)
        cs.bands_[i].push_back(j);
  return cs;
}

CoherenceStructure CoherenceStructure::from_bands(std::vector<std::vector<int>> bands,
                                                  double eta) {
  CoherenceStructure cs;
  cs.eta_ = eta;
  cs.b_rx_ = static_cast<int>(bands.size());
  cs.b_tx_ = 1;
  cs.factorized_ = false;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    auto& band = bands[i];
    if (std::find(band.begin(), band.end(), static_cast<int>(i)) == band.end())
      band.push_back(static_cast<int>(i));
    std::sort(band.begin(), band.end());
  }
  cs.bands_ = std::move(bands);
  return cs;
}

double CoherenceStructure::coherence(int i, int j) const {
  if (i < 0 || j < 0 || i >= size() || j >= size())
    throw ConfigError("coherence: index out of range");
  if (factorized_) {
    const int dr = std::abs(index_to_rx(i, b_rx_) - index_to_rx(j, b_rx_));
    const int dt = std::abs(index_to_tx(i, b_rx_) - index_to_tx(j, b_rx_));
    return mu_rx_[dr] * mu_tx_[dt];
  }
  if (normalized_columns_.size() == 0)
    throw ConfigError("coherence: structure has no column data");
  return std::abs(normalized_columns_.col(i).dot(normalized_columns_.col(j)));
}

bool CoherenceStructure::all_singleton() const {
  return std::all_of(bands_.begin(), bands_.end(),
                     [](const std::vector<int>& b) { return b.size() <= 1; });
}

EtaSelection select_eta(const Dictionary& dict, const TrainingSequence& training) {
  if (dict.b() < 2) throw ConfigError("select_eta: dictionary has a single column");
  constexpr double kDegenerateFloor = 1e-9;
  EtaSelection sel;

  if (training.circulant() && training_rows_orthogonal(training)) {
    const auto mu_rx = axis_coherence_table(dict.a_rx);
    const auto mu_tx = axis_coherence_table(dict.a_tx);
    // Per-index best off-diagonal coherence is max over one axis alone
    // (cross products are never larger); the selected eta is the worst of
    // those maxima over all indices.
    auto axis_min_max = [](const std::vector<double>& mu) {
      const int b = static_cast<int>(mu.size());
      double min_max = std::numeric_limits<double>::infinity();
      if (b < 2) return 0.0;
      for (int i = 0; i < b; ++i) {
        double best = 0.0;
        for (int j = 0; j < b; ++j)
          if (j != i) best = std::max(best, mu[std::abs(i - j)]);
        min_max = std::min(min_max, best);
      }
      return min_max;
    };
    const double rx = dict.b_rx() >= 2 ? axis_min_max(mu_rx) : 0.0;
    const double tx = dict.b_tx() >= 2 ? axis_min_max(mu_tx) : 0.0;
    sel.eta = std::max(rx, tx);
  } else {
    MeasurementOperator op(std::make_shared<Dictionary>(dict),
                           std::make_shared<TrainingSequence>(training),
                           OperatorMode::dense);
    cmat a = op.dense_matrix();
    for (int k = 0; k < a.cols(); ++k) a.col(k) /= a.col(k).norm();
    double min_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < a.cols(); ++i) {
      double best = 0.0;
      for (int j = 0; j < a.cols(); ++j)
        if (j != i) best = std::max(best, std::abs(a.col(i).dot(a.col(j))));
      min_max = std::min(min_max, best);
    }
    sel.eta = min_max;
  }
  sel.degenerate = sel.eta < kDegenerateFloor;
  return sel;
}

ThresholdResult hard_threshold(const cvec& z, int s) {
  if (s < 0 || s > z.size()) throw ConfigError("hard_threshold: s out of range");
  auto order = magnitude_order(z);
  if (static_cast<int>(order.size()) > s) order.resize(s);
  // Support can only be short when z has fewer than s nonzeros; callers of
  // the plain threshold treat that as a full result.
  auto res = make_result(z, std::move(order), s);
  res.short_support = false;
  return res;
}

ThresholdResult bms_threshold(const cvec& z, const cvec& x, int s,
                              const CoherenceStructure& bands) {
  if (s < 0 || s > z.size()) throw ConfigError("bms_threshold: s out of range");
  if (bands.size() != z.size() || x.size() != z.size())
    throw ConfigError("bms_threshold: dimension mismatch");
  const auto order = magnitude_order(z);
  std::vector<int> selected;
  for (int i : order) {
    if (static_cast<int>(selected.size()) == s) break;
    // Band maximum criterion: |z_i| must strictly dominate every band
    // member at the same iterate value (max over an empty set is -inf).
    bool band_max = true;
    for (int j : bands.band(i)) {
      if (j == i || x[j] != x[i]) continue;
      if (std::abs(z[i]) <= std::abs(z[j])) {
        band_max = false;
        break;
      }
    }
    if (band_max) selected.push_back(i);
  }
  return make_result(z, std::move(selected), s);
}

ThresholdResult be_threshold(const cvec& z, int s, const CoherenceStructure& bands) {
  if (s < 0 || s > z.size()) throw ConfigError("be_threshold: s out of range");
  if (bands.size() != z.size())
    throw ConfigError("be_threshold: dimension mismatch");
  const auto order = magnitude_order(z);
  std::vector<bool> excluded(z.size(), false);
  std::vector<int> selected;
  for (int i : order) {
    if (static_cast<int>(selected.size()) == s) break;
    if (excluded[i]) continue;
    selected.push_back(i);
    for (int j : bands.band(i)) excluded[j] = true;
  }
  return make_result(z, std::move(selected), s);
}

} // namespace gpursuit
