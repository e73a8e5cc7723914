#pragma once

#include <memory>
#include <vector>

#include "gpursuit/model.hpp"
#include "gpursuit/types.hpp"

namespace gpursuit {

// Coherence bands B_eta(i) = { j : mu(i, j) >= eta } of the measurement
// operator's columns. With orthogonal-row training (Zadoff-Chu), the
// coherence factorizes as mu = mu_RX(|di|) mu_TX(|dj|), two Dirichlet-kernel
// tables, and bands are translates of one offset stencil. Arbitrary training
// falls back to explicit columns.
//
// Immutable after build.
class CoherenceStructure {
public:
  static CoherenceStructure build(const Dictionary& dict,
                                  const TrainingSequence& training, double eta);

  // Hand-assembled bands for tests and synthetic cases. Bands must contain
  // their own index; symmetry is the caller's responsibility.
  static CoherenceStructure from_bands(std::vector<std::vector<int>> bands, double eta);

  double eta() const { return eta_; }
  int size() const { return static_cast<int>(bands_.size()); }
  bool factorized() const { return factorized_; }
  const std::vector<int>& band(int i) const { return bands_[i]; }
  double coherence(int i, int j) const;
  bool all_singleton() const;

private:
  double eta_ = 0.0;
  int b_rx_ = 0, b_tx_ = 0;
  bool factorized_ = false;
  std::vector<double> mu_rx_, mu_tx_;  // factor tables by |offset|
  cmat normalized_columns_;            // dense fallback
  std::vector<std::vector<int>> bands_;
};

struct EtaSelection {
  double eta = 0.0;
  // All cross-coherences vanish (orthogonal dictionary/training); no usable
  // band threshold exists and bands degenerate to singletons.
  bool degenerate = false;
};

// Largest eta for which every index keeps at least one other band member,
// i.e. min_i max_{j != i} mu(i, j).
EtaSelection select_eta(const Dictionary& dict, const TrainingSequence& training);

struct ThresholdResult {
  std::vector<int> support; // sorted ascending
  cvec values;              // z on the support, 0 elsewhere
  bool short_support = false;
};

// Best s-term approximation; magnitude ties break to the lower index and
// exact zeros never enter the support.
ThresholdResult hard_threshold(const cvec& z, int s);

// Band-maximum-selecting thresholding: scanning candidates by decreasing
// |z_i|, index i is accepted only if |z_i| strictly exceeds every band
// member j with x_j equal to x_i (exact complex equality), the rest being
// treated as by-products of a stronger neighbor. x is the solver iterate at
// which z was formed (the gradient, or x + kappa * gradient).
ThresholdResult bms_threshold(const cvec& z, const cvec& x, int s,
                              const CoherenceStructure& bands);

// Band-excluding baseline: greedily select the largest remaining |z_i| and
// remove its whole band from further selection.
ThresholdResult be_threshold(const cvec& z, int s, const CoherenceStructure& bands);

} // namespace gpursuit
