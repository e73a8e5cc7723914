#pragma once

#include <memory>

#include "gpursuit/likelihood.hpp"
#include "gpursuit/model.hpp"

namespace gpursuit::testutil {

struct Instance {
  SystemConfig cfg;
  PathSet paths;
  std::shared_ptr<const TrainingSequence> training;
  std::shared_ptr<const Dictionary> dict;
  MeasurementSet meas;
};

// Small random instance with on-grid or off-grid paths. Unit-magnitude
// gains avoid the weak-path identifiability floor of noiseless one-bit
// measurements in recovery tests.
inline Instance make_instance(int m, int n, int t, int l, int b_rx, int b_tx,
                              double rho, std::uint64_t seed, bool on_grid = false,
                              bool noiseless = false, bool unit_gains = false) {
  Instance inst;
  inst.cfg = {m, n, t, l, b_rx, b_tx, rho, seed};
  inst.training = std::make_shared<const TrainingSequence>(make_zc_training(n, t));
  inst.dict = std::make_shared<const Dictionary>(make_dictionary(m, n, b_rx, b_tx));
  Philox rng(seed, 0);
  if (on_grid) {
    inst.paths.gains.resize(l);
    inst.paths.aoa.resize(l);
    inst.paths.aod.resize(l);
    // Distinct grid cells, spaced out deterministically.
    for (int i = 0; i < l; ++i) {
      const cplx g = rng.next_cnormal();
      inst.paths.gains[i] = unit_gains ? g / std::abs(g) : g;
      inst.paths.aoa[i] = inst.dict->grid_rx[(1 + i * (b_rx / (l + 1))) % b_rx];
      inst.paths.aod[i] = inst.dict->grid_tx[(2 + i * (b_tx / (l + 1))) % b_tx];
    }
  } else {
    inst.paths = random_paths(l, rng);
  }
  inst.meas = simulate_measurement(inst.cfg, inst.paths, inst.training, inst.dict,
                                   rng, noiseless);
  return inst;
}

inline cvec random_cvec(int n, Philox& rng) {
  cvec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.next_cnormal();
  return v;
}

} // namespace gpursuit::testutil
