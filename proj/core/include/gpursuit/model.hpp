#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "gpursuit/errors.hpp"
#include "gpursuit/rng.hpp"
#include "gpursuit/types.hpp"

namespace gpursuit {

// Dimensions and scalar parameters of one narrowband MIMO snapshot:
// M receive antennas, N transmit antennas, training length T >= N,
// L propagation paths, steering grids of size B_RX >= M and B_TX >= N,
// and the linear-scale SNR rho.
struct SystemConfig {
  int m = 16;
  int n = 16;
  int t = 20;
  int l = 4;
  int b_rx = 64;
  int b_tx = 64;
  double rho = 100.0;
  std::uint64_t seed = 1;

  int b() const { return b_rx * b_tx; }
  void validate() const; // throws ConfigError on violated invariants
};

void to_json(nlohmann::json& j, const SystemConfig& cfg);
void from_json(const nlohmann::json& j, SystemConfig& cfg);

// Ground-truth path parameters: complex gains and the arrival/departure
// angles in radians, each in [-pi/2, pi/2].
struct PathSet {
  cvec gains;
  rvec aoa;
  rvec aod;

  int size() const { return static_cast<int>(gains.size()); }
  void validate() const;
};

void to_json(nlohmann::json& j, const PathSet& paths);
void from_json(const nlohmann::json& j, PathSet& paths);

// Steering dictionaries sampled on the overcomplete DFT grids
// sin(w_i) = -1 + 2(i-1)/B. Columns are unit-norm steering vectors.
struct Dictionary {
  cmat a_rx;    // M x B_RX
  cmat a_tx;    // N x B_TX
  rvec grid_rx; // B_RX grid angles (radians)
  rvec grid_tx; // B_TX grid angles

  int m() const { return static_cast<int>(a_rx.rows()); }
  int n() const { return static_cast<int>(a_tx.rows()); }
  int b_rx() const { return static_cast<int>(a_rx.cols()); }
  int b_tx() const { return static_cast<int>(a_tx.cols()); }
  int b() const { return b_rx() * b_tx(); }
};

// N x T training matrix whose rows are circular shifts of one length-T
// base sequence. `base` is kept so operators can exploit the circulant
// structure; it is empty for matrices without that structure.
struct TrainingSequence {
  cmat s;
  cvec base;
  int root = 1;

  int n() const { return static_cast<int>(s.rows()); }
  int t() const { return static_cast<int>(s.cols()); }
  bool circulant() const { return base.size() > 0; }
};

// One-bit quantized observations plus everything an estimator is allowed
// to know: the training sequence, the dictionary, and the SNR.
struct MeasurementSet {
  cvec y_hat; // length MT, entries in {+-1 +- 1j}
  double rho = 1.0;
  std::shared_ptr<const TrainingSequence> training;
  std::shared_ptr<const Dictionary> dictionary;
};

// Sparse virtual channel: nonzeros of the B_RX x B_TX coefficient matrix,
// stored as (vec index, value) with column-major vectorization.
struct VirtualChannel {
  int b_rx = 0;
  int b_tx = 0;
  std::vector<int> support;  // sorted ascending, 0-based indices in [0, B)
  std::vector<cplx> values;  // aligned with support

  int b() const { return b_rx * b_tx; }
  int nnz() const { return static_cast<int>(support.size()); }
  cvec dense() const;

  // Keeps entries with |x_k| > tol.
  static VirtualChannel from_dense(const cvec& x, int b_rx, int b_tx,
                                   double tol = 0.0);
};

bool operator==(const VirtualChannel& a, const VirtualChannel& b);

// Column-major pairing between vec indices and grid cells.
inline int cell_to_index(int i_rx, int j_tx, int b_rx) { return j_tx * b_rx + i_rx; }
inline int index_to_rx(int k, int b_rx) { return k % b_rx; }
inline int index_to_tx(int k, int b_rx) { return k / b_rx; }

// Half-wavelength ULA steering vector: k-th entry exp(-j pi (k-1) sin(theta)) / sqrt(m).
cvec steering_vector(double theta, int m);

// H = sum_l gain_l a_rx(aoa_l) a_tx(aod_l)^H.
cmat make_channel(const PathSet& paths, int m, int n);

Dictionary make_dictionary(int m, int n, int b_rx, int b_tx);

// Rows are circular shifts of the length-t Zadoff-Chu sequence with the
// given root (gcd(root, t) must be 1).
TrainingSequence make_zc_training(int n, int t, int root = 1);

// Places each gain at the grid cell nearest in (aoa, aod); throws
// GridCollisionError when two paths land in the same cell. Ties break to
// the lower grid index.
VirtualChannel nearest_grid_map(const PathSet& paths, const Dictionary& dict);

// Element-wise sign(Re) + j sign(Im) with sign(0) := +1.
cvec quantize(const cvec& y);

// M x T noise matrix with i.i.d. CN(0,1) entries, drawn column-major.
cmat make_noise(int m, int t, Philox& rng);

// Quantizes vec(sqrt(rho) H S + noise) around the exact channel of the
// path set, so the gridding error is physically present.
MeasurementSet compose_measurement(double rho, const cmat& h,
                                   std::shared_ptr<const TrainingSequence> training,
                                   std::shared_ptr<const Dictionary> dictionary,
                                   const cmat* noise);

MeasurementSet simulate_measurement(const SystemConfig& cfg, const PathSet& paths,
                                    std::shared_ptr<const TrainingSequence> training,
                                    std::shared_ptr<const Dictionary> dictionary,
                                    Philox& rng, bool noiseless = false);

// gains ~ CN(0,1), angles ~ unif[-pi/2, pi/2], all independent.
PathSet random_paths(int l, Philox& rng);

} // namespace gpursuit
