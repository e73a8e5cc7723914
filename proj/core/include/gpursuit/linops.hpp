#pragma once

#include <atomic>
#include <memory>
#include <span>
#include <vector>

#include "gpursuit/model.hpp"
#include "gpursuit/types.hpp"

namespace gpursuit {

enum class OperatorMode { dense, fft };

class RestrictedOperator;

// Measurement operator A = S^T conj(A_TX) kron A_RX, evaluated either as an
// explicit MT x B matrix (the correctness oracle) or through FFT chains that
// never materialize A:
//
//   unvec(A x)    = A_RX (S^H (A_TX X^H))^H
//   unvec(A^H c)  = A_RX^H (A_TX^H (S C^H))^H
//
// Both dictionaries are overcomplete DFT matrices, so their action is a
// pruned DFT; multiplication by a circulant-shift S runs through length-T
// transforms of the base sequence spectrum.
//
// The operator is immutable after construction apart from the multiply
// counter. Copies share the immutable payload but carry their own counter,
// so concurrent solver runs each get an accurate cost ledger.
class MeasurementOperator {
public:
  MeasurementOperator(std::shared_ptr<const Dictionary> dict,
                      std::shared_ptr<const TrainingSequence> training,
                      OperatorMode mode);

  MeasurementOperator(const MeasurementOperator& other);
  MeasurementOperator& operator=(const MeasurementOperator& other);

  static OperatorMode default_mode(int b_rx) {
    return b_rx > 32 ? OperatorMode::fft : OperatorMode::dense;
  }

  cvec forward(const cvec& x) const; // length B -> length MT
  cvec adjoint(const cvec& c) const; // length MT -> length B

  // Dense restriction A_I to a column subset; |I| is O(L) in the solvers.
  RestrictedOperator column_subset(std::span<const int> indices) const;

  // MT x |I| block of explicit columns (adds |I| (N+M) T to the counter).
  cmat materialize_columns(std::span<const int> indices) const;

  // Full explicit matrix; test/oracle surface, not counted.
  cmat dense_matrix() const;

  // Training-sequence stage on its own: S v (length T in, first N kept) and
  // S^H w (length N in, length T out). Runs through length-T transforms of
  // the circulant base spectrum; training without that structure falls back
  // to a dense multiply, visible through circulant_fast_path().
  cvec s_multiply(const cvec& v) const;
  cvec s_adjoint_multiply(const cvec& w) const;
  bool circulant_fast_path() const { return train_->circulant(); }

  int rows() const { return m_ * t_; }
  int cols() const { return b_rx_ * b_tx_; }
  OperatorMode mode() const { return mode_; }
  const Dictionary& dictionary() const { return *dict_; }
  const TrainingSequence& training() const { return *train_; }

  // Cumulative complex-multiplication count of every forward/adjoint/
  // column-materialization performed through this instance. FFT stages are
  // counted as (n/2) log2 n per length-n transform plus the pointwise
  // spectrum products; dense stages count full products.
  double multiply_count() const { return multiplies_.load(std::memory_order_relaxed); }
  void reset_multiply_count() { multiplies_.store(0.0, std::memory_order_relaxed); }

  static double fft_cost(int n);
  double fft_forward_cost() const;
  double fft_adjoint_cost() const;
  double fft_pair_cost() const { return fft_forward_cost() + fft_adjoint_cost(); }

private:
  friend class RestrictedOperator;

  void count(double multiplies) const {
    multiplies_.fetch_add(multiplies, std::memory_order_relaxed);
  }
  cvec forward_fft(const cvec& x) const;
  cvec adjoint_fft(const cvec& c) const;
  // S v (length T -> first n kept) and S^H w (length n -> length T).
  cvec s_apply(const cvec& v) const;
  cvec s_adjoint_apply(const cvec& w) const;
  cvec column(int k) const;

  std::shared_ptr<const Dictionary> dict_;
  std::shared_ptr<const TrainingSequence> train_;
  OperatorMode mode_;
  int m_, n_, t_, b_rx_, b_tx_;
  cvec base_spectrum_; // DFT of the training base sequence (circulant case)
  std::shared_ptr<const cmat> dense_;
  mutable std::atomic<double> multiplies_{0.0};
};

// Explicit MT x |I| column block of a parent operator. Multiplications are
// charged to the parent's counter; the parent must outlive the restriction.
class RestrictedOperator {
public:
  RestrictedOperator(const MeasurementOperator& parent, std::vector<int> indices);

  cvec forward(const cvec& x_sub) const;  // length |I| -> length MT
  cvec adjoint(const cvec& c) const;      // length MT -> length |I|

  const std::vector<int>& indices() const { return indices_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const cmat& columns() const { return columns_; }

private:
  const MeasurementOperator* parent_;
  std::vector<int> indices_;
  cmat columns_;
};

} // namespace gpursuit
