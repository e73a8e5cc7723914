#pragma once

#include "gpursuit/linops.hpp"
#include "gpursuit/model.hpp"
#include "gpursuit/types.hpp"

namespace gpursuit {

// log Phi(t) for the standard normal CDF, stable over t in [-40, 40].
// Below t = -8 the scaled asymptotic expansion replaces the direct erfc
// evaluation, which would underflow near t ~ -38.
double log_ncdf(double t);

// Inverse Mills ratio phi(t)/Phi(t); positive and strictly decreasing.
double inverse_mills(double t);

enum class PriorMode { map, ml };

// The estimation objective h(x) = f(x) + g(x) with
//   f(x) = sum_i log Phi(sqrt(2 rho) yhat_R,i (A_R x_R)_i)
//   g(x) = -||x||^2 (map) or 0 (ml),
// together with its gradient in the complex stacking convention
// (Re part = d/dRe x, Im part = d/dIm x). All evaluations route matrix
// products through the measurement operator, and restricted variants work
// on a column subset so their cost scales with |I| instead of B.
//
// Immutable after construction; evaluations are const and may run
// concurrently.
class ObjectiveContext {
public:
  ObjectiveContext(MeasurementOperator op, cvec y_hat, double rho, PriorMode prior);

  static ObjectiveContext from_measurement(const MeasurementSet& meas, PriorMode prior,
                                           OperatorMode mode);

  double value(const cvec& x) const;
  cvec gradient(const cvec& x) const;

  // Equal to value/gradient of the zero-padded vector, restricted to the
  // subset's indices.
  double value_restricted(const RestrictedOperator& sub, const cvec& x_sub) const;
  cvec gradient_restricted(const RestrictedOperator& sub, const cvec& x_sub) const;

  // Split evaluation for iterative solvers: compute u = A x once, then
  // derive the objective and gradient from it without repeating the
  // forward pass.
  double value_from_forward(const cvec& u, const cvec& x) const;
  cvec gradient_from_forward(const cvec& u, const cvec& x) const;
  cvec gradient_restricted_from_forward(const RestrictedOperator& sub, const cvec& u,
                                        const cvec& x_sub) const;

  const MeasurementOperator& op() const { return op_; }
  double rho() const { return rho_; }
  PriorMode prior() const { return prior_; }
  int b() const { return op_.cols(); }
  int mt() const { return op_.rows(); }

private:
  // f and the gradient weight vector c from u = A x.
  double f_from_forward(const cvec& u) const;
  cvec weights_from_forward(const cvec& u) const;

  MeasurementOperator op_;
  cvec y_hat_;
  double rho_;
  double sqrt_2rho_;
  PriorMode prior_;
};

} // namespace gpursuit
