#include "gpursuit/likelihood.hpp"

#include <cmath>

namespace gpursuit {

namespace {

constexpr double kBranchPoint = -8.0;
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297; // log sqrt(2 pi)

// Asymptotic series S(t) = 1 - 1/t^2 + 3/t^4 - 15/t^6 + ... with optimal
// truncation; Phi(t) = phi(t) S(t) / (-t) for t << 0. At the t = -8 branch
// point the smallest term is ~1e-14, well inside the 1e-10 target.
double mills_series(double t) {
  const double inv_t2 = 1.0 / (t * t);
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * -(2.0 * k - 1.0) * inv_t2;
    if (std::abs(next) >= std::abs(term)) break; // series turned divergent
    sum += next;
    term = next;
    if (std::abs(next) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

} // namespace

double log_ncdf(double t) {
  if (t >= kBranchPoint) return std::log(0.5 * std::erfc(-t * M_SQRT1_2));
  return -0.5 * t * t - kLogSqrt2Pi - std::log(-t) + std::log(mills_series(t));
}

double inverse_mills(double t) {
  if (t >= kBranchPoint) {
    const double pdf = std::exp(-0.5 * t * t - kLogSqrt2Pi);
    const double cdf = 0.5 * std::erfc(-t * M_SQRT1_2);
    return pdf / cdf;
  }
  return -t / mills_series(t);
}

ObjectiveContext::ObjectiveContext(MeasurementOperator op, cvec y_hat, double rho,
                                   PriorMode prior)
    : op_(std::move(op)), y_hat_(std::move(y_hat)), rho_(rho),
      sqrt_2rho_(std::sqrt(2.0 * rho)), prior_(prior) {
  if (!(rho_ > 0.0)) throw ConfigError("ObjectiveContext: rho must be > 0");
  if (y_hat_.size() != op_.rows())
    throw ConfigError("ObjectiveContext: y_hat length does not match operator");
  for (Eigen::Index i = 0; i < y_hat_.size(); ++i)
    if (std::abs(y_hat_[i].real()) != 1.0 || std::abs(y_hat_[i].imag()) != 1.0)
      throw ConfigError("ObjectiveContext: y_hat entries must be +-1 +- 1j");
}

ObjectiveContext ObjectiveContext::from_measurement(const MeasurementSet& meas,
                                                    PriorMode prior,
                                                    OperatorMode mode) {
  MeasurementOperator op(meas.dictionary, meas.training, mode);
  return ObjectiveContext(std::move(op), meas.y_hat, meas.rho, prior);
}

double ObjectiveContext::f_from_forward(const cvec& u) const {
  double f = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    f += log_ncdf(sqrt_2rho_ * y_hat_[i].real() * u[i].real());
    f += log_ncdf(sqrt_2rho_ * y_hat_[i].imag() * u[i].imag());
  }
  return f;
}

cvec ObjectiveContext::weights_from_forward(const cvec& u) const {
  cvec c(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double yr = y_hat_[i].real();
    const double yi = y_hat_[i].imag();
    const double wr = inverse_mills(sqrt_2rho_ * yr * u[i].real()) * sqrt_2rho_ * yr;
    const double wi = inverse_mills(sqrt_2rho_ * yi * u[i].imag()) * sqrt_2rho_ * yi;
    c[i] = {wr, wi};
  }
  return c;
}

double ObjectiveContext::value_from_forward(const cvec& u, const cvec& x) const {
  const double f = f_from_forward(u);
  if (prior_ == PriorMode::map) return f - x.squaredNorm();
  return f;
}

cvec ObjectiveContext::gradient_from_forward(const cvec& u, const cvec& x) const {
  cvec g = op_.adjoint(weights_from_forward(u));
  if (prior_ == PriorMode::map) g -= 2.0 * x;
  return g;
}

cvec ObjectiveContext::gradient_restricted_from_forward(const RestrictedOperator& sub,
                                                        const cvec& u,
                                                        const cvec& x_sub) const {
  cvec g = sub.adjoint(weights_from_forward(u));
  if (prior_ == PriorMode::map) g -= 2.0 * x_sub;
  return g;
}

double ObjectiveContext::value(const cvec& x) const {
  return value_from_forward(op_.forward(x), x);
}

cvec ObjectiveContext::gradient(const cvec& x) const {
  return gradient_from_forward(op_.forward(x), x);
}

double ObjectiveContext::value_restricted(const RestrictedOperator& sub,
                                          const cvec& x_sub) const {
  return value_from_forward(sub.forward(x_sub), x_sub);
}

cvec ObjectiveContext::gradient_restricted(const RestrictedOperator& sub,
                                           const cvec& x_sub) const {
  return gradient_restricted_from_forward(sub, sub.forward(x_sub), x_sub);
}

} // namespace gpursuit
