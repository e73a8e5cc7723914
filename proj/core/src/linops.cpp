#include "gpursuit/linops.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

namespace gpursuit {

namespace {

// Process-wide FFTW plan cache. Plans are created once per (length, sign)
// with FFTW_UNALIGNED so they can execute in-place on any caller buffer;
// creation is serialized (FFTW planning is not thread-safe), execution is.
class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  void execute(cplx* data, int n, int sign) {
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = plans_.find({n, sign});
      if (it == plans_.end()) {
        std::vector<cplx> scratch(n);
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        plan = fftw_plan_dft_1d(n, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(std::make_pair(n, sign), plan);
      } else {
        plan = it->second;
      }
    }
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, p, p);
  }

private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

inline void fft_forward(cplx* data, int n) {
  PlanCache::instance().execute(data, n, FFTW_FORWARD);
}
inline void fft_backward(cplx* data, int n) {
  PlanCache::instance().execute(data, n, FFTW_BACKWARD);
}

inline double alternating_sign(int k) { return (k & 1) ? -1.0 : 1.0; }

} // namespace

MeasurementOperator::MeasurementOperator(std::shared_ptr<const Dictionary> dict,
                                         std::shared_ptr<const TrainingSequence> training,
                                         OperatorMode mode)
    : dict_(std::move(dict)), train_(std::move(training)), mode_(mode) {
  if (!dict_ || !train_) throw ConfigError("MeasurementOperator: null inputs");
  m_ = dict_->m();
  n_ = dict_->n();
  t_ = train_->t();
  b_rx_ = dict_->b_rx();
  b_tx_ = dict_->b_tx();
  if (train_->n() != n_)
    throw ConfigError("MeasurementOperator: dictionary/training dims mismatch");
  if (train_->circulant()) {
    base_spectrum_ = train_->base;
    fft_forward(base_spectrum_.data(), t_);
  }
  if (mode_ == OperatorMode::dense) {
    auto a = std::make_shared<cmat>(rows(), cols());
    for (int k = 0; k < cols(); ++k) a->col(k) = column(k);
    dense_ = std::move(a);
  }
}

MeasurementOperator::MeasurementOperator(const MeasurementOperator& other)
    : dict_(other.dict_), train_(other.train_), mode_(other.mode_), m_(other.m_),
      n_(other.n_), t_(other.t_), b_rx_(other.b_rx_), b_tx_(other.b_tx_),
      base_spectrum_(other.base_spectrum_), dense_(other.dense_),
      multiplies_(other.multiply_count()) {}

MeasurementOperator& MeasurementOperator::operator=(const MeasurementOperator& other) {
  if (this == &other) return *this;
  dict_ = other.dict_;
  train_ = other.train_;
  mode_ = other.mode_;
  m_ = other.m_;
  n_ = other.n_;
  t_ = other.t_;
  b_rx_ = other.b_rx_;
  b_tx_ = other.b_tx_;
  base_spectrum_ = other.base_spectrum_;
  dense_ = other.dense_;
  multiplies_.store(other.multiply_count(), std::memory_order_relaxed);
  return *this;
}

double MeasurementOperator::fft_cost(int n) {
  return 0.5 * n * std::log2(static_cast<double>(n));
}

double MeasurementOperator::fft_forward_cost() const {
  const double s_stage = train_->circulant()
                             ? b_rx_ * (2.0 * fft_cost(t_) + t_)
                             : static_cast<double>(b_rx_) * n_ * t_;
  return b_rx_ * fft_cost(b_tx_) + s_stage + t_ * fft_cost(b_rx_);
}

double MeasurementOperator::fft_adjoint_cost() const {
  const double s_stage = train_->circulant() ? m_ * (2.0 * fft_cost(t_) + t_)
                                             : static_cast<double>(m_) * n_ * t_;
  return s_stage + m_ * fft_cost(b_tx_) + b_tx_ * fft_cost(b_rx_);
}

cvec MeasurementOperator::column(int k) const {
  const int i = index_to_rx(k, b_rx_);
  const int j = index_to_tx(k, b_rx_);
  // vec(a_rx_i (a_tx_j^H S)): entry (t*M + m) = a_rx_i(m) row(t).
  const Eigen::RowVectorXcd row = dict_->a_tx.col(j).adjoint() * train_->s;
  cvec col(rows());
  for (int t = 0; t < t_; ++t)
    for (int m = 0; m < m_; ++m) col[t * m_ + m] = dict_->a_rx(m, i) * row[t];
  return col;
}

cmat MeasurementOperator::dense_matrix() const {
  if (dense_) return *dense_;
  cmat a(rows(), cols());
  for (int k = 0; k < cols(); ++k) a.col(k) = column(k);
  return a;
}

cmat MeasurementOperator::materialize_columns(std::span<const int> indices) const {
  cmat a(rows(), static_cast<int>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const int k = indices[c];
    if (k < 0 || k >= cols())
      throw ConfigError("materialize_columns: index out of range");
    if (dense_)
      a.col(c) = dense_->col(k);
    else
      a.col(c) = column(k);
  }
  count(static_cast<double>(indices.size()) * (n_ + m_) * t_);
  return a;
}

RestrictedOperator MeasurementOperator::column_subset(std::span<const int> indices) const {
  return RestrictedOperator(*this, std::vector<int>(indices.begin(), indices.end()));
}

cvec MeasurementOperator::s_apply(const cvec& v) const {
  // (S v)(r) = sum_t z((t + r) mod T) v(t) = (1/T) B(zhat ⊙ B(v)), first N.
  cvec buf = v;
  fft_backward(buf.data(), t_);
  buf.array() *= base_spectrum_.array();
  fft_backward(buf.data(), t_);
  return buf.head(n_) / static_cast<double>(t_);
}

cvec MeasurementOperator::s_adjoint_apply(const cvec& w) const {
  // S^H w = conj(S_full conj(w_padded)), via the same circulant chain.
  cvec buf = cvec::Zero(t_);
  buf.head(n_) = w.conjugate();
  fft_backward(buf.data(), t_);
  buf.array() *= base_spectrum_.array();
  fft_backward(buf.data(), t_);
  return buf.conjugate() / static_cast<double>(t_);
}

cvec MeasurementOperator::s_multiply(const cvec& v) const {
  if (v.size() != t_) throw ConfigError("s_multiply: v has wrong length");
  if (!train_->circulant()) {
    count(static_cast<double>(n_) * t_);
    return train_->s * v;
  }
  count(2.0 * fft_cost(t_) + t_);
  return s_apply(v);
}

cvec MeasurementOperator::s_adjoint_multiply(const cvec& w) const {
  if (w.size() != n_) throw ConfigError("s_adjoint_multiply: w has wrong length");
  if (!train_->circulant()) {
    count(static_cast<double>(n_) * t_);
    return train_->s.adjoint() * w;
  }
  count(2.0 * fft_cost(t_) + t_);
  return s_adjoint_apply(w);
}

cvec MeasurementOperator::forward(const cvec& x) const {
  if (x.size() != cols()) throw ConfigError("forward: x has wrong length");
  if (mode_ == OperatorMode::dense) {
    count(static_cast<double>(rows()) * cols());
    return *dense_ * x;
  }
  return forward_fft(x);
}

cvec MeasurementOperator::forward_fft(const cvec& x) const {
  count(fft_forward_cost());
  Eigen::Map<const cmat> xmat(x.data(), b_rx_, b_tx_);
  const double rx_scale = 1.0 / std::sqrt(static_cast<double>(m_));
  const double tx_scale = 1.0 / std::sqrt(static_cast<double>(n_));

  // W1 = A_TX X^H: per row r of X, a pruned B_TX-point DFT.
  cmat w1(n_, b_rx_);
  cvec buf(std::max({b_tx_, b_rx_, t_}));
  for (int r = 0; r < b_rx_; ++r) {
    for (int j = 0; j < b_tx_; ++j) buf[j] = std::conj(xmat(r, j));
    fft_forward(buf.data(), b_tx_);
    for (int nn = 0; nn < n_; ++nn)
      w1(nn, r) = buf[nn] * (tx_scale * alternating_sign(nn));
  }

  // W2 = S^H W1, column by column.
  cmat w2(t_, b_rx_);
  if (train_->circulant()) {
    for (int r = 0; r < b_rx_; ++r) w2.col(r) = s_adjoint_apply(w1.col(r));
  } else {
    w2.noalias() = train_->s.adjoint() * w1;
  }

  // Y = A_RX W2^H: per column t, a pruned B_RX-point DFT.
  cmat y(m_, t_);
  for (int tt = 0; tt < t_; ++tt) {
    for (int r = 0; r < b_rx_; ++r) buf[r] = std::conj(w2(tt, r));
    fft_forward(buf.data(), b_rx_);
    for (int mm = 0; mm < m_; ++mm)
      y(mm, tt) = buf[mm] * (rx_scale * alternating_sign(mm));
  }
  return Eigen::Map<const cvec>(y.data(), y.size());
}

cvec MeasurementOperator::adjoint(const cvec& c) const {
  if (c.size() != rows()) throw ConfigError("adjoint: c has wrong length");
  if (mode_ == OperatorMode::dense) {
    count(static_cast<double>(rows()) * cols());
    return dense_->adjoint() * c;
  }
  return adjoint_fft(c);
}

cvec MeasurementOperator::adjoint_fft(const cvec& c) const {
  count(fft_adjoint_cost());
  Eigen::Map<const cmat> cmat_view(c.data(), m_, t_);
  const double rx_scale = 1.0 / std::sqrt(static_cast<double>(m_));
  const double tx_scale = 1.0 / std::sqrt(static_cast<double>(n_));

  // U1 = S C^H, column by column.
  cmat u1(n_, m_);
  if (train_->circulant()) {
    cvec col(t_);
    for (int mm = 0; mm < m_; ++mm) {
      col = cmat_view.row(mm).conjugate().transpose();
      u1.col(mm) = s_apply(col);
    }
  } else {
    u1.noalias() = train_->s * cmat_view.adjoint();
  }

  // U2 = A_TX^H U1: pruned-input B_TX-point inverse DFT per column.
  cmat u2(b_tx_, m_);
  cvec buf(std::max(b_tx_, b_rx_));
  for (int mm = 0; mm < m_; ++mm) {
    buf.setZero();
    for (int nn = 0; nn < n_; ++nn)
      buf[nn] = u1(nn, mm) * (tx_scale * alternating_sign(nn));
    fft_backward(buf.data(), b_tx_);
    u2.col(mm) = buf.head(b_tx_);
  }

  // Xhat = A_RX^H U2^H: pruned-input B_RX-point inverse DFT per column.
  cmat xhat(b_rx_, b_tx_);
  for (int j = 0; j < b_tx_; ++j) {
    buf.setZero();
    for (int mm = 0; mm < m_; ++mm)
      buf[mm] = std::conj(u2(j, mm)) * (rx_scale * alternating_sign(mm));
    fft_backward(buf.data(), b_rx_);
    xhat.col(j) = buf.head(b_rx_);
  }
  return Eigen::Map<const cvec>(xhat.data(), xhat.size());
}

RestrictedOperator::RestrictedOperator(const MeasurementOperator& parent,
                                       std::vector<int> indices)
    : parent_(&parent), indices_(std::move(indices)) {
  for (std::size_t a = 0; a < indices_.size(); ++a)
    for (std::size_t b = a + 1; b < indices_.size(); ++b)
      if (indices_[a] == indices_[b])
        throw ConfigError("RestrictedOperator: duplicate index");
  columns_ = parent_->materialize_columns(indices_);
}

cvec RestrictedOperator::forward(const cvec& x_sub) const {
  if (x_sub.size() != size()) throw ConfigError("RestrictedOperator: wrong length");
  parent_->count(static_cast<double>(parent_->rows()) * size());
  return columns_ * x_sub;
}

cvec RestrictedOperator::adjoint(const cvec& c) const {
  if (c.size() != parent_->rows())
    throw ConfigError("RestrictedOperator: wrong length");
  parent_->count(static_cast<double>(parent_->rows()) * size());
  return columns_.adjoint() * c;
}

} // namespace gpursuit
