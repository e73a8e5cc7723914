#include "gpursuit/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace gpursuit {

namespace {

bool all_finite(const cvec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  return true;
}

ThresholdResult apply_strategy(const SolverOptions& opts, const cvec& z,
                               const cvec& iterate, int s) {
  switch (opts.strategy) {
    case ThresholdStrategy::plain:
      return hard_threshold(z, s);
    case ThresholdStrategy::band_excluding:
      if (!opts.bands) throw ConfigError("band-excluding threshold needs bands");
      return be_threshold(z, s, *opts.bands);
    case ThresholdStrategy::band_maximum:
      if (!opts.bands) throw ConfigError("band-maximum threshold needs bands");
      return bms_threshold(z, iterate, s, *opts.bands);
  }
  throw ConfigError("unknown threshold strategy");
}

std::vector<int> support_of(const cvec& x) {
  std::vector<int> s;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) > 0.0) s.push_back(static_cast<int>(i));
  return s;
}

std::vector<int> union_sorted(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

// Objective of a sparse vector through the restricted evaluation, so the
// cost scales with the support instead of B.
double sparse_value(const ObjectiveContext& ctx, const std::vector<int>& support,
                    const cvec& padded) {
  if (support.empty()) return ctx.value_restricted(ctx.op().column_subset({}), cvec{});
  RestrictedOperator sub = ctx.op().column_subset(support);
  cvec xs(support.size());
  for (std::size_t k = 0; k < support.size(); ++k) xs[k] = padded[support[k]];
  return ctx.value_restricted(sub, xs);
}

} // namespace

void SolverOptions::validate() const {
  if (sparsity < 1) throw ConfigError("SolverOptions: sparsity must be >= 1");
  if (grad_tolerance <= 0.0 || backtrack_slope <= 0.0 || initial_step <= 0.0)
    throw ConfigError("SolverOptions: tolerances and steps must be > 0");
  if (backtrack_shrink <= 0.0 || backtrack_shrink >= 1.0)
    throw ConfigError("SolverOptions: shrink factor must lie in (0, 1)");
  if (max_outer_iters < 1 || max_inner_iters < 1)
    throw ConfigError("SolverOptions: iteration caps must be >= 1");
  if ((strategy == ThresholdStrategy::band_excluding ||
       strategy == ThresholdStrategy::band_maximum) &&
      !bands)
    throw ConfigError("SolverOptions: banded strategies need a CoherenceStructure");
}

InnerSolveResult restricted_maximize(const ObjectiveContext& ctx,
                                     std::span<const int> support,
                                     const cvec* warm_start,
                                     const SolverOptions& opts) {
  InnerSolveResult res;
  res.x = cvec::Zero(ctx.b());
  if (support.empty()) return res;

  std::vector<int> idx(support.begin(), support.end());
  std::sort(idx.begin(), idx.end());
  for (int k : idx)
    if (k < 0 || k >= ctx.b())
      throw ConfigError("restricted_maximize: index out of range");

  const RestrictedOperator sub = ctx.op().column_subset(idx);
  cvec xs = cvec::Zero(sub.size());
  if (warm_start != nullptr)
    for (int k = 0; k < sub.size(); ++k) xs[k] = (*warm_start)[idx[k]];

  cvec u = sub.forward(xs);
  double h = ctx.value_from_forward(u, xs);
  if (!std::isfinite(h)) throw NumericalError("restricted_maximize: h is not finite");
  res.objective_history.push_back(h);

  // The accepted step carries over (with one growth notch) so the search
  // does not re-shrink from scratch every iteration.
  double step = opts.initial_step;
  for (int it = 0; it < opts.max_inner_iters; ++it) {
    const cvec g = ctx.gradient_restricted_from_forward(sub, u, xs);
    if (!all_finite(g))
      throw NumericalError("restricted_maximize: gradient is not finite");
    const double gn2 = g.squaredNorm();
    res.grad_norm = std::sqrt(gn2);
    if (res.grad_norm <= opts.grad_tolerance) break;

    step = std::min(opts.initial_step, step / opts.backtrack_shrink);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const cvec cand = xs + step * g;
      const cvec u_cand = sub.forward(cand);
      const double hc = ctx.value_from_forward(u_cand, cand);
      if (std::isfinite(hc) && hc >= h + opts.backtrack_slope * step * gn2) {
        xs = cand;
        u = u_cand;
        h = hc;
        accepted = true;
        break;
      }
      step *= opts.backtrack_shrink;
    }
    res.iters = it + 1;
    if (!accepted) break; // no ascent direction at machine scale
    res.objective_history.push_back(h);
  }

  for (int k = 0; k < sub.size(); ++k) res.x[idx[k]] = xs[k];
  return res;
}

std::pair<cvec, StepRecord> grasp_step(const ObjectiveContext& ctx, const cvec& x,
                                       const SolverOptions& opts) {
  const int l = opts.sparsity;
  const cvec z = ctx.gradient(x);
  ThresholdResult thr = apply_strategy(opts, z, x, 2 * l);
  const std::vector<int> merged = union_sorted(thr.support, support_of(x));

  InnerSolveResult inner = restricted_maximize(ctx, merged, &x, opts);
  StepRecord rec;
  rec.inner_iters = inner.iters;
  rec.short_support = thr.short_support;

  ThresholdResult keep = hard_threshold(inner.x, l);
  cvec next = keep.values;
  if (opts.debias && !keep.support.empty()) {
    InnerSolveResult debiased = restricted_maximize(ctx, keep.support, &next, opts);
    rec.inner_iters += debiased.iters;
    next = debiased.x;
  }

  rec.support = support_of(next);
  rec.objective = sparse_value(ctx, rec.support, next);
  return {std::move(next), std::move(rec)};
}

std::pair<cvec, StepRecord> grahtp_step(const ObjectiveContext& ctx, const cvec& x,
                                        const SolverOptions& opts) {
  const int l = opts.sparsity;
  const cvec g = ctx.gradient(x);
  const double h0 = sparse_value(ctx, support_of(x), x);

  // Backtrack kappa until the thresholded trial does not decrease h.
  double kappa = opts.initial_step;
  ThresholdResult thr;
  for (int halving = 0; halving <= opts.max_kappa_halvings; ++halving) {
    const cvec z = x + kappa * g;
    thr = apply_strategy(opts, z, x, l);
    const double trial = sparse_value(ctx, thr.support, thr.values);
    if (std::isfinite(trial) && trial >= h0 - 1e-12) break;
    if (halving == opts.max_kappa_halvings) break; // keep the last kappa
    kappa *= 0.5;
  }

  InnerSolveResult inner = restricted_maximize(ctx, thr.support, &x, opts);
  StepRecord rec;
  rec.kappa = kappa;
  rec.inner_iters = inner.iters;
  rec.short_support = thr.short_support;
  rec.support = support_of(inner.x);
  rec.objective = sparse_value(ctx, rec.support, inner.x);
  return {std::move(inner.x), std::move(rec)};
}

SolverReport run_estimator(const ObjectiveContext& ctx, Algorithm alg,
                           const SolverOptions& opts) {
  opts.validate();
  const double count0 = ctx.op().multiply_count();

  SolverReport report;
  cvec x = cvec::Zero(ctx.b());
  std::vector<int> prev_support; // supp(0) = {}

  for (int outer = 0; outer < opts.max_outer_iters; ++outer) {
    auto [next, rec] = alg == Algorithm::grasp ? grasp_step(ctx, x, opts)
                                               : grahtp_step(ctx, x, opts);
    x = std::move(next);
    const std::vector<int> cur_support = rec.support;
    report.short_support = report.short_support || rec.short_support;
    report.history.push_back(std::move(rec));
    if (cur_support == prev_support) {
      report.halted_on_support = true;
      break;
    }
    prev_support = cur_support;
  }
  report.hit_max_outer = !report.halted_on_support;
  report.outer_iters = static_cast<int>(report.history.size());
  report.estimate = VirtualChannel::from_dense(x, ctx.op().dictionary().b_rx(),
                                               ctx.op().dictionary().b_tx());
  report.multiply_count = ctx.op().multiply_count() - count0;
  return report;
}

nlohmann::json SolverReport::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& rec : history) {
    hist.push_back({{"support", rec.support},
                    {"objective", rec.objective},
                    {"inner_iters", rec.inner_iters},
                    {"kappa", rec.kappa},
                    {"short_support", rec.short_support}});
  }
  std::vector<double> re(estimate.values.size()), im(estimate.values.size());
  for (std::size_t i = 0; i < estimate.values.size(); ++i) {
    re[i] = estimate.values[i].real();
    im[i] = estimate.values[i].imag();
  }
  return {{"support", estimate.support},
          {"values_re", re},
          {"values_im", im},
          {"history", hist},
          {"outer_iters", outer_iters},
          {"multiply_count", multiply_count},
          {"halted_on_support", halted_on_support},
          {"hit_max_outer", hit_max_outer},
          {"short_support", short_support}};
}

bool operator==(const SolverReport& a, const SolverReport& b) {
  if (!(a.estimate == b.estimate) || a.outer_iters != b.outer_iters ||
      a.halted_on_support != b.halted_on_support ||
      a.hit_max_outer != b.hit_max_outer || a.short_support != b.short_support ||
      a.history.size() != b.history.size())
    return false;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const auto& ra = a.history[i];
    const auto& rb = b.history[i];
    if (ra.support != rb.support || ra.objective != rb.objective ||
        ra.inner_iters != rb.inner_iters || ra.kappa != rb.kappa)
      return false;
  }
  return true;
}

namespace {

cvec soft_threshold(const cvec& v, double tau) {
  cvec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    out[i] = mag > tau ? v[i] * (1.0 - tau / mag) : cplx(0.0, 0.0);
  }
  return out;
}

double l1_norm(const cvec& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::abs(v[i]);
  return s;
}

} // namespace

FistaResult fista(const ObjectiveContext& ctx, double gamma, const FistaOptions& opts) {
  if (!(gamma > 0.0)) throw ConfigError("fista: gamma must be > 0");
  if (ctx.prior() != PriorMode::ml)
    throw ConfigError("fista: context must be in ML mode (f only)");

  FistaResult res;
  cvec x = cvec::Zero(ctx.b());
  cvec y = x;
  double theta = 1.0;
  double fx = ctx.value(x);
  double best = fx - gamma * l1_norm(x);
  res.objective_history.push_back(best);
  double step = opts.initial_step;

  for (int it = 0; it < opts.max_iters; ++it) {
    const cvec u_y = ctx.op().forward(y);
    const double fy = ctx.value_from_forward(u_y, y);
    const cvec g = ctx.gradient_from_forward(u_y, y);

    // Proximal ascent step with quadratic upper-bound backtracking.
    cvec cand;
    double f_cand = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      cand = soft_threshold(y + step * g, gamma * step);
      f_cand = ctx.value(cand);
      const cvec d = cand - y;
      const double bound =
          fy + g.dot(d).real() - d.squaredNorm() / (2.0 * step);
      if (std::isfinite(f_cand) && f_cand >= bound - 1e-12) break;
      step *= opts.backtrack_shrink;
    }

    const double obj_cand = f_cand - gamma * l1_norm(cand);
    const cvec x_prev = x;
    if (obj_cand < best) {
      // Monotone restart: reject the candidate, restart momentum from x.
      y = x;
      theta = 1.0;
      res.objective_history.push_back(best);
      res.iters = it + 1;
      if ((cand - x).norm() <= opts.tol * std::max(1.0, x.norm())) {
        res.converged = true;
        break;
      }
      continue;
    }
    x = cand;
    best = obj_cand;
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = x + ((theta - 1.0) / theta_next) * (x - x_prev);
    theta = theta_next;
    res.objective_history.push_back(best);
    res.iters = it + 1;
    if ((x - x_prev).norm() <= opts.tol * std::max(1.0, x.norm())) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

GammaCalibration calibrate_gamma(const std::function<ObjectiveContext(int)>& make_pilot,
                                 int n_pilots, int target_sparsity,
                                 const FistaOptions& opts, double gamma_lo,
                                 double gamma_hi) {
  if (n_pilots < 1) throw ConfigError("calibrate_gamma: need at least one pilot");
  if (target_sparsity < 0) throw ConfigError("calibrate_gamma: bad target");

  std::vector<ObjectiveContext> pilots;
  pilots.reserve(n_pilots);
  for (int i = 0; i < n_pilots; ++i) pilots.push_back(make_pilot(i));

  GammaCalibration cal;
  auto mean_sparsity = [&](double gamma) {
    double total = 0.0;
    for (const auto& ctx : pilots) {
      const cvec x = fista(ctx, gamma, opts).x;
      int nnz = 0;
      for (Eigen::Index k = 0; k < x.size(); ++k)
        if (std::abs(x[k]) > 1e-8) ++nnz;
      total += nnz;
    }
    ++cal.evaluations;
    return total / n_pilots;
  };

  const double target = target_sparsity;
  if (!(gamma_lo > 0.0 && gamma_hi > gamma_lo))
    throw ConfigError("calibrate_gamma: bad bracket");

  // Log-domain bisection on the (monotone decreasing) mean sparsity. The
  // loop keeps narrowing past the first in-window midpoint and returns the
  // last one, so the result tracks the sparsity crossing; that keeps
  // repeated calibrations close to each other. A bracket that never brings
  // the mean into [target-1, target+1] is a calibration error.
  double lo = gamma_lo, hi = gamma_hi;
  bool found = false;
  for (int it = 0; it < 60 && hi / lo > 1.02; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double sp = mean_sparsity(mid);
    if (std::abs(sp - target) <= 1.0) {
      cal.gamma = mid;
      cal.mean_sparsity = sp;
      found = true;
    }
    (sp > target ? lo : hi) = mid;
  }
  if (found) return cal;
  throw ConfigError(
      "calibrate_gamma: target sparsity not reached inside the gamma bracket");
}

} // namespace gpursuit
