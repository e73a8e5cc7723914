#include <doctest.h>

#include <cmath>

#include "gpursuit/likelihood.hpp"
#include "test_util.hpp"

using namespace gpursuit;
using doctest::Approx;

namespace {

// Real-parameterized objective for finite differences.
double h_real(const ObjectiveContext& ctx, Eigen::VectorXd& xr) {
  const int b = ctx.b();
  cvec x(b);
  for (int i = 0; i < b; ++i) x[i] = {xr[i], xr[b + i]};
  return ctx.value(x);
}

} // namespace

TEST_CASE("log_ncdf closed and frozen values") {
  CHECK(log_ncdf(0.0) == Approx(-std::log(2.0)).epsilon(1e-14));
  // High-precision reference: log Phi(-10) = -53.231285150512470578
  CHECK(log_ncdf(-10.0) == Approx(-53.231285150512470578).epsilon(1e-12));
  CHECK(log_ncdf(40.0) >= -1e-300);
  CHECK(log_ncdf(40.0) <= 0.0);
  // log Phi(-40) = -804.60844201375378817
  CHECK(log_ncdf(-40.0) == Approx(-804.60844201375378817).epsilon(1e-12));
}

TEST_CASE("inverse_mills closed and frozen values") {
  CHECK(inverse_mills(0.0) == Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-13));
  // High-precision references: lambda(20) = 5.5209483621597632e-88,
  // lambda(-20) = 20.049753068527850542.
  CHECK(inverse_mills(20.0) == Approx(5.5209483621597632e-88).epsilon(1e-10));
  CHECK(inverse_mills(-20.0) == Approx(20.049753068527850542).epsilon(1e-12));
}

TEST_CASE("kernel branches agree where both are accurate") {
  // The asymptotic branch starts at t = -8; direct erfc evaluation stays
  // accurate down to t ~ -35, so the overlap cross-checks both paths.
  for (double t = -35.0; t < -8.0; t += 0.7) {
    const long double phi =
        std::exp(-0.5L * (long double)t * t) / std::sqrt(2.0L * M_PIl);
    const long double cdf = 0.5L * erfcl(-(long double)t / std::sqrt(2.0L));
    CHECK(log_ncdf(t) == Approx((double)std::log(cdf)).epsilon(1e-11));
    CHECK(inverse_mills(t) == Approx((double)(phi / cdf)).epsilon(1e-11));
  }
}

TEST_CASE("kernels are monotone and smooth across the branch point") {
  // Strict monotonicity holds while the values are representable; past
  // t ~ 8.3 Phi rounds to 1 and past t ~ 38 phi underflows, so the strict
  // window stops at 8.
  double prev_l = inverse_mills(-40.5);
  double prev_p = log_ncdf(-40.5);
  for (double t = -40.0; t <= 8.0; t += 0.5) {
    const double l = inverse_mills(t);
    const double p = log_ncdf(t);
    CHECK(l < prev_l);
    CHECK(p > prev_p);
    CHECK(l > 0.0);
    prev_l = l;
    prev_p = p;
  }
  for (double t = 8.5; t <= 40.0; t += 0.5) {
    CHECK(inverse_mills(t) <= prev_l);
    CHECK(log_ncdf(t) >= prev_p);
    CHECK(log_ncdf(t) <= 0.0);
  }
  // Branch discontinuity at t = -8, with the genuine slope removed:
  // d/dt log Phi = lambda and d/dt lambda = -t lambda - lambda^2.
  const double eps = 1e-9;
  const double lam = inverse_mills(-8.0);
  const double dlam = 8.0 * lam - lam * lam;
  CHECK(std::abs(log_ncdf(-8.0 + eps) - log_ncdf(-8.0 - eps) - 2 * eps * lam) <
        1e-9);
  CHECK(std::abs(inverse_mills(-8.0 + eps) - inverse_mills(-8.0 - eps) -
                 2 * eps * dlam) < 1e-9);
}

TEST_CASE("objective closed forms at zero") {
  const auto inst = testutil::make_instance(4, 4, 6, 2, 8, 8, 10.0, 21);
  const auto ctx = ObjectiveContext::from_measurement(inst.meas, PriorMode::map,
                                                      OperatorMode::dense);
  const int mt = ctx.mt();
  CHECK(ctx.value(cvec::Zero(ctx.b())) ==
        Approx(-2.0 * mt * std::log(2.0)).epsilon(1e-14));

  // grad h(0) = sqrt(2 rho) lambda(0) A^H y_hat.
  const cvec g0 = ctx.gradient(cvec::Zero(ctx.b()));
  const cvec expected = std::sqrt(2.0 * inst.meas.rho) * inverse_mills(0.0) *
                        ctx.op().dense_matrix().adjoint() * inst.meas.y_hat;
  CHECK((g0 - expected).norm() <= 1e-10 * expected.norm());
}

TEST_CASE("ml and map differ by the squared norm") {
  const auto inst = testutil::make_instance(4, 4, 6, 2, 8, 8, 10.0, 22);
  const auto map_ctx = ObjectiveContext::from_measurement(inst.meas, PriorMode::map,
                                                          OperatorMode::dense);
  const auto ml_ctx = ObjectiveContext::from_measurement(inst.meas, PriorMode::ml,
                                                         OperatorMode::dense);
  Philox rng(2, 0);
  for (int i = 0; i < 5; ++i) {
    const cvec x = testutil::random_cvec(map_ctx.b(), rng);
    CHECK(ml_ctx.value(x) - map_ctx.value(x) ==
          Approx(x.squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("objective matches the dense term-by-term sum") {
  const auto inst = testutil::make_instance(3, 3, 5, 2, 6, 6, 4.0, 23);
  const auto ctx = ObjectiveContext::from_measurement(inst.meas, PriorMode::map,
                                                      OperatorMode::dense);
  const cmat a = ctx.op().dense_matrix();
  Philox rng(9, 0);
  const cvec x = testutil::random_cvec(ctx.b(), rng);

  // Independent summation with the real-counterpart form.
  const cvec u = a * x;
  const double s2r = std::sqrt(2.0 * inst.meas.rho);
  long double f = 0.0;
  for (int i = 0; i < ctx.mt(); ++i) {
    f += std::log(0.5L * erfcl(-(long double)(s2r * inst.meas.y_hat[i].real() *
                                              u[i].real()) /
                               std::sqrt(2.0L)));
    f += std::log(0.5L * erfcl(-(long double)(s2r * inst.meas.y_hat[i].imag() *
                                              u[i].imag()) /
                               std::sqrt(2.0L)));
  }
  const double expected = (double)f - x.squaredNorm();
  CHECK(ctx.value(x) == Approx(expected).epsilon(1e-11));
}

TEST_CASE("gradient matches central finite differences") {
  const auto inst = testutil::make_instance(4, 4, 6, 3, 8, 8, 5.0, 24);
  const auto ctx = ObjectiveContext::from_measurement(inst.meas, PriorMode::map,
                                                      OperatorMode::dense);
  const int b = ctx.b();
  Philox rng(31, 0);
  const double step = 1e-5;

  for (int trial = 0; trial < 4; ++trial) {
    const cvec x = 0.3 * testutil::random_cvec(b, rng);
    const cvec g = ctx.gradient(x);

    Eigen::VectorXd xr(2 * b);
    for (int i = 0; i < b; ++i) {
      xr[i] = x[i].real();
      xr[b + i] = x[i].imag();
    }
    Eigen::VectorXd fd(2 * b);
    for (int i = 0; i < 2 * b; ++i) {
      const double save = xr[i];
      xr[i] = save + step;
      const double hp = h_real(ctx, xr);
      xr[i] = save - step;
      const double hm = h_real(ctx, xr);
      xr[i] = save;
      fd[i] = (hp - hm) / (2 * step);
    }
    Eigen::VectorXd gr(2 * b);
    for (int i = 0; i < b; ++i) {
      gr[i] = g[i].real();
      gr[b + i] = g[i].imag();
    }
    CHECK((gr - fd).norm() <= 1e-6 * fd.norm());
  }
}

TEST_CASE("gradient argmax at zero is invariant to positive SNR scaling") {
  const auto inst = testutil::make_instance(4, 4, 6, 2, 8, 8, 2.0, 25);
  MeasurementOperator op(inst.meas.dictionary, inst.meas.training,
                         OperatorMode::dense);
  int argmax_prev = -1;
  for (double rho : {0.5, 2.0, 50.0}) {
    ObjectiveContext ctx(op, inst.meas.y_hat, rho, PriorMode::map);
    const cvec g = ctx.gradient(cvec::Zero(ctx.b()));
    int argmax = 0;
    for (int i = 1; i < g.size(); ++i)
      if (std::abs(g[i]) > std::abs(g[argmax])) argmax = i;
    if (argmax_prev >= 0) CHECK(argmax == argmax_prev);
    argmax_prev = argmax;
  }
}

TEST_CASE("map objective is concave along random chords") {
  const auto inst = testutil::make_instance(3, 3, 5, 2, 6, 6, 8.0, 26);
  const auto ctx = ObjectiveContext::from_measurement(inst.meas, PriorMode::map,
                                                      OperatorMode::dense);
  Philox rng(77, 0);
  for (int i = 0; i < 20; ++i) {
    const cvec x1 = testutil::random_cvec(ctx.b(), rng);
    const cvec x2 = testutil::random_cvec(ctx.b(), rng);
    const double t = rng.next_double();
    const double lhs = ctx.value(t * x1 + (1 - t) * x2);
    const double rhs = t * ctx.value(x1) + (1 - t) * ctx.value(x2);
    CHECK(lhs >= rhs - 1e-9);
  }
}

TEST_CASE("restricted evaluations equal padded full evaluations") {
  const auto inst = testutil::make_instance(4, 4, 6, 2, 8, 8, 6.0, 27);
  const auto ctx = ObjectiveContext::from_measurement(inst.meas, PriorMode::map,
                                                      OperatorMode::dense);
  Philox rng(13, 0);

  SUBCASE("empty support evaluates to f at zero") {
    const RestrictedOperator sub = ctx.op().column_subset({});
    CHECK(ctx.value_restricted(sub, cvec{}) ==
          Approx(-2.0 * ctx.mt() * std::log(2.0)).epsilon(1e-14));
  }

  SUBCASE("random support of size 4") {
    const std::vector<int> support{3, 17, 22, 40};
    const RestrictedOperator sub = ctx.op().column_subset(support);
    const cvec xs = testutil::random_cvec(4, rng);
    cvec padded = cvec::Zero(ctx.b());
    for (int k = 0; k < 4; ++k) padded[support[k]] = xs[k];

    CHECK(ctx.value_restricted(sub, xs) == Approx(ctx.value(padded)).epsilon(1e-12));
    const cvec g_full = ctx.gradient(padded);
    const cvec g_sub = ctx.gradient_restricted(sub, xs);
    for (int k = 0; k < 4; ++k)
      CHECK(std::abs(g_sub[k] - g_full[support[k]]) < 1e-10);
  }

  SUBCASE("support equal to supp(x) reproduces the full value") {
    const std::vector<int> support{1, 30};
    const RestrictedOperator sub = ctx.op().column_subset(support);
    cvec xs(2);
    xs << cplx(0.4, -1.0), cplx(-0.3, 0.2);
    cvec padded = cvec::Zero(ctx.b());
    padded[1] = xs[0];
    padded[30] = xs[1];
    CHECK(ctx.value_restricted(sub, xs) == Approx(ctx.value(padded)).epsilon(1e-12));
  }
}

TEST_CASE("y_hat entries are validated") {
  const auto inst = testutil::make_instance(3, 3, 5, 1, 6, 6, 1.0, 28);
  MeasurementOperator op(inst.meas.dictionary, inst.meas.training,
                         OperatorMode::dense);
  cvec bad = inst.meas.y_hat;
  bad[0] = {0.5, 1.0};
  CHECK_THROWS_AS(ObjectiveContext(op, bad, 1.0, PriorMode::map), ConfigError);
}
