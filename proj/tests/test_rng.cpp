#include <doctest.h>

#include <cmath>

#include "gpursuit/rng.hpp"

using namespace gpursuit;

TEST_CASE("philox streams are deterministic and independent") {
  Philox a(42, 0), b(42, 0), c(42, 1);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 256; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform doubles stay in [0, 1) with sane mean") {
  Philox rng(7, 3);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 20000 - 0.5) < 0.02);
}

TEST_CASE("complex normals have unit complex variance") {
  Philox rng(99, 0);
  double var = 0.0, mean_re = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const auto z = rng.next_cnormal();
    var += std::norm(z);
    mean_re += z.real();
  }
  CHECK(std::abs(var / n - 1.0) < 0.03);
  CHECK(std::abs(mean_re / n) < 0.02);
}
