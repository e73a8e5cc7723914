#include <doctest.h>

#include <cmath>

#include "gpursuit/linops.hpp"
#include "gpursuit/threshold.hpp"
#include "test_util.hpp"

using namespace gpursuit;
using doctest::Approx;

TEST_CASE("coherence basics and factorization") {
  const Dictionary dict = make_dictionary(4, 4, 8, 8);
  const TrainingSequence training = make_zc_training(4, 8);
  const auto cs = CoherenceStructure::build(dict, training, 0.3);
  REQUIRE(cs.factorized());

  SUBCASE("self coherence is one and bands contain their index") {
    for (int i : {0, 13, 63}) {
      CHECK(cs.coherence(i, i) == Approx(1.0));
      const auto& band = cs.band(i);
      CHECK(std::find(band.begin(), band.end(), i) != band.end());
    }
  }

  SUBCASE("factorized values match explicit dense columns") {
    MeasurementOperator op(std::make_shared<Dictionary>(dict),
                           std::make_shared<TrainingSequence>(training),
                           OperatorMode::dense);
    cmat a = op.dense_matrix();
    Philox rng(1, 0);
    for (int k = 0; k < 30; ++k) {
      const int i = static_cast<int>(rng.next_u64() % a.cols());
      const int j = static_cast<int>(rng.next_u64() % a.cols());
      const double mu_dense = std::abs(a.col(i).dot(a.col(j))) /
                              (a.col(i).norm() * a.col(j).norm());
      CHECK(cs.coherence(i, j) == Approx(mu_dense).epsilon(1e-10));
    }
  }

  SUBCASE("band symmetry") {
    for (int i = 0; i < cs.size(); ++i)
      for (int j : cs.band(i)) {
        const auto& bj = cs.band(j);
        CHECK(std::find(bj.begin(), bj.end(), i) != bj.end());
      }
  }
}

TEST_CASE("rx-adjacent coherence at the doubled grid matches the reported eta") {
  // mu between RX-adjacent cells with B_RX = 2M at M = 64 is 0.6367.
  const Dictionary dict = make_dictionary(64, 64, 128, 128);
  const TrainingSequence training = make_zc_training(64, 80);
  const auto cs = CoherenceStructure::build(dict, training, 0.5);
  REQUIRE(cs.factorized());
  const int i = cell_to_index(10, 7, 128);
  const int j = cell_to_index(11, 7, 128);
  CHECK(cs.coherence(i, j) == Approx(0.6367).epsilon(8e-4));
}

TEST_CASE("select_eta") {
  SUBCASE("matches brute force on a small dense gram") {
    const Dictionary dict = make_dictionary(2, 2, 4, 4);
    const TrainingSequence training = make_zc_training(2, 4);
    const EtaSelection sel = select_eta(dict, training);

    MeasurementOperator op(std::make_shared<Dictionary>(dict),
                           std::make_shared<TrainingSequence>(training),
                           OperatorMode::dense);
    cmat a = op.dense_matrix();
    for (int k = 0; k < a.cols(); ++k) a.col(k) /= a.col(k).norm();
    double min_max = 1e300;
    for (int i = 0; i < a.cols(); ++i) {
      double best = 0.0;
      for (int j = 0; j < a.cols(); ++j)
        if (j != i) best = std::max(best, std::abs(a.col(i).dot(a.col(j))));
      min_max = std::min(min_max, best);
    }
    CHECK_FALSE(sel.degenerate);
    CHECK(sel.eta == Approx(min_max).epsilon(1e-10));
  }

  SUBCASE("doubled grids reproduce the reported 0.6367 at M = N = 64") {
    const Dictionary dict = make_dictionary(64, 64, 128, 128);
    const TrainingSequence training = make_zc_training(64, 80);
    const EtaSelection sel = select_eta(dict, training);
    CHECK_FALSE(sel.degenerate);
    CHECK(sel.eta == Approx(0.6367).epsilon(8e-4));
  }

  SUBCASE("orthogonal grids are degenerate") {
    const Dictionary dict = make_dictionary(8, 8, 8, 8);
    const TrainingSequence training = make_zc_training(8, 8);
    const EtaSelection sel = select_eta(dict, training);
    CHECK(sel.degenerate);
    CHECK(sel.eta < 1e-9);
  }

  SUBCASE("single-column dictionary is an error") {
    const Dictionary dict = make_dictionary(1, 1, 1, 1);
    const TrainingSequence training = make_zc_training(1, 1);
    CHECK_THROWS_AS(select_eta(dict, training), ConfigError);
  }
}

TEST_CASE("bands under the selected eta keep at least two members") {
  const Dictionary dict = make_dictionary(8, 8, 16, 16);
  const TrainingSequence training = make_zc_training(8, 10);
  const EtaSelection sel = select_eta(dict, training);
  REQUIRE_FALSE(sel.degenerate);
  CHECK(sel.eta > 0.0);
  CHECK(sel.eta < 1.0);
  const auto cs = CoherenceStructure::build(dict, training, sel.eta);
  for (int i = 0; i < cs.size(); ++i) CHECK(cs.band(i).size() >= 2);
}

TEST_CASE("hard threshold") {
  cvec z(3);
  z << cplx(3, 0), cplx(0, -5), cplx(1, 0);

  SUBCASE("keeps the largest magnitudes") {
    const auto r = hard_threshold(z, 2);
    CHECK(r.support == std::vector<int>{0, 1});
    CHECK(r.values[0] == cplx(3, 0));
    CHECK(r.values[1] == cplx(0, -5));
    CHECK(r.values[2] == cplx(0, 0));
  }
  SUBCASE("s = 0 gives the zero vector") {
    const auto r = hard_threshold(z, 0);
    CHECK(r.support.empty());
    CHECK(r.values.norm() == 0.0);
  }
  SUBCASE("s = B is the identity") {
    const auto r = hard_threshold(z, 3);
    CHECK(r.values == z);
    CHECK(r.support == std::vector<int>{0, 1, 2});
  }
  SUBCASE("magnitude ties break to the lower index") {
    cvec tie(4);
    tie << cplx(2, 0), cplx(0, 2), cplx(-2, 0), cplx(1, 0);
    const auto r = hard_threshold(tie, 2);
    CHECK(r.support == std::vector<int>{0, 1});
  }
}

TEST_CASE("bms threshold implements the band maximum criterion") {
  SUBCASE("hand case: by-product in the band of the maximum is rejected") {
    cvec z(4);
    z << 5.0, 4.9, 3.0, 1.0;
    const cvec x = cvec::Zero(4);
    const auto cs = CoherenceStructure::from_bands({{0, 1}, {0, 1}, {2}, {3}}, 0.5);
    const auto r = bms_threshold(z, x, 2, cs);
    CHECK(r.support == std::vector<int>{0, 2});
    CHECK_FALSE(r.short_support);
  }

  SUBCASE("differing iterate values exempt band members from the test") {
    cvec z(4);
    z << 5.0, 4.9, 3.0, 1.0;
    cvec x = cvec::Zero(4);
    x[0] = cplx(1.0, 0.0); // x_0 != x_1, so index 1 is no by-product of 0
    const auto cs = CoherenceStructure::from_bands({{0, 1}, {0, 1}, {2}, {3}}, 0.5);
    const auto r = bms_threshold(z, x, 2, cs);
    CHECK(r.support == std::vector<int>{0, 1});
  }

  SUBCASE("singleton bands reduce bms to plain hard thresholding") {
    Philox rng(3, 0);
    const cvec z = testutil::random_cvec(32, rng);
    std::vector<std::vector<int>> bands(32);
    for (int i = 0; i < 32; ++i) bands[i] = {i};
    const auto cs = CoherenceStructure::from_bands(std::move(bands), 0.5);
    for (int s : {0, 1, 5, 32}) {
      const auto plain = hard_threshold(z, s);
      const auto bms = bms_threshold(z, cvec::Zero(32), s, cs);
      CHECK(plain.support == bms.support);
      CHECK((plain.values - bms.values).norm() == 0.0);
    }
  }

  SUBCASE("global maximum dominating its band is always accepted first") {
    cvec z(4);
    z << 1.0, 7.0, 5.0, 2.0;
    const auto cs =
        CoherenceStructure::from_bands({{0, 1}, {0, 1, 2}, {1, 2}, {3}}, 0.5);
    const auto r = bms_threshold(z, cvec::Zero(4), 1, cs);
    CHECK(r.support == std::vector<int>{1});
  }

  SUBCASE("exhaustion returns a short support with the flag") {
    cvec z(3);
    z << 4.0, 3.9, 3.8;
    const auto cs =
        CoherenceStructure::from_bands({{0, 1, 2}, {0, 1, 2}, {0, 1, 2}}, 0.5);
    const auto r = bms_threshold(z, cvec::Zero(3), 2, cs);
    CHECK(r.support == std::vector<int>{0});
    CHECK(r.short_support);
  }
}

TEST_CASE("band-excluding threshold") {
  SUBCASE("hand case") {
    cvec z(4);
    z << 5.0, 4.9, 3.0, 1.0;
    const auto cs = CoherenceStructure::from_bands({{0, 1}, {0, 1}, {2}, {3}}, 0.5);
    const auto r = be_threshold(z, 2, cs);
    CHECK(r.support == std::vector<int>{0, 2});
  }

  SUBCASE("singleton bands reduce to plain hard thresholding") {
    Philox rng(4, 0);
    const cvec z = testutil::random_cvec(16, rng);
    std::vector<std::vector<int>> bands(16);
    for (int i = 0; i < 16; ++i) bands[i] = {i};
    const auto cs = CoherenceStructure::from_bands(std::move(bands), 0.5);
    const auto plain = hard_threshold(z, 4);
    const auto be = be_threshold(z, 4, cs);
    CHECK(plain.support == be.support);
  }

  SUBCASE("two true indices in one band: at most one selected") {
    cvec z(4);
    z << 5.0, 4.9, 0.1, 0.05;
    const auto cs = CoherenceStructure::from_bands({{0, 1}, {0, 1}, {2}, {3}}, 0.5);
    const auto r = be_threshold(z, 2, cs);
    // Index 1 is excluded by selecting 0; the weak index 2 fills the budget.
    CHECK(r.support == std::vector<int>{0, 2});
  }
}

TEST_CASE("threshold outputs agree with z on the support and vanish elsewhere") {
  Philox rng(5, 0);
  const Dictionary dict = make_dictionary(4, 4, 8, 8);
  const TrainingSequence training = make_zc_training(4, 8);
  const auto sel = select_eta(dict, training);
  const auto cs = CoherenceStructure::build(dict, training, sel.eta);
  for (int trial = 0; trial < 10; ++trial) {
    const cvec z = testutil::random_cvec(64, rng);
    const cvec x = cvec::Zero(64);
    for (int s : {1, 4, 9}) {
      for (const auto& r :
           {hard_threshold(z, s), bms_threshold(z, x, s, cs), be_threshold(z, s, cs)}) {
        CHECK(static_cast<int>(r.support.size()) <= s);
        cvec masked = cvec::Zero(64);
        for (int k : r.support) masked[k] = z[k];
        CHECK((r.values - masked).norm() == 0.0);
      }
    }
  }
}
