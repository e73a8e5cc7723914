#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace gpursuit {

// Counter-based Philox4x32-10 generator. Streams are addressed by
// (seed, stream), so every Monte-Carlo trial gets an independent sequence
// from the trial index alone, with no coordination between threads.
// All derived distributions are produced by fixed, platform-independent
// arithmetic, so sequences are bit-reproducible.
class Philox {
public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_double();

  // Uniform on [lo, hi).
  double next_uniform(double lo, double hi);

  // Standard normal via Box-Muller.
  double next_normal();

  // Circular complex normal CN(0, 1): Re, Im ~ N(0, 1/2) independent.
  std::complex<double> next_cnormal();

private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace gpursuit
