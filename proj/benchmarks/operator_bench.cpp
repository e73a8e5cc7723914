#include <benchmark/benchmark.h>

#include "gpursuit/likelihood.hpp"
#include "gpursuit/solvers.hpp"

using namespace gpursuit;

namespace {

struct Fixture {
  std::shared_ptr<const Dictionary> dict;
  std::shared_ptr<const TrainingSequence> training;
  cvec x, c;

  explicit Fixture(int m) {
    const int t = m + m / 4;
    dict = std::make_shared<const Dictionary>(make_dictionary(m, m, 4 * m, 4 * m));
    training = std::make_shared<const TrainingSequence>(make_zc_training(m, t));
    Philox rng(1, 0);
    x.resize(dict->b());
    for (int i = 0; i < x.size(); ++i) x[i] = rng.next_cnormal();
    c.resize(m * t);
    for (int i = 0; i < c.size(); ++i) c[i] = rng.next_cnormal();
  }
};

} // namespace

static void BM_ForwardFFT(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  MeasurementOperator op(f.dict, f.training, OperatorMode::fft);
  for (auto _ : state) benchmark::DoNotOptimize(op.forward(f.x));
}
BENCHMARK(BM_ForwardFFT)->Arg(16)->Arg(32)->Arg(64);

static void BM_ForwardDense(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  MeasurementOperator op(f.dict, f.training, OperatorMode::dense);
  for (auto _ : state) benchmark::DoNotOptimize(op.forward(f.x));
}
BENCHMARK(BM_ForwardDense)->Arg(16)->Arg(32);

static void BM_AdjointFFT(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  MeasurementOperator op(f.dict, f.training, OperatorMode::fft);
  for (auto _ : state) benchmark::DoNotOptimize(op.adjoint(f.c));
}
BENCHMARK(BM_AdjointFFT)->Arg(16)->Arg(32)->Arg(64);

static void BM_GradientFFT(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  MeasurementOperator op(f.dict, f.training, OperatorMode::fft);
  ObjectiveContext ctx(op, quantize(op.forward(f.x)), 10.0, PriorMode::map);
  const cvec zero = cvec::Zero(ctx.b());
  for (auto _ : state) benchmark::DoNotOptimize(ctx.gradient(zero));
}
BENCHMARK(BM_GradientFFT)->Arg(16)->Arg(32);

static void BM_BmsThreshold(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const auto sel = select_eta(*f.dict, *f.training);
  const auto bands = CoherenceStructure::build(*f.dict, *f.training, sel.eta);
  const cvec x = cvec::Zero(f.dict->b());
  for (auto _ : state) benchmark::DoNotOptimize(bms_threshold(f.x, x, 8, bands));
}
BENCHMARK(BM_BmsThreshold)->Arg(16)->Arg(32);

static void BM_LogNcdf(benchmark::State& state) {
  double t = -20.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_ncdf(t));
    t = t < 20.0 ? t + 0.25 : -20.0;
  }
}
BENCHMARK(BM_LogNcdf);

BENCHMARK_MAIN();
