#include <benchmark/benchmark.h>

#include <cmath>

#include "horolab/besov.hpp"
#include "horolab/flow.hpp"

using namespace horolab;

namespace {

const ManifoldModel& perturbed() {
  static const ManifoldModel m = ManifoldModel::perturbed_axial();
  return m;
}

const NuSample& sample() {
  static const NuSample s = nu_sample(NuMeasure(perturbed(), {0, 0}, 0.25), 20000, 1, Proposal::Mixture);
  return s;
}

double cocycle_f(double a, double b) {
  static const IsometryElement g = IsometryElement::translation(3.0);
  return std::pow(std::abs(cocycle_value(perturbed(), g, 0.25, BoundaryPoint(a), BoundaryPoint(b))), 8);
}

void BM_EvaluatePairsSerial(benchmark::State& st) {
  const NuSample& s = sample();
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_pairs_serial(s, cocycle_f));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.pairs.size()));
}
BENCHMARK(BM_EvaluatePairsSerial)->Unit(benchmark::kMillisecond);

void BM_EvaluatePairsParallel(benchmark::State& st) {
  const NuSample& s = sample();
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_pairs_parallel(s, cocycle_f));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(s.pairs.size()));
}
BENCHMARK(BM_EvaluatePairsParallel)->Unit(benchmark::kMillisecond);

void BM_Riccati(benchmark::State& st) {
  const ManifoldModel& m = perturbed();
  double phi = 0.1;
  for (auto _ : st) {
    benchmark::DoNotOptimize(riccati_mean_curvature_fermi(m, {0.0, 0.2, phi}, 15.0).value);
    phi += 0.01;
  }
}
BENCHMARK(BM_Riccati)->Unit(benchmark::kMicrosecond);

void BM_GromovFactorized(benchmark::State& st) {
  const ManifoldModel& m = perturbed();
  FactorizedBoundary::shared(m);
  double t = 0.1;
  for (auto _ : st) {
    benchmark::DoNotOptimize(gromov_product(m, {0, 0}, BoundaryPoint(t), BoundaryPoint(t + 1.3)));
    t += 0.001;
  }
}
BENCHMARK(BM_GromovFactorized)->Unit(benchmark::kMicrosecond);

void BM_GromovPipeline(benchmark::State& st) {
  const ManifoldModel& m = perturbed();
  GromovParams p;
  p.evaluator = Evaluator::Pipeline;
  double t = 0.1;
  for (auto _ : st) {
    benchmark::DoNotOptimize(gromov_product(m, {0, 0}, BoundaryPoint(t), BoundaryPoint(t + 1.3), p));
    t += 0.001;
  }
}
BENCHMARK(BM_GromovPipeline)->Unit(benchmark::kMillisecond);

void BM_NuSample(benchmark::State& st) {
  const NuMeasure nu(perturbed(), {0, 0}, 0.25);
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(nu_sample(nu, 10000, ++seed, Proposal::Mixture));
}
BENCHMARK(BM_NuSample)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
