// Microbenchmarks of the hot paths: the collocation solves, the quadrature
// builds, the identity checks, the symmetric-difference area and one shape
// gradient evaluation.

#include "torsionlab/geometry.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/shapeflow.hpp"
#include "torsionlab/solver.hpp"
#include "torsionlab/stability.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace torsionlab;

geometry::DomainSpec generic() {
  return geometry::DomainSpec{1.0, {geometry::FourierMode{3, 0.1, 0.0}},
                              {geometry::Hole{Vec2(0.4, 0.1), 0.15, -0.05}}};
}

void BM_SolveDirichlet(benchmark::State& state) {
  solver::DirichletOptions o;
  o.n_src_per_ring = static_cast<int>(state.range(0));
  const geometry::DomainSpec spec = generic();
  for (auto _ : state) benchmark::DoNotOptimize(solver::solve_dirichlet(spec, o));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveDirichlet)->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond)->Complexity();

void BM_SolveCauchy(benchmark::State& state) {
  const geometry::DomainSpec spec{1.0, {geometry::FourierMode{3, 0.01, 0.0}}, {}};
  for (auto _ : state) benchmark::DoNotOptimize(solver::solve_cauchy(spec, 0.5));
}
BENCHMARK(BM_SolveCauchy)->Unit(benchmark::kMillisecond);

void BM_AreaQuadrature(benchmark::State& state) {
  const geometry::Domain d(generic());
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::build_area_quadrature(d, n / 2, n));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AreaQuadrature)->RangeMultiplier(2)->Range(128, 512)->Unit(benchmark::kMicrosecond)->Complexity();

void BM_CheckPohozaev(benchmark::State& state) {
  const geometry::Domain d(generic());
  const solver::Solution s = solver::solve_dirichlet(generic());
  const identities::Quadratures q = identities::make_quadratures(d, 256, 64);
  for (auto _ : state) benchmark::DoNotOptimize(identities::check_pohozaev(s.model, d, q));
}
BENCHMARK(BM_CheckPohozaev)->Unit(benchmark::kMillisecond);

void BM_CheckFundamental(benchmark::State& state) {
  const geometry::Domain d(generic());
  const solver::Solution s = solver::solve_dirichlet(generic());
  const identities::Quadratures q = identities::make_quadratures(d, 256, 64);
  for (auto _ : state) benchmark::DoNotOptimize(identities::check_fundamental(s.model, d, q));
}
BENCHMARK(BM_CheckFundamental)->Unit(benchmark::kMillisecond);

void BM_SymmetricDifference(benchmark::State& state) {
  const geometry::Domain d(geometry::DomainSpec{1.0, {geometry::FourierMode{3, 0.05, 0.0}}, {}});
  for (auto _ : state) benchmark::DoNotOptimize(geometry::symmetric_difference_ratio(d, Vec2(0.01, 0.0), 1.0));
}
BENCHMARK(BM_SymmetricDifference)->Unit(benchmark::kMicrosecond);

void BM_ShapeGradient(benchmark::State& state) {
  const geometry::DomainSpec spec{1.0, {geometry::FourierMode{2, 0.05, 0.0}}, {}};
  const shapeflow::RadialField v{0.0, {geometry::FourierMode{2, 1.0, 0.0}}};
  for (auto _ : state) benchmark::DoNotOptimize(shapeflow::shape_gradient(spec, v));
}
BENCHMARK(BM_ShapeGradient)->Unit(benchmark::kMillisecond);

void BM_TheoremSuiteRadial(benchmark::State& state) {
  stability::StabilityInstance inst;
  inst.spec = geometry::DomainSpec{1.0, {}, {geometry::Hole{Vec2::Zero(), 0.1, (0.01 - 1.0) / 4.0}}};
  inst.model = solver::radial_reference(1.0, 2).model();
  inst.c = 0.5;
  stability::SuiteOptions o;
  o.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(stability::theorem_suite(inst, o));
}
BENCHMARK(BM_TheoremSuiteRadial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
