#include <benchmark/benchmark.h>

#include "ipl/tabular.hpp"

using namespace ipl;
using namespace ipl::tab;

namespace {

void BM_PolicyEvalExact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const TabularMdp mdp = random_mdp(n, 4, 0.9, rng);
  const TabularPolicy pi = TabularPolicy::Constant(n, 4, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(policy_eval_exact(mdp, pi).J);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PolicyEvalExact)->RangeMultiplier(2)->Range(4, 128)->Complexity(benchmark::oNCubed);

void BM_OperatorInequality(benchmark::State& state) {
  Rng rng(2);
  const TabularMdp mdp = random_mdp(16, 4, 0.9, rng);
  QTable q(16, 4);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(operator_inequality_check(q, mdp, 1.0).holds);
}
BENCHMARK(BM_OperatorInequality);

void BM_BoltzmannStationary(benchmark::State& state) {
  Rng rng(3);
  const TabularMdp mdp = random_mdp(6, 3, 0.8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(boltzmann_stationary(mdp, 1.0).converged);
}
BENCHMARK(BM_BoltzmannStationary)->Unit(benchmark::kMillisecond);

}  // namespace
