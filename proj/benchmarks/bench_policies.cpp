#include <benchmark/benchmark.h>

#include "ipl/blackbox_policy.hpp"
#include "ipl/entropy_estimator.hpp"
#include "ipl/flow_policy.hpp"

using namespace ipl;

namespace {

void BM_FlowSample(benchmark::State& state) {
  flow::FlowSpec spec;
  spec.action_dim = static_cast<std::size_t>(state.range(0));
  const flow::FlowPolicy pol(spec, 1);
  Rng rng(2);
  const Tensor s = rng.normal_tensor({256, 1});
  for (auto _ : state) benchmark::DoNotOptimize(pol.act(s, rng.normal_tensor({256, spec.action_dim})));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * 256));
}
BENCHMARK(BM_FlowSample)->Arg(2)->Arg(4)->Arg(8);

void BM_FlowLogProb(benchmark::State& state) {
  const flow::FlowPolicy pol(flow::FlowSpec{}, 3);
  Rng rng(4);
  const Tensor s = rng.normal_tensor({256, 1});
  const Tensor a = rng.normal_tensor({256, 2});
  for (auto _ : state) benchmark::DoNotOptimize(pol.log_prob_value(s, a));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * 256));
}
BENCHMARK(BM_FlowLogProb);

void BM_NoisyPolicyAct(benchmark::State& state) {
  nbp::NbpSpec spec;
  spec.layer_norm = state.range(0) != 0;
  const nbp::NoisyMlpPolicy pol(spec, 5);
  Rng rng(6);
  const Tensor s = rng.normal_tensor({256, 2});
  for (auto _ : state) benchmark::DoNotOptimize(pol.act(s, rng));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * 256));
}
BENCHMARK(BM_NoisyPolicyAct)->Arg(0)->Arg(1);

void BM_ClassifierStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  ent::DensityClassifier clf(2, ent::ActionBox{{-1, -1}, {1, 1}}, {64, 64}, 7);
  nn::Adam opt;
  Rng rng(8);
  const Tensor s = rng.normal_tensor({batch, 2});
  const Tensor a = rng.uniform_tensor({batch, 2}, -0.5, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(ent::classifier_step(clf, opt, s, a, rng));
}
BENCHMARK(BM_ClassifierStep)->Arg(64)->Arg(256);

}  // namespace
