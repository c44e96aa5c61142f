#include <benchmark/benchmark.h>

#include "ipl/mlp.hpp"
#include "ipl/params.hpp"

using namespace ipl;

namespace {

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = rng.normal_tensor({n, n}), b = rng.normal_tensor({n, n});
  for (auto _ : state) {
    ad::Graph g;
    const Var x = g.leaf(a), y = g.leaf(b);
    auto grads = g.backward(ad::sum(ad::matmul(x, y)));
    benchmark::DoNotOptimize(grads[x]);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(16, 256)->Complexity();

// Forward plus backward through the default 64x64 network, per batch size.
void BM_MlpTrainStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  nn::MlpSpec spec;
  spec.widths = {4, 64, 64, 1};
  const nn::ParamSet params = nn::init_params(spec, 2);
  Rng rng(3);
  const Tensor x = rng.normal_tensor({batch, 4});
  for (auto _ : state) {
    ad::Graph g;
    const nn::BoundParams p = nn::bind(g, params, true);
    const Var out = nn::mlp_forward(p, spec, g.constant(x));
    auto grads = g.backward(ad::mean(ad::square(out)));
    benchmark::DoNotOptimize(p.gradients(grads));
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * batch));
}
BENCHMARK(BM_MlpTrainStep)->Arg(1)->Arg(64)->Arg(256);

}  // namespace
