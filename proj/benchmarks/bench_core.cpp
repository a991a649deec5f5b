#include <benchmark/benchmark.h>

#include <vector>

#include "rpft/anchors.hpp"
#include "rpft/evaluation.hpp"
#include "rpft/kernels.hpp"
#include "rpft/krr.hpp"
#include "rpft/methods.hpp"
#include "rpft/synthetic.hpp"

namespace {

rpft::SyntheticData data_for(int classes, int shots) {
  rpft::SyntheticSpec spec;
  spec.classes = classes;
  spec.dim = 512;
  spec.train_per_class = shots;
  spec.val_per_class = 1;
  spec.test_per_class = 8;
  return rpft::gen_synthetic(spec);
}

void BM_GramMatrix(benchmark::State& state) {
  const auto d = data_for(10, static_cast<int>(state.range(0)) / 10);
  const auto spec = rpft::KernelSpec::gaussian(5.0);
  for (auto _ : state) benchmark::DoNotOptimize(rpft::gram_matrix(d.train, spec));
  state.SetComplexityN(d.train.rows());
}
BENCHMARK(BM_GramMatrix)->RangeMultiplier(2)->Range(80, 1280)->Complexity();

void BM_KrrSolve(benchmark::State& state) {
  const auto d = data_for(10, static_cast<int>(state.range(0)) / 10);
  const auto K = rpft::gram_matrix(d.train, rpft::KernelSpec::gaussian(5.0));
  const auto Y = rpft::one_hot(d.train.labels(), 10);
  for (auto _ : state) benchmark::DoNotOptimize(rpft::solve(K, Y, 0.1));
  state.SetComplexityN(d.train.rows());
}
BENCHMARK(BM_KrrSolve)->RangeMultiplier(2)->Range(80, 1280)->Complexity();

void BM_ScoreTipAdapterKrr(benchmark::State& state) {
  const auto d = data_for(100, 16);
  const auto anchors = rpft::combine(rpft::image_anchors_from_shots(d.train),
                                     rpft::text_anchors_from_bundle(d.text, 100));
  const auto Z = rpft::one_hot(anchors.image.labels(), 100);
  const auto config = rpft::MethodConfig::defaults(rpft::MethodName::TipAdapterKrr);
  const auto scorer = rpft::compose_method(config, anchors, Z, d.train);
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score(d.test.data()));
  state.SetItemsProcessed(state.iterations() * d.test.rows());
}
BENCHMARK(BM_ScoreTipAdapterKrr);

}  // namespace

BENCHMARK_MAIN();
