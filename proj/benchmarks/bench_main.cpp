// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "dpdmd/dmd.hpp"
#include "dpdmd/flow.hpp"
#include "dpdmd/metrics.hpp"
#include "dpdmd/mixture.hpp"
#include "dpdmd/process.hpp"

namespace {

using namespace dpdmd;

NetConfig bench_config(std::uint32_t width) {
  NetConfig c;
  c.hidden_width = width;
  return c;
}

void BM_ForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::uint32_t>(state.range(0));
  const auto batch = static_cast<std::size_t>(state.range(1));
  const VelocityNet net(bench_config(width), Role::kTeacher, 1);
  Rng rng(2);
  const ad::Tensor x = rng.normal_tensor(batch, 2);
  const ad::Tensor eps = rng.normal_tensor(batch, 2);
  const std::vector<double> t = rng.uniform_vector(batch, 0.0, 1.0);
  for (auto _ : state) {
    ad::Tape tape;
    const auto params = net.bind(tape);
    const ad::Tensor loss = flow::fm_loss(net, params, x, eps, t);
    benchmark::DoNotOptimize(tape.backward(loss).wrt(params));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ForwardBackward)->Args({64, 128})->Args({128, 256});

void BM_DistillIteration(benchmark::State& state) {
  const auto method = state.range(0) == 0 ? Method::kDmd : Method::kDpdmd;
  const FlowProcess process(4, 30);
  const VelocityNet teacher(bench_config(64), Role::kTeacher, 1);
  VelocityNet student = teacher.clone();
  VelocityNet fake = teacher.clone();
  DistillSettings s;
  s.method = method;
  s.batch_size = 128;
  Distiller d(process, teacher, student, fake, s, 3);
  for (auto _ : state) benchmark::DoNotOptimize(d.iterate());
}
BENCHMARK(BM_DistillIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PairwiseDiversity(benchmark::State& state) {
  Rng rng(4);
  const ad::Tensor x = sample_mixture(MixtureSpec::preset("ring8"), 288, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::grouped_diversity(x, 9, metrics::FeatureMap::raw()));
  }
}
BENCHMARK(BM_PairwiseDiversity);

}  // namespace
BENCHMARK_MAIN();
