// Copyright 2026 The linkdp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <string>
#include <vector>

#include "benchmark/benchmark.h"
#include "linkdp/dp_regression.h"
#include "linkdp/linkage.h"
#include "linkdp/linker.h"
#include "linkdp/random.h"

namespace linkdp {
namespace {

Matrix Design(int n, int d, uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < n; ++i) x(i, j) = rng.Uniform(-1.0, 1.0);
  }
  return x;
}

MatchingMatrix Blocks(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<EleBlock> blocks;
  for (int start = 0; start < n; start += 25) {
    const int size = std::min(25, n - start);
    blocks.push_back({size, size == 1 ? 1.0 : rng.Uniform(0.6, 0.9)});
  }
  return *MatchingMatrix::FromBlocks(std::move(blocks));
}

LinkedDataset Instance(int n, int d) {
  const Matrix x = Design(n, d, 1);
  Rng rng(2);
  Vector y = x * Vector::Ones(d);
  for (int i = 0; i < n; ++i) y(i) += rng.Normal();
  return {x, y, y, false};
}

void BM_TransformDesign(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix x = Design(n, 3, 1);
  const MatchingMatrix q = Blocks(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(TransformDesign(q, x));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TransformDesign)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_JaroWinkler(benchmark::State& state) {
  const std::string a = "christensen";
  const std::string b = "christiansen";
  for (auto _ : state) benchmark::DoNotOptimize(JaroWinkler(a, b));
}
BENCHMARK(BM_JaroWinkler);

void BM_NgdFit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LinkedDataset data = Instance(n, 1);
  const MatchingMatrix q = Blocks(n, 3);
  const BoundSet bounds{1.0, 1.0, 1.0, 5.0, 4.0, 3.0};
  const PrivacyBudget budget{1.0, 1e-5};
  NgdConfig cfg = *SuggestedNgdConfig(n, 1, bounds, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(NgdFit(data, q, budget, bounds, cfg));
    ++cfg.seed;
  }
}
BENCHMARK(BM_NgdFit)->Arg(3000)->Arg(10000);

void BM_SspFit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LinkedDataset data = Instance(n, 1);
  const MatchingMatrix q = Blocks(n, 3);
  const BoundSet bounds{1.0, 1.0, 1.0, 5.0, 4.0, 3.0};
  const PrivacyBudget budget{1.0, 1e-5};
  SspConfig cfg = *SuggestedSspConfig(n, bounds, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SspFit(data, q, budget, bounds, cfg));
    ++cfg.seed;
  }
}
BENCHMARK(BM_SspFit)->Arg(3000)->Arg(10000);

void BM_LinkRecords(benchmark::State& state) {
  CorpusOptions options;
  options.n = static_cast<int>(state.range(0));
  options.corruption_rate = kCalibratedCorruptionRate;
  const auto corpus = *GenerateCorpus(options);
  for (auto _ : state) {
    benchmark::DoNotOptimize(LinkRecords(corpus.first, corpus.second));
  }
}
BENCHMARK(BM_LinkRecords)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace linkdp

BENCHMARK_MAIN();
