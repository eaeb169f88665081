// Copyright 2026 The Mirabel Authors
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

#include <cstddef>
#include <map>
#include <vector>

#include "benchmark/benchmark.h"
#include "cli/bench.h"
#include "mirabel/defense.h"
#include "mirabel/detector.h"
#include "mirabel/index.h"

namespace mirabel {
namespace {

constexpr size_t kDim = 128;
constexpr size_t kQueries = 64;

struct Fixture {
  CorpusStore store;
  EmbeddingMatrix queries;
};

const Fixture& FixtureFor(size_t n) {
  static auto* cache = new std::map<size_t, Fixture>;
  auto it = cache->find(n);
  if (it == cache->end()) {
    CorpusStore store = *cli::RandomStore(n, kDim, 7);
    EmbeddingMatrix queries = cli::BenchQueries(store, kQueries, 7);
    it = cache->emplace(n, Fixture{std::move(store), std::move(queries)}).first;
  }
  return it->second;
}

void BM_ScoreAll(benchmark::State& state) {
  const Fixture& f = FixtureFor(state.range(0));
  size_t q = 0;
  for (auto _ : state) {
    auto scores = ScoreAll(f.store, f.queries.row(q++ % kQueries));
    benchmark::DoNotOptimize(scores->scores.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PlainTopK(benchmark::State& state) {
  const Fixture& f = FixtureFor(state.range(0));
  size_t q = 0;
  for (auto _ : state) {
    auto scores = ScoreAll(f.store, f.queries.row(q++ % kQueries));
    benchmark::DoNotOptimize(TopKRows(f.store, *scores, 3));
  }
}

void BM_DetectAndHide(benchmark::State& state) {
  const Fixture& f = FixtureFor(state.range(0));
  const DefenseConfig config;
  size_t q = 0;
  for (auto _ : state) {
    auto scores = ScoreAll(f.store, f.queries.row(q++ % kQueries));
    benchmark::DoNotOptimize(DefendedRetrieveScores(f.store, *scores, config));
  }
}

void BM_Profile(benchmark::State& state) {
  const Fixture& f = FixtureFor(state.range(0));
  auto scores = ScoreAll(f.store, f.queries.row(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(BuildProfile(scores->scores));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_ScoreAll)->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_PlainTopK)->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_DetectAndHide)->RangeMultiplier(10)->Range(1000, 100000);
BENCHMARK(BM_Profile)->RangeMultiplier(10)->Range(1000, 100000);

}  // namespace
}  // namespace mirabel

BENCHMARK_MAIN();
