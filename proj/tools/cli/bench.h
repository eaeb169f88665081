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

#ifndef MIRABEL_TOOLS_CLI_BENCH_H_
#define MIRABEL_TOOLS_CLI_BENCH_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "mirabel/corpus.h"
#include "mirabel/defense.h"
#include "nlohmann/json.hpp"

namespace mirabel::cli {

// Store of `n` Gaussian rows scaled to unit norm. Ids are "row-<i>", texts
// are placeholders.
absl::StatusOr<CorpusStore> RandomStore(size_t n, size_t dim, uint64_t seed);

// Query mix for timing: even entries are noisy copies of stored rows (they
// tend to trip the detector), odd entries fresh random directions.
EmbeddingMatrix BenchQueries(const CorpusStore& store, size_t count,
                             uint64_t seed);

struct LatencyStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
};

struct BenchReport {
  size_t n = 0;
  size_t dim = 0;
  size_t queries = 0;
  int threads = 1;
  // Scan plus top-k.
  LatencyStats plain;
  // The same scan feeding detection, hiding and top-k.
  LatencyStats defended;
  // defended / plain.
  double ratio_mean = 0.0;
  double ratio_median = 0.0;
  size_t detected = 0;
};

// Warm runs only: every query is executed `warmup` times up front (cycling
// through the set), then each query is timed once per path with the two
// paths alternating order.
absl::StatusOr<BenchReport> MeasureDetectAndHide(const CorpusStore& store,
                                                 const EmbeddingMatrix& queries,
                                                 const DefenseConfig& config,
                                                 int threads, size_t warmup);

// Median wall time in milliseconds of ScoreAll over `queries`.
absl::StatusOr<double> MedianScanMillis(const CorpusStore& store,
                                        const EmbeddingMatrix& queries,
                                        int threads);

nlohmann::ordered_json BenchReportToJson(const BenchReport& report);

}  // namespace mirabel::cli

#endif  // MIRABEL_TOOLS_CLI_BENCH_H_
