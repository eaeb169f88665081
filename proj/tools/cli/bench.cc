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

#include "cli/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "absl/strings/str_cat.h"
#include "mirabel/index.h"
#include "mirabel/report_io.h"

namespace mirabel::cli {

namespace {

using Clock = std::chrono::steady_clock;

double Millis(Clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

LatencyStats Summarize(std::vector<double> samples) {
  LatencyStats s;
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean_ms = sum / static_cast<double>(samples.size());
  const size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
  s.median_ms = samples[mid];
  if (samples.size() % 2 == 0) {
    const double lower =
        *std::max_element(samples.begin(), samples.begin() + mid);
    s.median_ms = 0.5 * (s.median_ms + lower);
  }
  return s;
}

void FillGaussian(std::span<float> row, std::mt19937_64& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& v : row) v = normal(rng);
}

}  // namespace

absl::StatusOr<CorpusStore> RandomStore(size_t n, size_t dim, uint64_t seed) {
  if (n == 0 || dim == 0) {
    return absl::InvalidArgumentError("bench store needs n > 0 and dim > 0");
  }
  std::mt19937_64 rng(seed);
  EmbeddingMatrix matrix(dim, n);
  for (size_t i = 0; i < n; ++i) FillGaussian(matrix.mutable_row(i), rng);
  std::vector<Document> docs;
  docs.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    docs.push_back({absl::StrCat("row-", i), absl::StrCat("row ", i), {}});
  }
  return CorpusStore::Create(std::move(docs), std::move(matrix));
}

EmbeddingMatrix BenchQueries(const CorpusStore& store, size_t count,
                             uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const size_t dim = store.dim();
  EmbeddingMatrix queries(dim, count);
  std::uniform_int_distribution<size_t> pick(0, store.size() - 1);
  std::normal_distribution<float> noise(0.0f, 0.3f / std::sqrt(float(dim)));
  for (size_t q = 0; q < count; ++q) {
    std::span<float> out = queries.mutable_row(q);
    if (q % 2 == 0) {
      std::span<const float> src = store.embeddings().row(pick(rng));
      for (size_t j = 0; j < dim; ++j) out[j] = src[j] + noise(rng);
    } else {
      FillGaussian(out, rng);
    }
  }
  queries.NormalizeRows();
  return queries;
}

absl::StatusOr<BenchReport> MeasureDetectAndHide(const CorpusStore& store,
                                                 const EmbeddingMatrix& queries,
                                                 const DefenseConfig& config,
                                                 int threads, size_t warmup) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  if (queries.empty()) return absl::InvalidArgumentError("no bench queries");
  if (queries.dim() != store.dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "query dim ", queries.dim(), " != store dim ", store.dim()));
  }
  auto plain = [&](std::span<const float> q) -> absl::StatusOr<size_t> {
    absl::StatusOr<ScoreVector> scores = ScoreAll(store, q, threads);
    if (!scores.ok()) return scores.status();
    return TopKRows(store, *scores, config.k).hits.size();
  };
  auto defended = [&](std::span<const float> q) -> absl::StatusOr<bool> {
    absl::StatusOr<ScoreVector> scores = ScoreAll(store, q, threads);
    if (!scores.ok()) return scores.status();
    absl::StatusOr<DefendedRetrieval> r =
        DefendedRetrieveScores(store, *scores, config);
    if (!r.ok()) return r.status();
    return r->detection.detected;
  };

  for (size_t i = 0; i < warmup; ++i) {
    std::span<const float> q = queries.row(i % queries.count());
    if (auto s = plain(q); !s.ok()) return s.status();
    if (auto s = defended(q); !s.ok()) return s.status();
  }

  BenchReport report;
  report.n = store.size();
  report.dim = store.dim();
  report.queries = queries.count();
  report.threads = threads;
  std::vector<double> plain_ms, defended_ms;
  plain_ms.reserve(queries.count());
  defended_ms.reserve(queries.count());
  for (size_t i = 0; i < queries.count(); ++i) {
    std::span<const float> q = queries.row(i);
    for (int pass = 0; pass < 2; ++pass) {
      const bool run_plain = (pass == 0) == (i % 2 == 0);
      const Clock::time_point start = Clock::now();
      if (run_plain) {
        absl::StatusOr<size_t> r = plain(q);
        if (!r.ok()) return r.status();
        plain_ms.push_back(Millis(Clock::now() - start));
      } else {
        absl::StatusOr<bool> r = defended(q);
        if (!r.ok()) return r.status();
        defended_ms.push_back(Millis(Clock::now() - start));
        if (*r) ++report.detected;
      }
    }
  }
  report.plain = Summarize(std::move(plain_ms));
  report.defended = Summarize(std::move(defended_ms));
  if (report.plain.mean_ms > 0.0) {
    report.ratio_mean = report.defended.mean_ms / report.plain.mean_ms;
  }
  if (report.plain.median_ms > 0.0) {
    report.ratio_median = report.defended.median_ms / report.plain.median_ms;
  }
  return report;
}

absl::StatusOr<double> MedianScanMillis(const CorpusStore& store,
                                        const EmbeddingMatrix& queries,
                                        int threads) {
  std::vector<double> samples;
  samples.reserve(queries.count());
  for (size_t i = 0; i < queries.count(); ++i) {
    const Clock::time_point start = Clock::now();
    absl::StatusOr<ScoreVector> scores =
        ScoreAll(store, queries.row(i), threads);
    if (!scores.ok()) return scores.status();
    samples.push_back(Millis(Clock::now() - start));
  }
  return Summarize(std::move(samples)).median_ms;
}

nlohmann::ordered_json BenchReportToJson(const BenchReport& r) {
  return {
      {"schema_version", kSchemaVersion},
      {"n", r.n},
      {"dim", r.dim},
      {"queries", r.queries},
      {"threads", r.threads},
      {"plain_topk",
       {{"mean_ms", r.plain.mean_ms}, {"median_ms", r.plain.median_ms}}},
      {"detect_and_hide",
       {{"mean_ms", r.defended.mean_ms}, {"median_ms", r.defended.median_ms}}},
      {"ratio_mean", r.ratio_mean},
      {"ratio_median", r.ratio_median},
      {"detected", r.detected}};
}

}  // namespace mirabel::cli
