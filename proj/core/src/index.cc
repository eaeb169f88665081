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

#include "mirabel/index.h"

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"

namespace mirabel {
namespace {

// Eight independent partial sums combined in a fixed tree, so the result
// depends only on the two rows.
float Dot(const float* a, const float* b, size_t dim) {
  float acc[8] = {};
  size_t i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (size_t l = 0; i < dim; ++i, ++l) acc[l] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

void ScoreRange(const EmbeddingMatrix& rows, const float* query, size_t begin,
                size_t end, float* out) {
  const size_t dim = rows.dim();
  const float* base = rows.data().data();
  for (size_t r = begin; r < end; ++r) out[r] = Dot(base + r * dim, query, dim);
}

// Orders (score desc, row asc); "a before b".
struct Better {
  const std::vector<float>* scores;
  bool operator()(size_t a, size_t b) const {
    const float sa = (*scores)[a], sb = (*scores)[b];
    if (sa != sb) return sa > sb;
    return a < b;
  }
};

}  // namespace

bool RetrievalResult::Contains(std::string_view id) const {
  return std::any_of(hits.begin(), hits.end(),
                     [&](const RetrievalHit& h) { return h.id == id; });
}

std::vector<std::string> RetrievalResult::ids() const {
  std::vector<std::string> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.id);
  return out;
}

absl::StatusOr<ScoreVector> ScoreAll(const CorpusStore& store,
                                     std::span<const float> query,
                                     int threads) {
  if (store.empty()) return absl::FailedPreconditionError("store is empty");
  if (!store.has_embeddings()) {
    return absl::FailedPreconditionError("store has no embeddings");
  }
  if (query.size() != store.dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "query dim ", query.size(), " does not match store dim ", store.dim()));
  }
  ScoreVector out;
  out.scores.assign(store.size(), 0.0f);
  const double norm = L2Norm(query);
  if (!std::isfinite(norm)) {
    return absl::InvalidArgumentError("query contains NaN or Inf");
  }
  if (norm == 0.0) {
    out.query_norm_ok = false;
    return out;
  }
  std::vector<float> unit(query.begin(), query.end());
  if (std::abs(norm - 1.0) > 1e-6) {
    for (float& v : unit) v = static_cast<float>(v / norm);
  }

  const size_t n = store.size();
  const size_t workers =
      std::clamp<size_t>(threads < 1 ? 1 : static_cast<size_t>(threads), 1, n);
  if (workers == 1) {
    ScoreRange(store.embeddings(), unit.data(), 0, n, out.scores.data());
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    const size_t begin = w * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(ScoreRange, std::cref(store.embeddings()), unit.data(),
                      begin, end, out.scores.data());
  }
  for (auto& t : pool) t.join();
  return out;
}

RetrievalResult TopKRows(const CorpusStore& store, const ScoreVector& scores,
                         size_t k, std::span<const size_t> exclude_rows) {
  RetrievalResult result;
  result.k = k;
  if (k == 0) return result;
  const Better better{&scores.scores};
  // Min-heap on "better": the heap front is the worst kept row.
  std::vector<size_t> heap;
  heap.reserve(k + 1);
  // Exclusions are only consulted for rows that would enter the heap.
  auto excluded = [&exclude_rows](size_t r) {
    return !exclude_rows.empty() &&
           std::find(exclude_rows.begin(), exclude_rows.end(), r) !=
               exclude_rows.end();
  };
  for (size_t r = 0; r < scores.scores.size(); ++r) {
    if (heap.size() < k) {
      if (excluded(r)) continue;
      heap.push_back(r);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(r, heap.front()) && !excluded(r)) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = r;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
  std::sort(heap.begin(), heap.end(), better);
  result.hits.reserve(heap.size());
  for (size_t r : heap) {
    result.hits.push_back({store.document(r).id, r, scores.scores[r]});
  }
  return result;
}

RetrievalResult TopK(const CorpusStore& store, const ScoreVector& scores,
                     size_t k,
                     const std::unordered_set<std::string>& exclude_ids) {
  std::vector<size_t> rows;
  rows.reserve(exclude_ids.size());
  for (const auto& id : exclude_ids) {
    if (auto row = store.RowOf(id)) rows.push_back(*row);
  }
  std::sort(rows.begin(), rows.end());
  return TopKRows(store, scores, k, rows);
}

}  // namespace mirabel
