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

#ifndef MIRABEL_INDEX_H_
#define MIRABEL_INDEX_H_

#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "absl/status/statusor.h"
#include "mirabel/corpus.h"

namespace mirabel {

// Similarity of one query against every stored row, in row order. Nothing is
// sorted; callers that need the full score set (the detector) read it
// directly and top-k selection reuses the same vector.
struct ScoreVector {
  std::vector<float> scores;
  // False when the query was the zero vector; every score is then 0.
  bool query_norm_ok = true;

  size_t size() const { return scores.size(); }
};

struct RetrievalHit {
  std::string id;
  size_t row = 0;
  float score = 0.0f;

  bool operator==(const RetrievalHit&) const = default;
};

struct RetrievalResult {
  size_t k = 0;
  // Descending score; ties resolved by ascending row.
  std::vector<RetrievalHit> hits;

  bool Contains(std::string_view id) const;
  std::vector<std::string> ids() const;
  bool operator==(const RetrievalResult&) const = default;
};

// Brute-force cosine scan. The query is normalized internally; store rows are
// unit-norm (or zero), so each score is a single dot product. With
// `threads` > 1 rows are split into contiguous chunks; per-row accumulation
// order is fixed, so the output is bitwise identical for any thread count.
absl::StatusOr<ScoreVector> ScoreAll(const CorpusStore& store,
                                     std::span<const float> query,
                                     int threads = 1);

// The k best rows not in `exclude_rows`. k larger than what remains returns
// everything that remains.
RetrievalResult TopKRows(const CorpusStore& store, const ScoreVector& scores,
                         size_t k, std::span<const size_t> exclude_rows = {});

// Same selection with exclusions given as document ids; unknown ids are
// ignored.
RetrievalResult TopK(const CorpusStore& store, const ScoreVector& scores,
                     size_t k,
                     const std::unordered_set<std::string>& exclude_ids = {});

}  // namespace mirabel

#endif  // MIRABEL_INDEX_H_
