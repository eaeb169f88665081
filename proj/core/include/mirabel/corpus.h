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

#ifndef MIRABEL_CORPUS_H_
#define MIRABEL_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace mirabel {

// A single record of the private document store.
struct Document {
  std::string id;
  std::string text;
  std::map<std::string, std::string> metadata;

  bool operator==(const Document&) const = default;
};

// Row-major float32 matrix of `count` embeddings of width `dim`.
//
// `normalized` is a claim about the whole matrix: when set, every row has unit
// L2 norm (within kNormTolerance). A matrix containing a zero row (the
// embedding of a text without tokens) never carries the flag.
class EmbeddingMatrix {
 public:
  static constexpr double kNormTolerance = 1e-4;

  EmbeddingMatrix() = default;
  // Zero-filled matrix.
  EmbeddingMatrix(size_t dim, size_t count);

  // Validates shape and finiteness. `normalized` is checked, not trusted.
  static absl::StatusOr<EmbeddingMatrix> FromData(size_t dim, size_t count,
                                                  std::vector<float> data,
                                                  bool normalized);

  size_t dim() const { return dim_; }
  size_t count() const { return count_; }
  bool normalized() const { return normalized_; }
  bool empty() const { return count_ == 0; }

  std::span<const float> row(size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> mutable_row(size_t i) {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const { return data_; }

  // Scales every non-zero row to unit L2 norm (f64 accumulation) and
  // recomputes the flag. Zero rows are left untouched.
  void NormalizeRows();

  // Appends one row; `values.size()` must equal dim().
  void AppendRow(std::span<const float> values);

  // True iff every row is unit-norm within kNormTolerance.
  bool AllRowsUnitNorm() const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  size_t dim_ = 0;
  size_t count_ = 0;
  std::vector<float> data_;
  bool normalized_ = false;
};

// L2 norm with f64 accumulation.
double L2Norm(std::span<const float> v);

// Cosine similarity; 0 when either side is the zero vector.
double Cosine(std::span<const float> a, std::span<const float> b);

// Documents plus their embeddings; row i of `embeddings()` belongs to
// `documents()[i]`. Immutable once built, so concurrent readers are safe.
class CorpusStore {
 public:
  CorpusStore() = default;

  // Rejects empty/duplicate ids and empty texts. The store carries no
  // embeddings (dim 0) until `WithEmbeddings` is called.
  static absl::StatusOr<CorpusStore> FromDocuments(
      std::vector<Document> documents);

  // Attaches embeddings. Rows are L2-normalized on the way in, so scoring can
  // use plain dot products.
  static absl::StatusOr<CorpusStore> Create(std::vector<Document> documents,
                                            EmbeddingMatrix embeddings);

  size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  size_t dim() const { return embeddings_.dim(); }
  bool has_embeddings() const {
    return embeddings_.count() == documents_.size() && embeddings_.dim() > 0;
  }

  const std::vector<Document>& documents() const { return documents_; }
  const Document& document(size_t row) const { return documents_[row]; }
  const EmbeddingMatrix& embeddings() const { return embeddings_; }

  std::optional<size_t> RowOf(std::string_view id) const;
  bool Contains(std::string_view id) const { return RowOf(id).has_value(); }

 private:
  std::vector<Document> documents_;
  EmbeddingMatrix embeddings_;
  std::unordered_map<std::string, size_t> row_by_id_;
};

// Reads a JSONL corpus: one `{"id": str, "text": str, "metadata": {...}?}`
// object per line. Blank lines are skipped. Errors name the 1-based line.
absl::StatusOr<CorpusStore> IngestJsonl(const std::string& path);
absl::StatusOr<std::vector<Document>> ParseJsonl(std::string_view contents);

// Serializes documents in the same format, one per line.
std::string ToJsonl(std::span<const Document> documents);
absl::Status WriteJsonl(std::span<const Document> documents,
                        const std::string& path);

// Lowercased alphanumeric tokens. Bytes >= 0x80 count as token characters so
// UTF-8 words stay intact.
std::vector<std::string> Tokenize(std::string_view text);

// Maps texts to embeddings of a fixed dimension.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual size_t dim() const = 0;
  virtual absl::StatusOr<EmbeddingMatrix> Embed(
      std::span<const std::string> texts) const = 0;
  // Short identifier recorded in manifests ("hash", "remote").
  virtual std::string name() const = 0;
};

// Sign-hashed bag-of-tokens feature hashing. Each token lands in a seeded
// bucket with a seeded +-1 sign; rows are L2-normalized. A text without
// tokens maps to the zero vector.
absl::StatusOr<EmbeddingMatrix> HashEmbed(std::span<const std::string> texts,
                                          size_t dim, uint64_t seed);

class HashEmbedder : public EmbeddingProvider {
 public:
  static constexpr size_t kMinDim = 64;

  // Fails unless dim is a power of two no smaller than kMinDim.
  static absl::StatusOr<HashEmbedder> Create(size_t dim, uint64_t seed);

  size_t dim() const override { return dim_; }
  uint64_t seed() const { return seed_; }
  std::string name() const override { return "hash"; }
  absl::StatusOr<EmbeddingMatrix> Embed(
      std::span<const std::string> texts) const override;

  // Single-text convenience; the row is written into `out` (size dim()).
  void EmbedInto(std::string_view text, std::span<float> out) const;
  std::vector<float> EmbedOne(std::string_view text) const;

 private:
  HashEmbedder(size_t dim, uint64_t seed) : dim_(dim), seed_(seed) {}

  size_t dim_;
  uint64_t seed_;
};

}  // namespace mirabel

#endif  // MIRABEL_CORPUS_H_
