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

#include "mirabel/corpus.h"

#include <cctype>
#include <cmath>
#include <sstream>
#include <utility>

#include "absl/strings/str_cat.h"
#include "mirabel/embedding_file.h"
#include "nlohmann/json.hpp"
#include "src/hashing.h"

namespace mirabel {

EmbeddingMatrix::EmbeddingMatrix(size_t dim, size_t count)
    : dim_(dim), count_(count), data_(dim * count, 0.0f) {}

absl::StatusOr<EmbeddingMatrix> EmbeddingMatrix::FromData(
    size_t dim, size_t count, std::vector<float> data, bool normalized) {
  if (dim == 0) return absl::InvalidArgumentError("embedding dim must be > 0");
  if (data.size() != dim * count) {
    return absl::InvalidArgumentError(
        absl::StrCat("embedding data holds ", data.size(), " values, expected ",
                     count, "x", dim));
  }
  for (float v : data) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("embedding contains NaN or Inf");
    }
  }
  EmbeddingMatrix m;
  m.dim_ = dim;
  m.count_ = count;
  m.data_ = std::move(data);
  if (normalized && !m.AllRowsUnitNorm()) {
    return absl::InvalidArgumentError(
        "embedding flagged normalized but a row is not unit-norm");
  }
  m.normalized_ = normalized;
  return m;
}

bool EmbeddingMatrix::AllRowsUnitNorm() const {
  for (size_t i = 0; i < count_; ++i) {
    if (std::abs(L2Norm(row(i)) - 1.0) > kNormTolerance) return false;
  }
  return true;
}

void EmbeddingMatrix::NormalizeRows() {
  for (size_t i = 0; i < count_; ++i) {
    auto r = mutable_row(i);
    const double norm = L2Norm(r);
    if (norm == 0.0) continue;
    for (float& v : r) v = static_cast<float>(v / norm);
  }
  normalized_ = AllRowsUnitNorm();
}

void EmbeddingMatrix::AppendRow(std::span<const float> values) {
  data_.insert(data_.end(), values.begin(), values.end());
  ++count_;
  const bool unit = std::abs(L2Norm(values) - 1.0) <= kNormTolerance;
  normalized_ = count_ == 1 ? unit : normalized_ && unit;
}

double L2Norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * x;
  return std::sqrt(sum);
}

double Cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

absl::StatusOr<CorpusStore> CorpusStore::FromDocuments(
    std::vector<Document> documents) {
  CorpusStore store;
  store.row_by_id_.reserve(documents.size());
  for (size_t i = 0; i < documents.size(); ++i) {
    const Document& d = documents[i];
    if (d.id.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("document at row ", i, " has an empty id"));
    }
    if (d.text.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("document '", d.id, "' has empty text"));
    }
    if (!store.row_by_id_.emplace(d.id, i).second) {
      return absl::AlreadyExistsError(
          absl::StrCat("duplicate document id '", d.id, "' at row ", i));
    }
  }
  store.documents_ = std::move(documents);
  return store;
}

absl::StatusOr<CorpusStore> CorpusStore::Create(std::vector<Document> documents,
                                                EmbeddingMatrix embeddings) {
  if (embeddings.count() != documents.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("store has ", documents.size(), " documents but ",
                     embeddings.count(), " embeddings"));
  }
  auto store = FromDocuments(std::move(documents));
  if (!store.ok()) return store.status();
  embeddings.NormalizeRows();
  store->embeddings_ = std::move(embeddings);
  return store;
}

std::optional<size_t> CorpusStore::RowOf(std::string_view id) const {
  auto it = row_by_id_.find(std::string(id));
  if (it == row_by_id_.end()) return std::nullopt;
  return it->second;
}

absl::StatusOr<std::vector<Document>> ParseJsonl(std::string_view contents) {
  std::vector<Document> docs;
  std::unordered_map<std::string, size_t> first_line;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= contents.size()) {
    size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == contents.size()) break;
      continue;
    }
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    auto bad = [&](const std::string& why) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, ": ", why));
    };
    if (j.is_discarded()) return bad("not valid JSON");
    if (!j.is_object()) return bad("expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "id" && it.key() != "text" && it.key() != "metadata") {
        return bad(absl::StrCat("unknown field '", it.key(), "'"));
      }
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      return bad("missing string field \"id\"");
    }
    if (!j.contains("text") || !j["text"].is_string()) {
      return bad("missing string field \"text\"");
    }
    Document doc;
    doc.id = j["id"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    if (doc.id.empty()) return bad("empty id");
    if (doc.text.empty()) return bad("empty text");
    if (j.contains("metadata")) {
      const auto& meta = j["metadata"];
      if (!meta.is_object()) return bad("\"metadata\" must be an object");
      for (auto it = meta.begin(); it != meta.end(); ++it) {
        if (!it.value().is_string()) {
          return bad(absl::StrCat("metadata value for '", it.key(),
                                  "' must be a string"));
        }
        doc.metadata.emplace(it.key(), it.value().get<std::string>());
      }
    }
    auto [it, inserted] = first_line.emplace(doc.id, line_no);
    if (!inserted) {
      return absl::AlreadyExistsError(
          absl::StrCat("line ", line_no, ": duplicate id '", doc.id,
                       "' (first seen on line ", it->second, ")"));
    }
    docs.push_back(std::move(doc));
    if (end == contents.size()) break;
  }
  return docs;
}

absl::StatusOr<CorpusStore> IngestJsonl(const std::string& path) {
  auto contents = ReadFileToString(path);
  if (!contents.ok()) return contents.status();
  auto docs = ParseJsonl(*contents);
  if (!docs.ok()) {
    return absl::Status(docs.status().code(),
                        absl::StrCat(path, ": ", docs.status().message()));
  }
  return CorpusStore::FromDocuments(*std::move(docs));
}

std::string ToJsonl(std::span<const Document> documents) {
  std::string out;
  for (const Document& d : documents) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["text"] = d.text;
    if (!d.metadata.empty()) j["metadata"] = d.metadata;
    out += j.dump();
    out += '\n';
  }
  return out;
}

absl::Status WriteJsonl(std::span<const Document> documents,
                        const std::string& path) {
  return WriteFileAtomically(path, ToJsonl(documents));
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                                 : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

absl::StatusOr<HashEmbedder> HashEmbedder::Create(size_t dim, uint64_t seed) {
  if (dim < kMinDim || (dim & (dim - 1)) != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("hash embedding dim must be a power of two >= ", kMinDim,
                     ", got ", dim));
  }
  return HashEmbedder(dim, seed);
}

void HashEmbedder::EmbedInto(std::string_view text,
                             std::span<float> out) const {
  std::vector<double> acc(dim_, 0.0);
  const uint64_t bucket_seed = internal::StreamSeed(seed_, 1);
  const uint64_t sign_seed = internal::StreamSeed(seed_, 2);
  for (const std::string& token : Tokenize(text)) {
    const uint64_t bucket =
        internal::SeededHash(token, bucket_seed) & (dim_ - 1);
    const bool negative = internal::SeededHash(token, sign_seed) >> 63;
    acc[bucket] += negative ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  for (size_t i = 0; i < dim_; ++i) {
    out[i] = norm == 0.0 ? 0.0f : static_cast<float>(acc[i] / norm);
  }
}

std::vector<float> HashEmbedder::EmbedOne(std::string_view text) const {
  std::vector<float> v(dim_);
  EmbedInto(text, v);
  return v;
}

absl::StatusOr<EmbeddingMatrix> HashEmbedder::Embed(
    std::span<const std::string> texts) const {
  std::vector<float> data(dim_ * texts.size());
  bool all_unit = true;
  for (size_t i = 0; i < texts.size(); ++i) {
    std::span<float> row(data.data() + i * dim_, dim_);
    EmbedInto(texts[i], row);
    all_unit = all_unit && L2Norm(row) > 0.0;
  }
  return EmbeddingMatrix::FromData(dim_, texts.size(), std::move(data),
                                   all_unit);
}

absl::StatusOr<EmbeddingMatrix> HashEmbed(std::span<const std::string> texts,
                                          size_t dim, uint64_t seed) {
  auto embedder = HashEmbedder::Create(dim, seed);
  if (!embedder.ok()) return embedder.status();
  return embedder->Embed(texts);
}

}  // namespace mirabel
