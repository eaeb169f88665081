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

#include "mirabel/remote_embedder.h"

#include <cmath>
#include <string_view>
#include <utility>

#include "absl/strings/str_cat.h"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace mirabel {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path for the embed call
};

absl::StatusOr<Endpoint> ParseEndpoint(const std::string& url) {
  if (url.rfind("https://", 0) == 0) {
    return absl::InvalidArgumentError(
        "https endpoints are not supported; use a local http proxy");
  }
  if (url.rfind("http://", 0) != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("endpoint must start with http://, got '", url, "'"));
  }
  const size_t host_start = 7;
  const size_t slash = url.find('/', host_start);
  Endpoint ep;
  ep.origin = url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (ep.origin.size() <= host_start) {
    return absl::InvalidArgumentError("endpoint has no host");
  }
  ep.path = prefix + "/embed";
  return ep;
}

// One request/response exchange; retryable failures are kUnavailable or
// kDeadlineExceeded.
absl::StatusOr<std::vector<std::vector<float>>> EmbedBatch(
    httplib::Client& client, const std::string& path,
    std::span<const std::string> texts, size_t* dim_out) {
  nlohmann::json request;
  request["texts"] = std::vector<std::string>(texts.begin(), texts.end());
  auto res = client.Post(path, request.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string what = httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout ||
        err == httplib::Error::Read) {
      return absl::DeadlineExceededError(
          absl::StrCat("embedding service timed out: ", what));
    }
    return absl::UnavailableError(
        absl::StrCat("embedding service unreachable: ", what));
  }
  if (res->status < 200 || res->status >= 300) {
    if (res->status >= 400 && res->status < 500) {
      return absl::InvalidArgumentError(absl::StrCat(
          "embedding service rejected request: HTTP ", res->status));
    }
    return absl::UnavailableError(
        absl::StrCat("embedding service returned HTTP ", res->status));
  }
  nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    return absl::DataLossError("embedding service returned invalid JSON");
  }
  if (!body.contains("dim") || !body["dim"].is_number_integer() ||
      body["dim"].get<int64_t>() <= 0) {
    return absl::DataLossError("response lacks a positive integer \"dim\"");
  }
  if (!body.contains("vectors") || !body["vectors"].is_array()) {
    return absl::DataLossError("response lacks a \"vectors\" array");
  }
  const auto dim = static_cast<size_t>(body["dim"].get<int64_t>());
  const auto& vectors = body["vectors"];
  if (vectors.size() != texts.size()) {
    return absl::DataLossError(absl::StrCat("count mismatch: sent ",
                                            texts.size(), " texts, got ",
                                            vectors.size(), " vectors"));
  }
  std::vector<std::vector<float>> rows;
  rows.reserve(vectors.size());
  for (size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (!v.is_array() || v.size() != dim) {
      return absl::DataLossError(absl::StrCat(
          "dimension mismatch: vector ", i, " has ",
          v.is_array() ? v.size() : 0, " values, declared dim ", dim));
    }
    std::vector<float> row(dim);
    for (size_t j = 0; j < dim; ++j) {
      if (!v[j].is_number()) {
        return absl::DataLossError(
            absl::StrCat("vector ", i, " has a non-numeric entry"));
      }
      row[j] = v[j].get<float>();
      if (!std::isfinite(row[j])) {
        return absl::DataLossError(
            absl::StrCat("vector ", i, " has a non-finite entry"));
      }
    }
    rows.push_back(std::move(row));
  }
  *dim_out = dim;
  return rows;
}

bool Retryable(const absl::Status& s) {
  return absl::IsUnavailable(s) || absl::IsDeadlineExceeded(s);
}

}  // namespace

absl::StatusOr<EmbeddingMatrix> RemoteEmbed(std::span<const std::string> texts,
                                            const RemoteEmbedOptions& options) {
  if (texts.empty()) {
    return absl::InvalidArgumentError("no texts to embed");
  }
  auto endpoint = ParseEndpoint(options.endpoint);
  if (!endpoint.ok()) return endpoint.status();
  if (options.retries < 0) {
    return absl::InvalidArgumentError("retries must be >= 0");
  }
  httplib::Client client(endpoint->origin);
  const auto ms = options.timeout.count();
  client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);

  const size_t batch =
      options.batch_size == 0 ? texts.size() : options.batch_size;
  size_t dim = 0;
  std::vector<float> data;
  for (size_t start = 0; start < texts.size(); start += batch) {
    auto chunk = texts.subspan(start, std::min(batch, texts.size() - start));
    absl::StatusOr<std::vector<std::vector<float>>> rows;
    size_t chunk_dim = 0;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
      rows = EmbedBatch(client, endpoint->path, chunk, &chunk_dim);
      if (rows.ok() || !Retryable(rows.status())) break;
    }
    if (!rows.ok()) {
      if (!Retryable(rows.status())) return rows.status();
      return absl::Status(rows.status().code(),
                          absl::StrCat(rows.status().message(), " (after ",
                                       options.retries + 1, " attempts)"));
    }
    if (dim == 0) dim = chunk_dim;
    if (chunk_dim != dim) {
      return absl::DataLossError(absl::StrCat(
          "dimension mismatch across batches: ", dim, " vs ", chunk_dim));
    }
    for (auto& row : *rows) data.insert(data.end(), row.begin(), row.end());
  }
  auto matrix =
      EmbeddingMatrix::FromData(dim, texts.size(), std::move(data), false);
  if (!matrix.ok()) return matrix.status();
  matrix->NormalizeRows();
  return matrix;
}

absl::StatusOr<EmbeddingMatrix> RemoteEmbedder::Embed(
    std::span<const std::string> texts) const {
  auto m = RemoteEmbed(texts, options_);
  if (!m.ok()) return m;
  if (dim_ != 0 && m->dim() != dim_) {
    return absl::DataLossError(absl::StrCat(
        "embedding service answered with dim ", m->dim(), ", expected ", dim_));
  }
  return m;
}

}  // namespace mirabel
