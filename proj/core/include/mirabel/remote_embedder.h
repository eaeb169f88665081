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

#ifndef MIRABEL_REMOTE_EMBEDDER_H_
#define MIRABEL_REMOTE_EMBEDDER_H_

#include <chrono>
#include <cstddef>
#include <span>
#include <string>

#include "absl/status/statusor.h"
#include "mirabel/corpus.h"

namespace mirabel {

// Client for an external embedding service.
//
// Protocol: POST <endpoint>/embed with {"texts": [...]}, answered by
// {"dim": int, "vectors": [[...], ...]}. Only plain http:// endpoints are
// supported. Transport failures and 5xx answers are retried; after
// `retries` extra attempts the call fails with kUnavailable (or
// kDeadlineExceeded for timeouts). 4xx answers and malformed bodies fail
// immediately and are not retried.
struct RemoteEmbedOptions {
  std::string endpoint;
  std::chrono::milliseconds timeout{5000};
  int retries = 2;
  // Texts per request; batches are issued sequentially, in order.
  size_t batch_size = 256;
};

absl::StatusOr<EmbeddingMatrix> RemoteEmbed(std::span<const std::string> texts,
                                            const RemoteEmbedOptions& options);

class RemoteEmbedder : public EmbeddingProvider {
 public:
  // A non-zero `dim` is enforced on every response; 0 accepts any width.
  explicit RemoteEmbedder(RemoteEmbedOptions options, size_t dim = 0)
      : options_(std::move(options)), dim_(dim) {}

  size_t dim() const override { return dim_; }
  std::string name() const override { return "remote"; }
  absl::StatusOr<EmbeddingMatrix> Embed(
      std::span<const std::string> texts) const override;

  const RemoteEmbedOptions& options() const { return options_; }

 private:
  RemoteEmbedOptions options_;
  size_t dim_;
};

}  // namespace mirabel

#endif  // MIRABEL_REMOTE_EMBEDDER_H_
