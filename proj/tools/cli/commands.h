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

#ifndef MIRABEL_TOOLS_CLI_COMMANDS_H_
#define MIRABEL_TOOLS_CLI_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "absl/status/status.h"
#include "mirabel/detector.h"
#include "nlohmann/json.hpp"

namespace mirabel::cli {

// Process exit codes. Stable.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitNetwork = 2;
inline constexpr int kExitPrecondition = 3;

// kUnavailable / kDeadlineExceeded -> 2, kFailedPrecondition -> 3, any other
// error -> 1.
int ExitCodeFor(const absl::Status& status);

// Reports `status` on `err` and returns its exit code.
int Fail(const absl::Status& status, std::ostream& err);

struct ProviderOptions {
  // "hash" or "remote".
  std::string provider = "hash";
  size_t dim = 1024;
  uint64_t seed = 1;
  std::string endpoint;
  int timeout_ms = 5000;
  int retries = 2;
};

struct IngestOptions {
  std::string corpus_path;
  // Embedding file; the manifest goes to `<out_path>.manifest.json`.
  std::string out_path;
  ProviderOptions provider;
};

struct DetectOptions {
  std::string corpus_path;
  std::string embeddings_path;
  // Defaults to `<embeddings_path>.manifest.json`.
  std::string manifest_path;
  // Exactly one of the two.
  std::string query_text;
  std::string query_vector_path;
  double rho = 0.05;
  ThresholdVariant variant = ThresholdVariant::kAlg1;
  size_t k = 3;
  int threads = 1;
  // Overrides the manifest's endpoint for remote stores.
  std::string endpoint;
  int timeout_ms = 5000;
  int retries = 2;
};

struct SimulateOptions {
  std::string config_path;
  // Flag values in the config key space; applied on top of the file.
  nlohmann::json overrides = nlohmann::json::object();
};

struct BenchOptions {
  // Both empty: a random unit-norm store of `n` rows and width `dim`.
  std::string corpus_path;
  std::string embeddings_path;
  size_t n = 10000;
  size_t dim = 128;
  size_t queries = 200;
  size_t warmup = 10;
  size_t k = 3;
  double rho = 0.05;
  ThresholdVariant variant = ThresholdVariant::kAlg1;
  int threads = 1;
  uint64_t seed = 1;
};

struct ServeCheckOptions {
  std::string endpoint;
  int timeout_ms = 5000;
  int retries = 2;
};

// Each command writes its result to `out` and diagnostics to `err`, and
// returns the process exit code.
int RunIngest(const IngestOptions& options, std::ostream& out,
              std::ostream& err);
int RunDetect(const DetectOptions& options, std::ostream& out,
              std::ostream& err);
int RunSimulate(const SimulateOptions& options, std::ostream& out,
                std::ostream& err);
int RunBench(const BenchOptions& options, std::ostream& out, std::ostream& err);
int RunEmbedServeCheck(const ServeCheckOptions& options, std::ostream& out,
                       std::ostream& err);

// Path of the manifest written next to an embedding file.
std::string ManifestPathFor(const std::string& embeddings_path);

}  // namespace mirabel::cli

#endif  // MIRABEL_TOOLS_CLI_COMMANDS_H_
