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

// mirabel: ingest corpora, run single-query detection, simulate attacks, and
// time the defense.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "absl/strings/str_replace.h"
#include "cli/commands.h"
#include "cli/run_config.h"
#include "mirabel/detector.h"
#include "nlohmann/json.hpp"

namespace {

using mirabel::ThresholdVariant;

const std::map<std::string, ThresholdVariant> kVariants = {
    {"alg1", ThresholdVariant::kAlg1}, {"exact", ThresholdVariant::kExactEvt}};

std::string EnvEndpoint() {
  const char* v = std::getenv("MIRABEL_EMBED_ENDPOINT");
  return v == nullptr ? std::string() : std::string(v);
}

void AddRemoteFlags(CLI::App* cmd, std::string* endpoint, int* timeout_ms,
                    int* retries) {
  cmd->add_option("--endpoint", *endpoint,
                  "Embedding service base URL (default: "
                  "$MIRABEL_EMBED_ENDPOINT)");
  cmd->add_option("--timeout-ms", *timeout_ms, "Per-request timeout")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--retries", *retries, "Extra attempts after a failure")
      ->check(CLI::NonNegativeNumber);
}

// Flag text to a config value: JSON literals (numbers, booleans) where the
// text parses as one, plain strings otherwise.
nlohmann::json FlagValue(const std::string& text) {
  nlohmann::json j =
      nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || j.is_object() || j.is_array() || j.is_null()) {
    return text;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Membership-inference defense for retrieval-augmented "
      "generation: detect-and-hide over a document store."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mirabel 0.1.0");

  // ingest
  mirabel::cli::IngestOptions ingest;
  ingest.provider.endpoint = EnvEndpoint();
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "Embed a JSONL corpus into a store file");
  ingest_cmd->add_option("corpus", ingest.corpus_path, "Corpus JSONL")
      ->required();
  ingest_cmd->add_option("--out,-o", ingest.out_path, "Output .embed file")
      ->required();
  ingest_cmd->add_option("--provider", ingest.provider.provider)
      ->check(CLI::IsMember({"hash", "remote"}));
  ingest_cmd->add_option("--dim", ingest.provider.dim,
                         "Hash embedding width (power of two, >= 64)");
  ingest_cmd->add_option("--seed", ingest.provider.seed, "Hash embedding seed");
  AddRemoteFlags(ingest_cmd, &ingest.provider.endpoint,
                 &ingest.provider.timeout_ms, &ingest.provider.retries);

  // detect
  mirabel::cli::DetectOptions detect;
  detect.endpoint = EnvEndpoint();
  CLI::App* detect_cmd =
      app.add_subcommand("detect", "Run detection for one query");
  detect_cmd->add_option("--corpus", detect.corpus_path, "Corpus JSONL")
      ->required();
  detect_cmd
      ->add_option("--embeddings", detect.embeddings_path, "Store .embed file")
      ->required();
  detect_cmd->add_option("--manifest", detect.manifest_path,
                         "Manifest (default: <embeddings>.manifest.json)");
  CLI::Option* query_opt =
      detect_cmd->add_option("--query", detect.query_text, "Query text");
  detect_cmd
      ->add_option("--query-vector", detect.query_vector_path,
                   "Query embedding (.embed with one row, or JSON array)")
      ->excludes(query_opt);
  detect_cmd->add_option("--rho", detect.rho, "Significance level");
  detect_cmd->add_option("--variant", detect.variant, "alg1 or exact")
      ->transform(CLI::CheckedTransformer(kVariants, CLI::ignore_case));
  detect_cmd->add_option("--k", detect.k, "Retrieved documents");
  detect_cmd->add_option("--threads", detect.threads, "Scan threads")
      ->check(CLI::PositiveNumber);
  AddRemoteFlags(detect_cmd, &detect.endpoint, &detect.timeout_ms,
                 &detect.retries);

  // simulate
  mirabel::cli::SimulateOptions simulate;
  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "Run a synthetic attack experiment and write reports");
  simulate_cmd->add_option("--config", simulate.config_path,
                           "Flat JSON config file");
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> override_opts;
  for (const std::string& key : mirabel::cli::RunConfigKeys()) {
    const std::string flag = "--" + absl::StrReplaceAll(key, {{"_", "-"}});
    override_opts[key] = simulate_cmd->add_option(
        flag, overrides[key], "Overrides config key '" + key + "'");
  }

  // bench
  mirabel::cli::BenchOptions bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Time plain top-k against detect-and-hide");
  bench_cmd->add_option("--corpus", bench.corpus_path, "Corpus JSONL");
  bench_cmd->add_option("--embeddings", bench.embeddings_path,
                        "Store .embed file");
  bench_cmd->add_option("--n", bench.n, "Random store size");
  bench_cmd->add_option("--dim", bench.dim, "Random store width");
  bench_cmd->add_option("--queries", bench.queries, "Timed queries");
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed warm-up queries");
  bench_cmd->add_option("--k", bench.k, "Retrieved documents");
  bench_cmd->add_option("--rho", bench.rho, "Significance level");
  bench_cmd->add_option("--variant", bench.variant, "alg1 or exact")
      ->transform(CLI::CheckedTransformer(kVariants, CLI::ignore_case));
  bench_cmd->add_option("--threads", bench.threads, "Scan threads")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Store and query seed");

  // embed-serve-check
  mirabel::cli::ServeCheckOptions check;
  check.endpoint = EnvEndpoint();
  CLI::App* check_cmd = app.add_subcommand("embed-serve-check",
                                           "Probe a remote embedding service");
  AddRemoteFlags(check_cmd, &check.endpoint, &check.timeout_ms, &check.retries);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mirabel::cli::kExitIo;
  }

  if (ingest_cmd->parsed()) {
    return mirabel::cli::RunIngest(ingest, std::cout, std::cerr);
  }
  if (detect_cmd->parsed()) {
    return mirabel::cli::RunDetect(detect, std::cout, std::cerr);
  }
  if (simulate_cmd->parsed()) {
    for (const auto& [key, opt] : override_opts) {
      if (opt->count() > 0) simulate.overrides[key] = FlagValue(overrides[key]);
    }
    return mirabel::cli::RunSimulate(simulate, std::cout, std::cerr);
  }
  if (bench_cmd->parsed()) {
    return mirabel::cli::RunBench(bench, std::cout, std::cerr);
  }
  return mirabel::cli::RunEmbedServeCheck(check, std::cout, std::cerr);
}
