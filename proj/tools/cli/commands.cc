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

#include "cli/commands.h"

#include <chrono>
#include <filesystem>
#include <memory>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "cli/bench.h"
#include "cli/run_config.h"
#include "mirabel/attacksim.h"
#include "mirabel/corpus.h"
#include "mirabel/defense.h"
#include "mirabel/embedding_file.h"
#include "mirabel/index.h"
#include "mirabel/remote_embedder.h"
#include "mirabel/report_io.h"

namespace mirabel::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

RemoteEmbedOptions RemoteOptions(const std::string& endpoint, int timeout_ms,
                                 int retries) {
  RemoteEmbedOptions o;
  o.endpoint = endpoint;
  o.timeout = std::chrono::milliseconds(timeout_ms);
  o.retries = retries;
  return o;
}

absl::Status MissingEndpoint() {
  return absl::InvalidArgumentError(
      "remote provider needs --endpoint or MIRABEL_EMBED_ENDPOINT");
}

absl::StatusOr<std::unique_ptr<EmbeddingProvider>> MakeProvider(
    const ProviderOptions& p) {
  if (p.provider == "hash") {
    absl::StatusOr<HashEmbedder> h = HashEmbedder::Create(p.dim, p.seed);
    if (!h.ok()) return h.status();
    return std::make_unique<HashEmbedder>(*std::move(h));
  }
  if (p.provider == "remote") {
    if (p.endpoint.empty()) return MissingEndpoint();
    return std::make_unique<RemoteEmbedder>(
        RemoteOptions(p.endpoint, p.timeout_ms, p.retries));
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown provider '", p.provider, "' (hash, remote)"));
}

ordered_json Manifest(const ProviderOptions& p, const EmbeddingMatrix& m) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["format_version"] = kEmbeddingFormatVersion;
  j["count"] = m.count();
  j["dim"] = m.dim();
  j["provider"] = p.provider;
  j["seed"] = p.provider == "hash" ? ordered_json(p.seed) : ordered_json();
  j["endpoint"] =
      p.provider == "remote" ? ordered_json(p.endpoint) : ordered_json();
  j["normalized"] = m.normalized();
  return j;
}

absl::StatusOr<json> ReadJsonFile(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFileToString(path);
  if (!text.ok()) return text.status();
  json j = json::parse(*text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": not valid JSON"));
  }
  return j;
}

absl::StatusOr<CorpusStore> LoadStore(const std::string& corpus_path,
                                      const std::string& embeddings_path) {
  absl::StatusOr<CorpusStore> docs = IngestJsonl(corpus_path);
  if (!docs.ok()) return docs.status();
  absl::StatusOr<EmbeddingMatrix> matrix = LoadEmbeddings(embeddings_path);
  if (!matrix.ok()) return matrix.status();
  if (matrix->count() != docs->size()) {
    return absl::DataLossError(absl::StrCat(
        "store mismatch: ", corpus_path, " has ", docs->size(),
        " documents but ", embeddings_path, " has ", matrix->count(), " rows"));
  }
  return CorpusStore::Create(docs->documents(), *std::move(matrix));
}

absl::StatusOr<std::vector<float>> ReadQueryVector(const std::string& path) {
  absl::StatusOr<std::string> bytes = ReadFileToString(path);
  if (!bytes.ok()) return bytes.status();
  if (bytes->starts_with(kEmbeddingMagic)) {
    absl::StatusOr<EmbeddingMatrix> m = DecodeEmbeddings(*bytes);
    if (!m.ok()) return m.status();
    if (m->count() != 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          path, ": query vector file must hold 1 row, found ", m->count()));
    }
    std::span<const float> row = m->row(0);
    return std::vector<float>(row.begin(), row.end());
  }
  json j = json::parse(*bytes, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_array() || j.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(
        path, ": expected an embedding file or a JSON array of numbers"));
  }
  std::vector<float> v;
  v.reserve(j.size());
  for (const json& x : j) {
    if (!x.is_number()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": non-numeric entry ", x.dump()));
    }
    v.push_back(x.get<float>());
  }
  return v;
}

absl::StatusOr<std::vector<float>> EmbedQueryText(const DetectOptions& o,
                                                  const CorpusStore& store) {
  const std::string manifest_path = o.manifest_path.empty()
                                        ? ManifestPathFor(o.embeddings_path)
                                        : o.manifest_path;
  absl::StatusOr<json> manifest = ReadJsonFile(manifest_path);
  if (!manifest.ok()) return manifest.status();
  const json& m = *manifest;
  if (!m.is_object() || !m.contains("provider") || !m["provider"].is_string() ||
      !m.contains("dim") || !m["dim"].is_number_unsigned() ||
      !m.contains("count") || !m["count"].is_number_unsigned()) {
    return absl::InvalidArgumentError(
        absl::StrCat(manifest_path, ": malformed manifest"));
  }
  if (m["dim"].get<size_t>() != store.dim() ||
      m["count"].get<size_t>() != store.size()) {
    return absl::DataLossError(absl::StrCat(
        manifest_path, ": manifest disagrees with the embedding file"));
  }
  const std::string provider = m["provider"].get<std::string>();
  if (provider == "hash") {
    if (!m.contains("seed") || !m["seed"].is_number_unsigned()) {
      return absl::InvalidArgumentError(
          absl::StrCat(manifest_path, ": hash provider without seed"));
    }
    absl::StatusOr<HashEmbedder> h =
        HashEmbedder::Create(store.dim(), m["seed"].get<uint64_t>());
    if (!h.ok()) return h.status();
    return h->EmbedOne(o.query_text);
  }
  if (provider == "remote") {
    std::string endpoint = o.endpoint;
    if (endpoint.empty() && m.contains("endpoint") &&
        m["endpoint"].is_string()) {
      endpoint = m["endpoint"].get<std::string>();
    }
    if (endpoint.empty()) return MissingEndpoint();
    const std::string texts[] = {o.query_text};
    absl::StatusOr<EmbeddingMatrix> e =
        RemoteEmbed(texts, RemoteOptions(endpoint, o.timeout_ms, o.retries));
    if (!e.ok()) return e.status();
    std::span<const float> row = e->row(0);
    return std::vector<float>(row.begin(), row.end());
  }
  return absl::InvalidArgumentError(
      absl::StrCat(manifest_path, ": unknown provider '", provider, "'"));
}

absl::Status EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  return absl::OkStatus();
}

}  // namespace

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kUnavailable:
    case absl::StatusCode::kDeadlineExceeded:
      return kExitNetwork;
    case absl::StatusCode::kFailedPrecondition:
      return kExitPrecondition;
    default:
      return kExitIo;
  }
}

int Fail(const absl::Status& status, std::ostream& err) {
  err << "mirabel: " << status.message() << '\n';
  return ExitCodeFor(status);
}

std::string ManifestPathFor(const std::string& embeddings_path) {
  return embeddings_path + ".manifest.json";
}

int RunIngest(const IngestOptions& options, std::ostream& out,
              std::ostream& err) {
  if (options.out_path.empty()) {
    return Fail(absl::InvalidArgumentError("ingest needs an output path"), err);
  }
  absl::StatusOr<std::unique_ptr<EmbeddingProvider>> provider =
      MakeProvider(options.provider);
  if (!provider.ok()) return Fail(provider.status(), err);
  absl::StatusOr<CorpusStore> docs = IngestJsonl(options.corpus_path);
  if (!docs.ok()) return Fail(docs.status(), err);

  std::vector<std::string> texts;
  texts.reserve(docs->size());
  for (const Document& d : docs->documents()) texts.push_back(d.text);
  absl::StatusOr<EmbeddingMatrix> matrix = (*provider)->Embed(texts);
  if (!matrix.ok()) return Fail(matrix.status(), err);

  const std::string manifest_path = ManifestPathFor(options.out_path);
  const std::string manifest =
      Manifest(options.provider, *matrix).dump(2) + "\n";
  if (absl::Status s = SaveEmbeddings(*matrix, options.out_path); !s.ok()) {
    return Fail(s, err);
  }
  if (absl::Status s = WriteFileAtomically(manifest_path, manifest); !s.ok()) {
    std::error_code ec;
    std::filesystem::remove(options.out_path, ec);
    return Fail(s, err);
  }
  ordered_json summary = {{"schema_version", kSchemaVersion},
                          {"embeddings", options.out_path},
                          {"manifest", manifest_path},
                          {"count", matrix->count()},
                          {"dim", matrix->dim()}};
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int RunDetect(const DetectOptions& options, std::ostream& out,
              std::ostream& err) {
  if (options.query_text.empty() == options.query_vector_path.empty()) {
    return Fail(absl::InvalidArgumentError(
                    "detect needs exactly one of --query or --query-vector"),
                err);
  }
  absl::StatusOr<CorpusStore> store =
      LoadStore(options.corpus_path, options.embeddings_path);
  if (!store.ok()) return Fail(store.status(), err);

  absl::StatusOr<std::vector<float>> query =
      options.query_vector_path.empty()
          ? EmbedQueryText(options, *store)
          : ReadQueryVector(options.query_vector_path);
  if (!query.ok()) return Fail(query.status(), err);

  absl::StatusOr<ScoreVector> scores =
      ScoreAll(*store, *query, options.threads);
  if (!scores.ok()) return Fail(scores.status(), err);
  DefenseConfig config;
  config.rho = options.rho;
  config.variant = options.variant;
  config.k = options.k;
  absl::StatusOr<DefendedRetrieval> result =
      DefendedRetrieveScores(*store, *scores, config);
  if (!result.ok()) return Fail(result.status(), err);

  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  const ordered_json detection = DetectionToJson(result->detection);
  for (const auto& [key, value] : detection.items()) j[key] = value;
  j["hidden_id"] =
      result->hidden_id ? ordered_json(*result->hidden_id) : ordered_json();
  ordered_json hits = ordered_json::array();
  for (const RetrievalHit& h : result->retrieval.hits) {
    hits.push_back({{"id", h.id}, {"row", h.row}, {"score", h.score}});
  }
  j["hits"] = std::move(hits);
  out << j.dump(2) << '\n';
  return kExitOk;
}

int RunSimulate(const SimulateOptions& options, std::ostream& out,
                std::ostream& err) {
  std::string text;
  if (!options.config_path.empty()) {
    absl::StatusOr<std::string> read = ReadFileToString(options.config_path);
    if (!read.ok()) return Fail(read.status(), err);
    text = *std::move(read);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
      return Fail(absl::InvalidArgumentError(
                      absl::StrCat(options.config_path, ": empty config")),
                  err);
    }
  }
  absl::StatusOr<RunConfig> config = LoadRunConfig(text, options.overrides);
  if (!config.ok()) return Fail(config.status(), err);

  absl::StatusOr<ExperimentResult> result = RunExperiment(config->experiment);
  if (!result.ok()) return Fail(result.status(), err);

  if (absl::Status s = EnsureDirectory(config->out_dir); !s.ok()) {
    return Fail(s, err);
  }
  const std::filesystem::path dir(config->out_dir);
  const std::pair<std::string, std::string> files[] = {
      {"metrics.json",
       ReportToJson(config->experiment, *result).dump(2) + "\n"},
      {"trials.jsonl", TrialsToJsonl(*result)},
      {"hist_all_scores.csv", HistogramCsv(*result, /*s_max=*/false)},
      {"hist_smax.csv", HistogramCsv(*result, /*s_max=*/true)},
  };
  ordered_json written = ordered_json::array();
  for (const auto& [name, contents] : files) {
    const std::string path = (dir / name).string();
    if (absl::Status s = WriteFileAtomically(path, contents); !s.ok()) {
      return Fail(s, err);
    }
    written.push_back(path);
  }
  const ExperimentReport& r = result->report;
  ordered_json summary = {
      {"schema_version", kSchemaVersion},
      {"files", written},
      {"detection_recall", r.detection.recall},
      {"detection_precision", r.detection.precision},
      {"attack_adjusted_accuracy", r.attack.adjusted_accuracy},
      {"attack_ks", r.attack.ks ? ordered_json(*r.attack.ks) : ordered_json()},
      {"r_at_k_plain", r.utility.r_at_k_plain},
      {"r_at_k_defended", r.utility.r_at_k_defended}};
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int RunBench(const BenchOptions& options, std::ostream& out,
             std::ostream& err) {
  if (options.corpus_path.empty() != options.embeddings_path.empty()) {
    return Fail(absl::InvalidArgumentError(
                    "bench needs both --corpus and --embeddings, or neither"),
                err);
  }
  absl::StatusOr<CorpusStore> store =
      options.corpus_path.empty()
          ? RandomStore(options.n, options.dim, options.seed)
          : LoadStore(options.corpus_path, options.embeddings_path);
  if (!store.ok()) return Fail(store.status(), err);
  if (options.queries == 0) {
    return Fail(absl::InvalidArgumentError("--queries must be > 0"), err);
  }
  const EmbeddingMatrix queries =
      BenchQueries(*store, options.queries, options.seed);
  DefenseConfig config;
  config.rho = options.rho;
  config.variant = options.variant;
  config.k = options.k;
  absl::StatusOr<BenchReport> report = MeasureDetectAndHide(
      *store, queries, config, options.threads, options.warmup);
  if (!report.ok()) return Fail(report.status(), err);
  out << BenchReportToJson(*report).dump(2) << '\n';
  return kExitOk;
}

int RunEmbedServeCheck(const ServeCheckOptions& options, std::ostream& out,
                       std::ostream& err) {
  if (options.endpoint.empty()) return Fail(MissingEndpoint(), err);
  const std::string probes[] = {"mirabel embedding service probe",
                                "second probe text"};
  const auto start = std::chrono::steady_clock::now();
  absl::StatusOr<EmbeddingMatrix> e = RemoteEmbed(
      probes,
      RemoteOptions(options.endpoint, options.timeout_ms, options.retries));
  if (!e.ok()) return Fail(e.status(), err);
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  ordered_json j = {{"schema_version", kSchemaVersion},
                    {"endpoint", options.endpoint},
                    {"ok", true},
                    {"dim", e->dim()},
                    {"vectors", e->count()},
                    {"latency_ms", ms}};
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace mirabel::cli
