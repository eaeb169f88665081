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

#ifndef MIRABEL_DEFENSE_H_
#define MIRABEL_DEFENSE_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mirabel/corpus.h"
#include "mirabel/detector.h"
#include "mirabel/index.h"

namespace mirabel {

struct DefenseConfig {
  double rho = 0.05;
  ThresholdVariant variant = ThresholdVariant::kAlg1;
  size_t k = 3;
  // Off: detection still runs (and is reported) but nothing is hidden.
  bool enabled = true;
  // Re-run detection with the hidden document excluded and report whether a
  // second document would also fire. Diagnostic only; never hides more.
  bool diagnose_second_pass = false;

  absl::Status Validate() const;
};

struct DefendedRetrieval {
  RetrievalResult retrieval;
  DetectionOutcome detection;
  // Set iff the defense is enabled and detection fired.
  std::optional<std::string> hidden_id;
  std::optional<bool> second_pass_detected;
};

// Detect-and-hide over one scan: the same ScoreVector feeds the detector and
// the top-k selection. The store is never modified.
absl::StatusOr<DefendedRetrieval> DefendedRetrieveScores(
    const CorpusStore& store, const ScoreVector& scores,
    const DefenseConfig& config);

absl::StatusOr<DefendedRetrieval> DefendedRetrieve(const CorpusStore& store,
                                                   std::span<const float> query,
                                                   const DefenseConfig& config);

// Hiding step alone: top-k of `scores` with the detected target (if any)
// excluded. Usable for stores below the detector's minimum size when the
// outcome comes from elsewhere.
RetrievalResult HideAndRetrieve(const CorpusStore& store,
                                const ScoreVector& scores,
                                const DetectionOutcome& detection, size_t k,
                                bool enabled);

// Prompt template, versioned. The text lives in core/resources/prompts and is
// compiled in.
inline constexpr std::string_view kPromptTemplateVersion = "rag_prompt_v1";
std::string_view PromptSystemTemplate();
// Contains the placeholders {context} and {question}.
std::string_view PromptUserTemplate();
// Priming text for the generator's turn.
std::string_view PromptAssistantTemplate();

struct AssembledPrompt {
  std::string system_text;
  std::string user_text;
  std::string assistant_prefix;
  std::vector<std::string> context_ids;
  // Unformatted pieces kept for generators that do not parse text.
  std::vector<std::string> context_texts;
  std::string question;
};

// Fills the template with the retrieved texts in rank order, then the query.
// Fails with kNotFound when a hit id is not in the store.
absl::StatusOr<AssembledPrompt> AssemblePrompt(std::string_view query_text,
                                               const RetrievalResult& retrieval,
                                               const CorpusStore& store);

inline constexpr std::string_view kNoAnswer = "I don't know";

class Generator {
 public:
  virtual ~Generator() = default;
  // Must be safe to call concurrently.
  virtual std::string Generate(const AssembledPrompt& prompt) const = 0;
};

// Extractive stand-in for an LLM: the first sentence of the context sharing
// the most distinct tokens with the question (earlier rank wins ties), or
// kNoAnswer when no context shares any token.
class TemplateGenerator : public Generator {
 public:
  std::string Generate(const AssembledPrompt& prompt) const override;
};

std::string TemplateGenerate(const AssembledPrompt& prompt);

// First sentence of `text`: up to and including the first '.', '!' or '?'
// that ends the text or is followed by whitespace. Trimmed.
std::string FirstSentence(std::string_view text);

struct DefendedResponse {
  std::string response;
  AssembledPrompt prompt;
  RetrievalResult retrieval;
  DetectionOutcome detection;
  std::optional<std::string> hidden_id;
  std::optional<bool> second_pass_detected;
};

// End to end: embed the query, detect-and-hide, assemble, generate.
absl::StatusOr<DefendedResponse> Respond(const CorpusStore& store,
                                         const EmbeddingProvider& embedder,
                                         std::string_view query_text,
                                         const DefenseConfig& config,
                                         const Generator& generator);

}  // namespace mirabel

#endif  // MIRABEL_DEFENSE_H_
