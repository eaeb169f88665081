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

#include "mirabel/defense.h"

#include <algorithm>
#include <unordered_set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_replace.h"

namespace mirabel {
namespace internal {
extern const std::string_view kPromptSystem;
extern const std::string_view kPromptUser;
extern const std::string_view kPromptAssistant;
}  // namespace internal

absl::Status DefenseConfig::Validate() const {
  if (k < 1) return absl::InvalidArgumentError("k must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("rho must lie in (0, 1), got ", rho));
  }
  return absl::OkStatus();
}

RetrievalResult HideAndRetrieve(const CorpusStore& store,
                                const ScoreVector& scores,
                                const DetectionOutcome& detection, size_t k,
                                bool enabled) {
  if (enabled && detection.detected && detection.target_row.has_value()) {
    const size_t hidden[] = {*detection.target_row};
    return TopKRows(store, scores, k, hidden);
  }
  return TopKRows(store, scores, k);
}

absl::StatusOr<DefendedRetrieval> DefendedRetrieveScores(
    const CorpusStore& store, const ScoreVector& scores,
    const DefenseConfig& config) {
  if (auto s = config.Validate(); !s.ok()) return s;
  auto detection = DetectFromScores(store, scores, config.rho, config.variant);
  if (!detection.ok()) return detection.status();

  DefendedRetrieval out;
  out.retrieval =
      HideAndRetrieve(store, scores, *detection, config.k, config.enabled);
  if (config.enabled && detection->detected) {
    out.hidden_id = detection->target_id;
    if (config.diagnose_second_pass) {
      std::vector<double> rest;
      rest.reserve(scores.size() - 1);
      for (size_t r = 0; r < scores.size(); ++r) {
        if (r != *detection->target_row) rest.push_back(scores.scores[r]);
      }
      auto second = DetectOnScores(rest, config.rho, config.variant);
      if (second.ok()) out.second_pass_detected = second->detected;
    }
  }
  out.detection = *std::move(detection);
  return out;
}

absl::StatusOr<DefendedRetrieval> DefendedRetrieve(
    const CorpusStore& store, std::span<const float> query,
    const DefenseConfig& config) {
  if (store.size() < kMinCorpus) {
    return absl::FailedPreconditionError(
        absl::StrCat("corpus too small for detection: n = ", store.size(),
                     " < min_corpus = ", kMinCorpus));
  }
  auto scores = ScoreAll(store, query);
  if (!scores.ok()) return scores.status();
  return DefendedRetrieveScores(store, *scores, config);
}

std::string_view PromptSystemTemplate() { return internal::kPromptSystem; }
std::string_view PromptUserTemplate() { return internal::kPromptUser; }
std::string_view PromptAssistantTemplate() {
  return internal::kPromptAssistant;
}

absl::StatusOr<AssembledPrompt> AssemblePrompt(std::string_view query_text,
                                               const RetrievalResult& retrieval,
                                               const CorpusStore& store) {
  AssembledPrompt p;
  for (const auto& hit : retrieval.hits) {
    auto row = store.RowOf(hit.id);
    if (!row) {
      return absl::NotFoundError(
          absl::StrCat("retrieved id '", hit.id, "' is not in the store"));
    }
    p.context_ids.push_back(hit.id);
    p.context_texts.push_back(store.document(*row).text);
  }
  p.question = std::string(query_text);
  p.system_text = std::string(PromptSystemTemplate());
  const std::string contexts = absl::StrJoin(p.context_texts, "\n\n");
  p.user_text = absl::StrReplaceAll(
      std::string(PromptUserTemplate()),
      {{"{context}", contexts}, {"{question}", p.question}});
  p.assistant_prefix = std::string(PromptAssistantTemplate());
  return p;
}

std::string FirstSentence(std::string_view text) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  };
  size_t begin = 0;
  while (begin < text.size() && is_space(text[begin])) ++begin;
  size_t end = text.size();
  for (size_t i = begin; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || is_space(text[i + 1]))) {
      end = i + 1;
      break;
    }
  }
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string TemplateGenerate(const AssembledPrompt& prompt) {
  const auto question_tokens = Tokenize(prompt.question);
  const std::unordered_set<std::string> wanted(question_tokens.begin(),
                                               question_tokens.end());
  size_t best = 0;
  size_t best_overlap = 0;
  for (size_t i = 0; i < prompt.context_texts.size(); ++i) {
    std::unordered_set<std::string> seen;
    for (auto& t : Tokenize(prompt.context_texts[i])) {
      if (wanted.count(t)) seen.insert(std::move(t));
    }
    if (seen.size() > best_overlap) {
      best_overlap = seen.size();
      best = i;
    }
  }
  if (best_overlap == 0) return std::string(kNoAnswer);
  return FirstSentence(prompt.context_texts[best]);
}

std::string TemplateGenerator::Generate(const AssembledPrompt& prompt) const {
  return TemplateGenerate(prompt);
}

absl::StatusOr<DefendedResponse> Respond(const CorpusStore& store,
                                         const EmbeddingProvider& embedder,
                                         std::string_view query_text,
                                         const DefenseConfig& config,
                                         const Generator& generator) {
  const std::string texts[] = {std::string(query_text)};
  auto embedded = embedder.Embed(texts);
  if (!embedded.ok()) return embedded.status();
  auto defended = DefendedRetrieve(store, embedded->row(0), config);
  if (!defended.ok()) return defended.status();
  auto prompt = AssemblePrompt(query_text, defended->retrieval, store);
  if (!prompt.ok()) return prompt.status();

  DefendedResponse out;
  out.response = generator.Generate(*prompt);
  out.prompt = *std::move(prompt);
  out.retrieval = std::move(defended->retrieval);
  out.detection = std::move(defended->detection);
  out.hidden_id = std::move(defended->hidden_id);
  out.second_pass_detected = defended->second_pass_detected;
  return out;
}

}  // namespace mirabel
