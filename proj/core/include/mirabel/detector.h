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

#ifndef MIRABEL_DETECTOR_H_
#define MIRABEL_DETECTOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "mirabel/corpus.h"
#include "mirabel/index.h"

namespace mirabel {

// Smallest score set the detector accepts. Below this the extreme-value
// approximation is not meaningful and detection fails with
// kFailedPrecondition.
inline constexpr size_t kMinCorpus = 20;

// Summary of one query's score set: the maximum and the moments of the rest.
struct SimilarityProfile {
  size_t n = 0;
  double s_max = 0.0;
  size_t argmax_row = 0;
  std::string argmax_id;
  // Mean and population standard deviation of the scores with exactly one
  // occurrence of the maximum (the lowest-row one) removed.
  double mu_q = 0.0;
  double sigma_q = 0.0;
};

enum class ThresholdVariant {
  // Location mu_q + sigma_q * sqrt(2 ln n), the asymptotic form.
  kAlg1,
  // Location with the second-order correction
  // -(ln ln n + ln 4pi) / (2 sqrt(2 ln n)) applied to the scale factor.
  kExactEvt,
};

std::string_view VariantName(ThresholdVariant variant);
std::optional<ThresholdVariant> ParseVariant(std::string_view name);

struct GumbelThreshold {
  double rho = 0.0;
  ThresholdVariant variant = ThresholdVariant::kAlg1;
  double mu_n = 0.0;
  double beta_n = 0.0;
  double c = 0.0;
  double tau = 0.0;
};

struct DetectionOutcome {
  bool detected = false;
  // Present iff detected.
  std::optional<std::string> target_id;
  std::optional<size_t> target_row;
  SimilarityProfile profile;
  GumbelThreshold threshold;
};

// Profile of a raw score set (argmax_id left empty). Fails on fewer than
// `min_corpus` scores or on a non-finite score.
absl::StatusOr<SimilarityProfile> BuildProfile(std::span<const float> scores,
                                               size_t min_corpus = kMinCorpus);
absl::StatusOr<SimilarityProfile> BuildProfile(std::span<const double> scores,
                                               size_t min_corpus = kMinCorpus);

// Profile of a store scan, with the argmax resolved to its document id.
absl::StatusOr<SimilarityProfile> BuildProfile(const ScoreVector& scores,
                                               const CorpusStore& store,
                                               size_t min_corpus = kMinCorpus);

// Gumbel critical value -ln(-ln(1 - rho)); rho must lie in (0, 1).
absl::StatusOr<double> CriticalValue(double rho);

// tau = mu_n + c * beta_n with beta_n = sigma_q / sqrt(2 ln n). With
// sigma_q == 0 this collapses to tau = mu_q.
absl::StatusOr<GumbelThreshold> ComputeThreshold(
    const SimilarityProfile& profile, double rho,
    ThresholdVariant variant = ThresholdVariant::kAlg1,
    size_t min_corpus = kMinCorpus);

// Full decision from an existing scan: profile, threshold, and the strict
// comparison s_max > tau. On detection the argmax document is the target.
absl::StatusOr<DetectionOutcome> DetectFromScores(
    const CorpusStore& store, const ScoreVector& scores, double rho,
    ThresholdVariant variant = ThresholdVariant::kAlg1);

// Scans the store and then calls DetectFromScores.
absl::StatusOr<DetectionOutcome> Detect(
    const CorpusStore& store, std::span<const float> query, double rho,
    ThresholdVariant variant = ThresholdVariant::kAlg1);

// Decision on a raw score set without a store (target_id stays empty;
// target_row is set on detection).
absl::StatusOr<DetectionOutcome> DetectOnScores(
    std::span<const double> scores, double rho,
    ThresholdVariant variant = ThresholdVariant::kAlg1);

}  // namespace mirabel

#endif  // MIRABEL_DETECTOR_H_
