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

#include "mirabel/detector.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "absl/strings/str_cat.h"

namespace mirabel {
namespace {

template <typename T>
absl::StatusOr<SimilarityProfile> ProfileOf(std::span<const T> scores,
                                            size_t min_corpus) {
  const size_t n = scores.size();
  if (n < min_corpus || n < 2) {
    return absl::FailedPreconditionError(
        absl::StrCat("corpus too small for detection: n = ", n,
                     " < min_corpus = ", std::max<size_t>(min_corpus, 2)));
  }
  // One sweep in kLanes fixed lanes: argmax (first occurrence) plus sums of
  // d and d^2 with d = x - shift. Lanes are combined in a fixed order, so the
  // result does not depend on anything but the input.
  constexpr size_t kLanes = 8;
  const double shift = static_cast<double>(scores[0]);
  double best[kLanes], sum[kLanes] = {}, sq[kLanes] = {};
  size_t where[kLanes] = {};
  for (size_t j = 0; j < kLanes; ++j) {
    best[j] = -std::numeric_limits<double>::infinity();
  }
  size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (size_t j = 0; j < kLanes; ++j) {
      const double x = static_cast<double>(scores[i + j]);
      const double d = x - shift;
      sum[j] += d;
      sq[j] += d * d;
      if (x > best[j]) {
        best[j] = x;
        where[j] = i + j;
      }
    }
  }
  for (size_t j = 0; i < n; ++i, ++j) {
    const double x = static_cast<double>(scores[i]);
    const double d = x - shift;
    sum[j] += d;
    sq[j] += d * d;
    if (x > best[j]) {
      best[j] = x;
      where[j] = i;
    }
  }
  double total = 0.0, total_sq = 0.0;
  size_t argmax = n;
  double top = -std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < kLanes; ++j) {
    total += sum[j];
    total_sq += sq[j];
    if (where[j] < n && best[j] >= top &&
        (best[j] > top || where[j] < argmax)) {
      top = best[j];
      argmax = where[j];
    }
  }
  if (!std::isfinite(total_sq) || argmax == n) {
    for (size_t r = 0; r < n; ++r) {
      if (!std::isfinite(static_cast<double>(scores[r]))) {
        return absl::InvalidArgumentError(
            absl::StrCat("non-finite score at row ", r));
      }
    }
  }
  // Remove the argmax entry, then center.
  const double m = static_cast<double>(n - 1);
  const double d_top = top - shift;
  const double rest_sum = total - d_top;
  const double mean_d = rest_sum / m;
  const double mean = shift + mean_d;
  const double ss = (total_sq - d_top * d_top) - rest_sum * mean_d;
  SimilarityProfile p;
  p.n = n;
  p.s_max = static_cast<double>(scores[argmax]);
  p.argmax_row = argmax;
  p.mu_q = mean;
  p.sigma_q = std::sqrt(std::max(ss, 0.0) / m);
  return p;
}

}  // namespace

std::string_view VariantName(ThresholdVariant variant) {
  switch (variant) {
    case ThresholdVariant::kAlg1:
      return "alg1";
    case ThresholdVariant::kExactEvt:
      return "exact";
  }
  return "unknown";
}

std::optional<ThresholdVariant> ParseVariant(std::string_view name) {
  if (name == "alg1") return ThresholdVariant::kAlg1;
  if (name == "exact") return ThresholdVariant::kExactEvt;
  return std::nullopt;
}

absl::StatusOr<SimilarityProfile> BuildProfile(std::span<const float> scores,
                                               size_t min_corpus) {
  return ProfileOf(scores, min_corpus);
}

absl::StatusOr<SimilarityProfile> BuildProfile(std::span<const double> scores,
                                               size_t min_corpus) {
  return ProfileOf(scores, min_corpus);
}

absl::StatusOr<SimilarityProfile> BuildProfile(const ScoreVector& scores,
                                               const CorpusStore& store,
                                               size_t min_corpus) {
  if (scores.size() != store.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("score vector has ", scores.size(), " entries, store has ",
                     store.size()));
  }
  auto p = ProfileOf(std::span<const float>(scores.scores), min_corpus);
  if (!p.ok()) return p;
  p->argmax_id = store.document(p->argmax_row).id;
  return p;
}

absl::StatusOr<double> CriticalValue(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("significance rho must lie in (0, 1), got ", rho));
  }
  return -std::log(-std::log1p(-rho));
}

absl::StatusOr<GumbelThreshold> ComputeThreshold(
    const SimilarityProfile& profile, double rho, ThresholdVariant variant,
    size_t min_corpus) {
  if (profile.n < min_corpus || profile.n < 2) {
    return absl::FailedPreconditionError(
        absl::StrCat("corpus too small for detection: n = ", profile.n,
                     " < min_corpus = ", std::max<size_t>(min_corpus, 2)));
  }
  if (!std::isfinite(profile.sigma_q) || !std::isfinite(profile.mu_q)) {
    return absl::InvalidArgumentError("profile moments are not finite");
  }
  auto c = CriticalValue(rho);
  if (!c.ok()) return c.status();

  const double log_n = std::log(static_cast<double>(profile.n));
  const double a_n = std::sqrt(2.0 * log_n);
  double location = a_n;
  if (variant == ThresholdVariant::kExactEvt) {
    location -=
        (std::log(log_n) + std::log(4.0 * std::numbers::pi)) / (2.0 * a_n);
  }
  GumbelThreshold t;
  t.rho = rho;
  t.variant = variant;
  t.c = *c;
  t.mu_n = profile.mu_q + profile.sigma_q * location;
  t.beta_n = profile.sigma_q / a_n;
  t.tau = t.mu_n + t.c * t.beta_n;
  return t;
}

namespace {

absl::StatusOr<DetectionOutcome> Decide(SimilarityProfile profile, double rho,
                                        ThresholdVariant variant) {
  auto threshold = ComputeThreshold(profile, rho, variant);
  if (!threshold.ok()) return threshold.status();
  DetectionOutcome out;
  out.detected = profile.s_max > threshold->tau;
  if (out.detected) {
    out.target_row = profile.argmax_row;
    if (!profile.argmax_id.empty()) out.target_id = profile.argmax_id;
  }
  out.profile = std::move(profile);
  out.threshold = *threshold;
  return out;
}

}  // namespace

absl::StatusOr<DetectionOutcome> DetectFromScores(const CorpusStore& store,
                                                  const ScoreVector& scores,
                                                  double rho,
                                                  ThresholdVariant variant) {
  auto profile = BuildProfile(scores, store);
  if (!profile.ok()) return profile.status();
  return Decide(*std::move(profile), rho, variant);
}

absl::StatusOr<DetectionOutcome> Detect(const CorpusStore& store,
                                        std::span<const float> query,
                                        double rho, ThresholdVariant variant) {
  if (store.size() < kMinCorpus) {
    return absl::FailedPreconditionError(
        absl::StrCat("corpus too small for detection: n = ", store.size(),
                     " < min_corpus = ", kMinCorpus));
  }
  auto scores = ScoreAll(store, query);
  if (!scores.ok()) return scores.status();
  return DetectFromScores(store, *scores, rho, variant);
}

absl::StatusOr<DetectionOutcome> DetectOnScores(std::span<const double> scores,
                                                double rho,
                                                ThresholdVariant variant) {
  auto profile = BuildProfile(scores);
  if (!profile.ok()) return profile.status();
  return Decide(*std::move(profile), rho, variant);
}

}  // namespace mirabel
