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

#ifndef MIRABEL_STATS_H_
#define MIRABEL_STATS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "mirabel/index.h"

namespace mirabel {

// D'Agostino-Pearson omnibus test of normality.
struct NormalityResult {
  double k2 = 0.0;
  double p_value = 1.0;
  size_t n = 0;
  // The two standardized components, k2 = z_skew^2 + z_kurtosis^2.
  double z_skew = 0.0;
  double z_kurtosis = 0.0;
};

inline constexpr size_t kMinNormalitySample = 20;

// Skewness z-score via the D'Agostino transform and kurtosis z-score via the
// Anscombe-Glynn transform; p-value is the chi-square(2) upper tail
// exp(-k2 / 2). Fails for n < 20, zero variance, or an undefined kurtosis
// transform.
absl::StatusOr<NormalityResult> DagostinoPearson(
    std::span<const double> sample);

// Mean p-value over many score sets. Sets whose test is undefined are
// dropped and counted.
struct PValueSummary {
  double mean_p = 0.0;
  size_t used = 0;
  size_t dropped = 0;
};
PValueSummary SummarizeNormality(std::span<const std::vector<double>> samples);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b| by a merged sweep
// over both sorted samples. Statistic only.
absl::StatusOr<double> KsTwoSample(std::span<const double> a,
                                   std::span<const double> b);

struct ConfusionCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t tn = 0;
  int64_t fn = 0;

  int64_t total() const { return tp + fp + tn + fn; }
  void Add(bool predicted, bool actual);
  bool operator==(const ConfusionCounts&) const = default;
};

// max(acc, 1 - acc) - 0.5.
double AdjustedAccuracy(double accuracy);
absl::StatusOr<double> AdjustedAttackAccuracy(const ConfusionCounts& counts);

struct MetricsReport {
  double accuracy = 0.0;
  double adjusted_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> ks;
  std::optional<double> r_at_k;
  std::optional<double> em;
};

// Accuracy, precision, recall, F1 (and the adjusted accuracy). Precision and
// recall are 0 when their denominators are 0; F1 is 0 when P + R is 0.
absl::StatusOr<MetricsReport> ClassificationMetrics(
    const ConfusionCounts& counts);

// Fraction of retrievals whose hits contain the paired gold id.
absl::StatusOr<double> RecallAtK(
    std::span<const std::pair<RetrievalResult, std::string>> results);

// Fraction of responses containing any gold string, compared
// case-insensitively after collapsing whitespace runs.
struct AnswerWithGold {
  std::string response;
  std::vector<std::string> gold;
};
absl::StatusOr<double> EmContainment(std::span<const AnswerWithGold> answers);

// Lowercases ASCII and collapses whitespace runs to one space (trimmed).
std::string NormalizeForMatch(std::string_view text);

// Sample mean and population standard deviation, f64, two passes.
std::pair<double, double> MeanAndStddev(std::span<const double> values);

}  // namespace mirabel

#endif  // MIRABEL_STATS_H_
