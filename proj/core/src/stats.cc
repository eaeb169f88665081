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

#include "mirabel/stats.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <unordered_set>

#include "absl/strings/str_cat.h"

namespace mirabel {

std::pair<double, double> MeanAndStddev(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

absl::StatusOr<NormalityResult> DagostinoPearson(
    std::span<const double> sample) {
  const size_t count = sample.size();
  if (count < kMinNormalitySample) {
    return absl::InvalidArgumentError(absl::StrCat(
        "normality test needs n >= ", kMinNormalitySample, ", got ", count));
  }
  const double n = static_cast<double>(count);
  const double mean = MeanAndStddev(sample).first;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : sample) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0) || !std::isfinite(m2)) {
    return absl::InvalidArgumentError("sample has zero variance");
  }

  // Skewness: D'Agostino's transform of the biased sample skewness g1.
  const double g1 = m3 / std::pow(m2, 1.5);
  const double y = g1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2_skew = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) *
                            (n + 3.0) /
                            ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2_skew - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  const double z_skew = delta * std::asinh(y / alpha);

  // Kurtosis: Anscombe-Glynn transform of the Pearson kurtosis b2.
  const double b2 = m4 / (m2 * m2);
  const double expected = 3.0 * (n - 1.0) / (n + 1.0);
  const double var_b2 = 24.0 * n * (n - 2.0) * (n - 3.0) /
                        ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (b2 - expected) / std::sqrt(var_b2);
  const double sqrt_beta1 =
      6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
      std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 *
                             (2.0 / sqrt_beta1 +
                              std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  if (denom == 0.0) {
    return absl::InvalidArgumentError("kurtosis transform is undefined");
  }
  const double term2 =
      std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  const double z_kurt = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));

  NormalityResult r;
  r.n = count;
  r.z_skew = z_skew;
  r.z_kurtosis = z_kurt;
  r.k2 = z_skew * z_skew + z_kurt * z_kurt;
  if (!std::isfinite(r.k2)) {
    return absl::InvalidArgumentError("normality statistic is not finite");
  }
  r.p_value = std::exp(-r.k2 / 2.0);
  return r;
}

PValueSummary SummarizeNormality(std::span<const std::vector<double>> samples) {
  PValueSummary s;
  double sum = 0.0;
  for (const auto& sample : samples) {
    auto r = DagostinoPearson(sample);
    if (!r.ok()) {
      ++s.dropped;
      continue;
    }
    sum += r->p_value;
    ++s.used;
  }
  if (s.used > 0) s.mean_p = sum / static_cast<double>(s.used);
  return s;
}

absl::StatusOr<double> KsTwoSample(std::span<const double> a,
                                   std::span<const double> b) {
  if (a.empty() || b.empty()) {
    return absl::InvalidArgumentError(
        "KS statistic needs two non-empty samples");
  }
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  // Gaps are tracked as integers |i * nb - j * na| and divided once.
  const uint64_t na = sa.size();
  const uint64_t nb = sb.size();
  size_t i = 0, j = 0;
  uint64_t gap = 0;
  while (i < sa.size() && j < sb.size()) {
    // Step past every copy of the next breakpoint on both sides before
    // comparing, so ties never produce a spurious gap.
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    const uint64_t lhs = i * nb;
    const uint64_t rhs = j * na;
    gap = std::max(gap, lhs > rhs ? lhs - rhs : rhs - lhs);
  }
  return static_cast<double>(gap) / static_cast<double>(na * nb);
}

void ConfusionCounts::Add(bool predicted, bool actual) {
  if (predicted && actual) ++tp;
  if (predicted && !actual) ++fp;
  if (!predicted && !actual) ++tn;
  if (!predicted && actual) ++fn;
}

double AdjustedAccuracy(double accuracy) {
  return std::max(accuracy, 1.0 - accuracy) - 0.5;
}

absl::StatusOr<double> AdjustedAttackAccuracy(const ConfusionCounts& counts) {
  if (counts.total() <= 0) {
    return absl::InvalidArgumentError("confusion counts are empty");
  }
  const double acc = static_cast<double>(counts.tp + counts.tn) /
                     static_cast<double>(counts.total());
  return AdjustedAccuracy(acc);
}

absl::StatusOr<MetricsReport> ClassificationMetrics(
    const ConfusionCounts& counts) {
  if (counts.tp < 0 || counts.fp < 0 || counts.tn < 0 || counts.fn < 0) {
    return absl::InvalidArgumentError("negative confusion count");
  }
  if (counts.total() == 0) {
    return absl::InvalidArgumentError("confusion counts are empty");
  }
  MetricsReport m;
  const auto ratio = [](int64_t num, int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(counts.tp + counts.tn, counts.total());
  m.adjusted_accuracy = AdjustedAccuracy(m.accuracy);
  m.precision = ratio(counts.tp, counts.tp + counts.fp);
  m.recall = ratio(counts.tp, counts.tp + counts.fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

absl::StatusOr<double> RecallAtK(
    std::span<const std::pair<RetrievalResult, std::string>> results) {
  if (results.empty()) return absl::InvalidArgumentError("no retrievals");
  size_t hit = 0;
  for (const auto& [retrieval, gold] : results) {
    if (retrieval.Contains(gold)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(results.size());
}

std::string NormalizeForMatch(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

absl::StatusOr<double> EmContainment(std::span<const AnswerWithGold> answers) {
  if (answers.empty()) return absl::InvalidArgumentError("no answers");
  size_t matched = 0;
  for (const auto& a : answers) {
    const std::string response = NormalizeForMatch(a.response);
    for (const auto& g : a.gold) {
      const std::string gold = NormalizeForMatch(g);
      if (!gold.empty() && response.find(gold) != std::string::npos) {
        ++matched;
        break;
      }
    }
  }
  return static_cast<double>(matched) / static_cast<double>(answers.size());
}

}  // namespace mirabel
