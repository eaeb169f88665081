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
#include <numbers>
#include <random>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "mirabel/index.h"
#include "test_util.h"

namespace mirabel {
namespace {

using ::testing::HasSubstr;

// Two-pass mean and population std of all entries except index `skip`.
std::pair<double, double> MeanStdWithout(const std::vector<double>& v,
                                         size_t skip) {
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i != skip) sum += v[i];
  }
  const double m = static_cast<double>(v.size() - 1);
  const double mean = sum / m;
  double ss = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i != skip) ss += (v[i] - mean) * (v[i] - mean);
  }
  return {mean, std::sqrt(ss / m)};
}

// Threshold straight from the formulas, independent of the library.
double OracleTau(double mu, double sigma, double n, double rho, bool exact) {
  const double a = std::sqrt(2.0 * std::log(n));
  double loc = a;
  if (exact) {
    loc = a - (std::log(std::log(n)) + std::log(4.0 * std::numbers::pi)) /
                  (2.0 * a);
  }
  const double c = -std::log(-std::log(1.0 - rho));
  return mu + sigma * loc + c * sigma / a;
}

// Upper-tail inverse of the standard normal CDF by bisection on erfc.
double NormalUpperQuantile(double tail) {
  double lo = -10.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::numbers::sqrt2) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SimilarityProfile Profile(double mu, double sigma, size_t n) {
  SimilarityProfile p;
  p.n = n;
  p.mu_q = mu;
  p.sigma_q = sigma;
  p.s_max = mu;
  return p;
}

TEST(BuildProfileTest, ConstantRemainder) {
  const std::vector<double> s = {0.1, 0.1, 0.1, 0.9};
  auto p = BuildProfile(std::span<const double>(s), /*min_corpus=*/2);
  ASSERT_TRUE(p.ok()) << p.status();
  EXPECT_EQ(p->s_max, 0.9);
  EXPECT_EQ(p->argmax_row, 3u);
  EXPECT_NEAR(p->mu_q, 0.1, 1e-15);
  EXPECT_NEAR(p->sigma_q, 0.0, 1e-15);
}

TEST(BuildProfileTest, AllEqual) {
  const std::vector<double> s(20, 0.5);
  auto p = BuildProfile(std::span<const double>(s));
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p->s_max, 0.5);
  EXPECT_EQ(p->argmax_row, 0u);
  EXPECT_EQ(p->mu_q, 0.5);
  EXPECT_EQ(p->sigma_q, 0.0);
}

TEST(BuildProfileTest, PlantedOutlierMatchesTwoPassOracle) {
  std::vector<double> s = test::NormalSims(1000, 0.1, 11);
  s[417] = 0.9;
  auto p = BuildProfile(std::span<const double>(s));
  ASSERT_TRUE(p.ok());
  const auto [mean, sd] = MeanStdWithout(s, 417);
  EXPECT_EQ(p->argmax_row, 417u);
  EXPECT_EQ(p->s_max, 0.9);
  EXPECT_NEAR(p->mu_q, mean, 1e-13);
  EXPECT_NEAR(p->sigma_q, sd, 1e-13);
  EXPECT_NEAR(p->mu_q, 0.0, 0.02);
  EXPECT_NEAR(p->sigma_q, 0.1, 0.01);
}

TEST(BuildProfileTest, DuplicateMaximaRemoveOnlyTheFirst) {
  std::vector<double> s(30, 0.0);
  s[4] = 1.0;
  s[9] = 1.0;
  auto p = BuildProfile(std::span<const double>(s));
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p->argmax_row, 4u);
  const auto [mean, sd] = MeanStdWithout(s, 4);
  EXPECT_NEAR(p->mu_q, mean, 1e-15);
  EXPECT_NEAR(p->sigma_q, sd, 1e-15);
  EXPECT_GT(p->sigma_q, 0.0);
}

TEST(BuildProfileTest, LeaveOneOutExcludesTheMaximum) {
  // Planting an extreme value moves mu_q by at most the 1/(n-1) share of the
  // entry it replaced.
  std::vector<double> s = test::NormalSims(500, 0.05, 3);
  const size_t row = 100;
  std::vector<double> planted = s;
  planted[row] = 1e6;
  auto before = BuildProfile(std::span<const double>(s));
  auto after = BuildProfile(std::span<const double>(planted));
  ASSERT_TRUE(before.ok() && after.ok());
  EXPECT_EQ(after->argmax_row, row);
  EXPECT_EQ(after->s_max, 1e6);
  EXPECT_LE(std::abs(after->mu_q - before->mu_q),
            (std::abs(s[row]) + 0.2) / 499.0);
  EXPECT_LT(after->sigma_q, 0.1);
}

TEST(BuildProfileTest, Errors) {
  const std::vector<double> small(19, 0.1);
  auto p = BuildProfile(std::span<const double>(small));
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_THAT(p.status().message(), HasSubstr("min_corpus"));

  std::vector<double> bad(25, 0.1);
  bad[7] = std::nan("");
  auto q = BuildProfile(std::span<const double>(bad));
  ASSERT_FALSE(q.ok());
  EXPECT_EQ(q.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(q.status().message(), HasSubstr("row 7"));

  bad[7] = INFINITY;
  EXPECT_FALSE(BuildProfile(std::span<const double>(bad)).ok());
  bad[7] = -INFINITY;
  EXPECT_FALSE(BuildProfile(std::span<const double>(bad)).ok());
}

TEST(BuildProfileTest, FloatAndDoubleAgree) {
  const std::vector<double> d = test::NormalSims(333, 0.2, 8);
  std::vector<float> f(d.begin(), d.end());
  std::vector<double> widened(f.begin(), f.end());
  auto pf = BuildProfile(std::span<const float>(f));
  auto pd = BuildProfile(std::span<const double>(widened));
  ASSERT_TRUE(pf.ok() && pd.ok());
  EXPECT_EQ(pf->argmax_row, pd->argmax_row);
  EXPECT_EQ(pf->mu_q, pd->mu_q);
  EXPECT_EQ(pf->sigma_q, pd->sigma_q);
}

TEST(BuildProfileTest, InvariantsOnRandomSets) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    const size_t n = 20 + rng() % 500;
    const std::vector<double> s = test::NormalSims(n, 0.3, rng());
    auto p = BuildProfile(std::span<const double>(s));
    ASSERT_TRUE(p.ok());
    EXPECT_GE(p->s_max, p->mu_q);
    EXPECT_GE(p->sigma_q, 0.0);
    EXPECT_EQ(p->s_max, *std::max_element(s.begin(), s.end()));
    const auto [mean, sd] = MeanStdWithout(s, p->argmax_row);
    EXPECT_NEAR(p->mu_q, mean, 1e-12);
    EXPECT_NEAR(p->sigma_q, sd, 1e-12);
  }
}

TEST(CriticalValueTest, ClosedForm) {
  // Frozen from 40-digit evaluation of -ln(-ln(1 - rho)).
  EXPECT_NEAR(*CriticalValue(0.5), 0.3665129205816643270, 1e-15);
  EXPECT_NEAR(*CriticalValue(0.05), 2.970195249042164559, 1e-14);
  EXPECT_NEAR(*CriticalValue(0.01), 4.600149226776579998, 1e-14);
  EXPECT_EQ(*CriticalValue(1.0 - std::exp(-1.0)), 0.0);
}

TEST(CriticalValueTest, RejectsOutOfRange) {
  for (double rho : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    EXPECT_FALSE(CriticalValue(rho).ok()) << rho;
  }
}

TEST(ComputeThresholdTest, Alg1Example) {
  auto t =
      ComputeThreshold(Profile(0.0, 1.0, 1000), 0.05, ThresholdVariant::kAlg1);
  ASSERT_TRUE(t.ok());
  EXPECT_NEAR(t->mu_n, 3.7169, 1e-4);
  EXPECT_NEAR(t->beta_n, 0.2690, 1e-4);
  EXPECT_NEAR(t->tau, 4.5160, 1e-4);
  EXPECT_EQ(t->tau, t->mu_n + t->c * t->beta_n);
  EXPECT_EQ(t->c, *CriticalValue(0.05));
  EXPECT_NEAR(t->tau, OracleTau(0, 1, 1000, 0.05, false), 1e-12);
}

TEST(ComputeThresholdTest, ExactEvtExampleAndQuantileOracle) {
  auto t = ComputeThreshold(Profile(0.0, 1.0, 1000), 0.05,
                            ThresholdVariant::kExactEvt);
  ASSERT_TRUE(t.ok());
  EXPECT_NEAR(t->mu_n, 3.1164, 1e-4);
  EXPECT_NEAR(t->tau, 3.9155, 1e-4);
  EXPECT_NEAR(t->tau, OracleTau(0, 1, 1000, 0.05, true), 1e-12);
  // 95th percentile of the maximum of 1000 standard normals.
  const double q = NormalUpperQuantile(-std::expm1(std::log(0.95) / 1000.0));
  EXPECT_NEAR(q, 3.8843975012078267, 1e-9);
  EXPECT_NEAR(t->tau, q, 0.15);
}

TEST(ComputeThresholdTest, DegenerateScale) {
  for (size_t n : {20u, 1000u, 100000u}) {
    for (auto v : {ThresholdVariant::kAlg1, ThresholdVariant::kExactEvt}) {
      auto t = ComputeThreshold(Profile(0.5, 0.0, n), 0.05, v);
      ASSERT_TRUE(t.ok());
      EXPECT_EQ(t->tau, 0.5);
      EXPECT_EQ(t->mu_n, 0.5);
      EXPECT_EQ(t->beta_n, 0.0);
    }
  }
}

TEST(ComputeThresholdTest, MonotoneInRhoAndVariantOrdering) {
  for (size_t n : {20u, 100u, 1000u, 10000u, 1000000u}) {
    double prev_alg1 = INFINITY, prev_exact = INFINITY;
    for (double rho = 0.001; rho < 0.99; rho += 0.013) {
      auto a =
          ComputeThreshold(Profile(0.1, 0.03, n), rho, ThresholdVariant::kAlg1);
      auto e = ComputeThreshold(Profile(0.1, 0.03, n), rho,
                                ThresholdVariant::kExactEvt);
      ASSERT_TRUE(a.ok() && e.ok());
      EXPECT_LT(a->tau, prev_alg1);
      EXPECT_LT(e->tau, prev_exact);
      EXPECT_GE(a->tau, e->tau);
      EXPECT_GT(a->beta_n, 0.0);
      prev_alg1 = a->tau;
      prev_exact = e->tau;
    }
  }
}

TEST(ComputeThresholdTest, RejectsSmallN) {
  EXPECT_FALSE(ComputeThreshold(Profile(0, 1, 19), 0.05).ok());
  EXPECT_FALSE(ComputeThreshold(Profile(0, 1, 100), 0.0).ok());
}

TEST(VariantTest, NamesRoundTrip) {
  for (auto v : {ThresholdVariant::kAlg1, ThresholdVariant::kExactEvt}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_FALSE(ParseVariant("other").has_value());
}

TEST(DetectTest, IdenticalScoresNeverDetected) {
  const CorpusStore store =
      test::StoreWithSimilarities(std::vector<double>(20, 0.3));
  auto d = Detect(store, test::UnitQuery(21), 0.05);
  ASSERT_TRUE(d.ok()) << d.status();
  EXPECT_FALSE(d->detected);
  EXPECT_FALSE(d->target_id.has_value());
  EXPECT_EQ(d->profile.s_max, d->threshold.tau);
}

class PlantedFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    sims_ = test::NormalSims(999, 0.1, 1234);
    sims_.push_back(0.9);
    store_ = test::StoreWithSimilarities(sims_);
  }
  std::vector<double> sims_;
  CorpusStore store_;
};

TEST_F(PlantedFixture, DetectsPlantedDocument) {
  auto d = Detect(store_, test::UnitQuery(1001), 0.05);
  ASSERT_TRUE(d.ok());
  EXPECT_TRUE(d->detected);
  EXPECT_EQ(d->target_id, "d999");
  EXPECT_EQ(d->target_row, 999u);
  EXPECT_NEAR(d->threshold.tau, 0.45, 0.02);
  // Formula oracle on the recovered profile.
  EXPECT_NEAR(d->threshold.tau,
              OracleTau(d->profile.mu_q, d->profile.sigma_q, 1000, 0.05, false),
              1e-12);
}

TEST_F(PlantedFixture, RemovingPlantedDocumentStopsDetection) {
  std::vector<double> without(sims_.begin(), sims_.end() - 1);
  const CorpusStore store = test::StoreWithSimilarities(without);
  auto d = Detect(store, test::UnitQuery(1000), 0.05);
  ASSERT_TRUE(d.ok());
  EXPECT_FALSE(d->detected);
  EXPECT_FALSE(d->target_id.has_value());
}

TEST_F(PlantedFixture, HidingLeavesSecondLargestAsMaximum) {
  auto with = ScoreAll(store_, test::UnitQuery(1001));
  ASSERT_TRUE(with.ok());
  std::vector<float> sorted = with->scores;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  std::vector<double> without(sims_.begin(), sims_.end() - 1);
  const CorpusStore store = test::StoreWithSimilarities(without);
  auto d = Detect(store, test::UnitQuery(1000), 0.05);
  ASSERT_TRUE(d.ok());
  EXPECT_EQ(d->profile.s_max, static_cast<double>(sorted[1]));
}

TEST(DetectTest, AffineMapMovesTauAndKeepsDecision) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s = test::NormalSims(300, 0.1, rng());
    if (t % 2 == 0) s[rng() % s.size()] = 0.4 + 0.1 * (t % 5);
    const double a = 0.5 + (t % 7), b = -0.3 + 0.1 * (t % 4);
    std::vector<double> mapped(s.size());
    for (size_t i = 0; i < s.size(); ++i) mapped[i] = a * s[i] + b;
    for (auto v : {ThresholdVariant::kAlg1, ThresholdVariant::kExactEvt}) {
      auto d1 = DetectOnScores(s, 0.05, v);
      auto d2 = DetectOnScores(mapped, 0.05, v);
      ASSERT_TRUE(d1.ok() && d2.ok());
      EXPECT_NEAR(d2->threshold.tau, a * d1->threshold.tau + b, 1e-9);
      // Decisions agree unless s_max sits within rounding of tau.
      if (std::abs(d1->profile.s_max - d1->threshold.tau) > 1e-9) {
        EXPECT_EQ(d1->detected, d2->detected);
      }
    }
  }
}

TEST(DetectTest, ExactEvtCalibrationOnNullScores) {
  // Seeded N(0,1) score sets without a planted member; the false detection
  // rate stays within 2 rho. 2000 sets here, 10^4 in the acceptance run.
  std::mt19937_64 rng(31337);
  std::normal_distribution<double> normal;
  std::vector<double> s(1000);
  int fired = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    for (double& v : s) v = normal(rng);
    auto d = DetectOnScores(s, 0.05, ThresholdVariant::kExactEvt);
    ASSERT_TRUE(d.ok());
    fired += d->detected;
  }
  EXPECT_LE(static_cast<double>(fired) / trials, 0.10);
}

TEST(DetectTest, RejectsSmallStoreAndMismatchedScores) {
  const CorpusStore store =
      test::StoreWithSimilarities(std::vector<double>(10, 0.1));
  auto d = Detect(store, test::UnitQuery(11), 0.05);
  ASSERT_FALSE(d.ok());
  EXPECT_EQ(d.status().code(), absl::StatusCode::kFailedPrecondition);

  const CorpusStore big =
      test::StoreWithSimilarities(std::vector<double>(30, 0.1));
  ScoreVector wrong;
  wrong.scores.assign(29, 0.0f);
  EXPECT_FALSE(DetectFromScores(big, wrong, 0.05).ok());
}

}  // namespace
}  // namespace mirabel
