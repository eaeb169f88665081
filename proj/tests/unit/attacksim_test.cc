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

#include "mirabel/attacksim.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "mirabel/detector.h"
#include "mirabel/index.h"
#include "mirabel/report_io.h"
#include "test_util.h"

namespace mirabel {
namespace {

SyntheticSpec SmallSpec(uint64_t seed = 1) {
  SyntheticSpec s;
  s.topics = 4;
  s.docs_per_topic = 50;
  s.dim = 512;
  s.benign_queries = 60;
  s.seed = seed;
  return s;
}

TEST(GenerateCorpusTest, SplitArithmetic) {
  SyntheticSpec s;
  s.topics = 5;
  s.docs_per_topic = 40;
  s.member_fraction = 0.7;
  s.benign_queries = 10;
  auto c = GenerateCorpus(s);
  ASSERT_TRUE(c.ok()) << c.status();
  EXPECT_EQ(c->members.size(), 140u);
  EXPECT_EQ(c->non_members.size(), 60u);
  EXPECT_EQ(c->benign.size(), 10u);
  EXPECT_EQ(c->members.dim(), 1024u);
}

TEST(GenerateCorpusTest, Deterministic) {
  auto a = GenerateCorpus(SmallSpec(3));
  auto b = GenerateCorpus(SmallSpec(3));
  auto other = GenerateCorpus(SmallSpec(4));
  ASSERT_TRUE(a.ok() && b.ok() && other.ok());
  EXPECT_EQ(a->members.documents(), b->members.documents());
  EXPECT_EQ(a->members.embeddings(), b->members.embeddings());
  EXPECT_EQ(a->non_members, b->non_members);
  ASSERT_EQ(a->benign.size(), b->benign.size());
  for (size_t i = 0; i < a->benign.size(); ++i) {
    EXPECT_EQ(a->benign[i].text, b->benign[i].text);
    EXPECT_EQ(a->benign[i].gold_id, b->benign[i].gold_id);
  }
  EXPECT_NE(a->members.documents(), other->members.documents());
}

TEST(GenerateCorpusTest, SplitIsDisjointAndDocumentsWellFormed) {
  const SyntheticSpec spec = SmallSpec();
  auto c = GenerateCorpus(spec);
  ASSERT_TRUE(c.ok());
  std::set<std::string> ids;
  for (const auto& d : c->members.documents()) ids.insert(d.id);
  for (const auto& d : c->non_members) {
    EXPECT_FALSE(c->members.Contains(d.id));
    ids.insert(d.id);
  }
  EXPECT_EQ(ids.size(), spec.topics * spec.docs_per_topic);
  for (const auto& d : c->members.documents()) {
    EXPECT_EQ(Tokenize(d.text).size(), spec.doc_token_len);
    EXPECT_TRUE(d.metadata.count("topic"));
  }
  EXPECT_TRUE(c->members.embeddings().normalized());
}

TEST(GenerateCorpusTest, BenignQueriesAreNotCopies) {
  auto c = GenerateCorpus(SmallSpec());
  ASSERT_TRUE(c.ok());
  for (const auto& q : c->benign) {
    ASSERT_TRUE(c->members.Contains(q.gold_id));
    const Document& gold = c->members.document(*c->members.RowOf(q.gold_id));
    EXPECT_EQ(q.gold_answer, FirstSentence(gold.text));
    EXPECT_EQ(Tokenize(q.text).size(), SmallSpec().benign_query_len);
    EXPECT_EQ(gold.text.find(q.text), std::string::npos);
  }
}

TEST(GenerateCorpusTest, IntraTopicMoreSimilarThanInterTopic) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = GenerateCorpus(SmallSpec(seed));
    ASSERT_TRUE(c.ok());
    const CorpusStore& s = c->members;
    double intra = 0, inter = 0;
    size_t n_intra = 0, n_inter = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      for (size_t j = i + 1; j < s.size(); ++j) {
        const double cos = Cosine(s.embeddings().row(i), s.embeddings().row(j));
        if (s.document(i).metadata.at("topic") ==
            s.document(j).metadata.at("topic")) {
          intra += cos;
          ++n_intra;
        } else {
          inter += cos;
          ++n_inter;
        }
      }
    }
    EXPECT_GT(intra / n_intra, inter / n_inter + 0.01) << seed;
  }
}

TEST(GenerateCorpusTest, SpecValidation) {
  SyntheticSpec s = SmallSpec();
  s.member_fraction = 1.0;
  EXPECT_FALSE(GenerateCorpus(s).ok());
  s = SmallSpec();
  s.dim = 1000;
  EXPECT_FALSE(GenerateCorpus(s).ok());
  s = SmallSpec();
  s.topics = 0;
  EXPECT_FALSE(GenerateCorpus(s).ok());
  s = SmallSpec();
  s.doc_token_len = 9;
  EXPECT_FALSE(GenerateCorpus(s).ok());
}

Document TokenDoc(size_t len) {
  std::vector<std::string> tokens;
  for (size_t i = 0; i < len; ++i) tokens.push_back(absl::StrCat("tok", i));
  return {"doc", absl::StrJoin(tokens, " "), {}};
}

bool IsSubsequence(const std::vector<std::string>& sub,
                   const std::vector<std::string>& full) {
  size_t j = 0;
  for (const auto& t : full) {
    if (j < sub.size() && sub[j] == t) ++j;
  }
  return j == sub.size();
}

TEST(MakeAttackQueryTest, HalfDocIsPrefix) {
  auto q = MakeAttackQuery(TokenDoc(100), AttackStyle::kHalfDoc, 1);
  ASSERT_TRUE(q.ok());
  const auto tokens = Tokenize(*q);
  ASSERT_EQ(tokens.size(), 50u);
  EXPECT_EQ(tokens.front(), "tok0");
  EXPECT_EQ(tokens.back(), "tok49");
  auto odd = MakeAttackQuery(TokenDoc(101), AttackStyle::kHalfDoc, 1);
  EXPECT_EQ(Tokenize(*odd).size(), 51u);
}

TEST(MakeAttackQueryTest, MaskedDeletesTenTokens) {
  const Document doc = TokenDoc(100);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto q = MakeAttackQuery(doc, AttackStyle::kMasked, seed);
    ASSERT_TRUE(q.ok());
    const auto tokens = Tokenize(*q);
    EXPECT_EQ(tokens.size(), 90u);
    EXPECT_TRUE(IsSubsequence(tokens, Tokenize(doc.text)));
  }
  AttackQueryOptions o;
  o.mask_count = 20;
  EXPECT_EQ(Tokenize(*MakeAttackQuery(doc, AttackStyle::kMasked, 1, o)).size(),
            80u);
}

TEST(MakeAttackQueryTest, ParaphraseKeepsFortyPercentInOrder) {
  const Document doc = TokenDoc(200);
  auto a = MakeAttackQuery(doc, AttackStyle::kParaphrase, 5);
  auto b = MakeAttackQuery(doc, AttackStyle::kParaphrase, 5);
  auto c = MakeAttackQuery(doc, AttackStyle::kParaphrase, 6);
  ASSERT_TRUE(a.ok() && b.ok() && c.ok());
  EXPECT_EQ(*a, *b);
  EXPECT_NE(*a, *c);
  const auto tokens = Tokenize(*a);
  EXPECT_EQ(tokens.size(), 80u);
  EXPECT_TRUE(IsSubsequence(tokens, Tokenize(doc.text)));
}

TEST(MakeAttackQueryTest, ShortDocumentRejected) {
  for (auto style : {AttackStyle::kHalfDoc, AttackStyle::kMasked,
                     AttackStyle::kParaphrase}) {
    EXPECT_FALSE(MakeAttackQuery(TokenDoc(9), style, 1).ok());
  }
  EXPECT_FALSE(MakeAttackQuery(TokenDoc(10), AttackStyle::kMasked, 1).ok());
}

TEST(MakeAttackQueryTest, EveryStyleStandsOutFromTheBackground) {
  SyntheticSpec spec = SmallSpec();
  spec.dim = 1024;
  spec.doc_token_len = 200;
  auto c = GenerateCorpus(spec);
  ASSERT_TRUE(c.ok());
  for (auto style : {AttackStyle::kHalfDoc, AttackStyle::kMasked,
                     AttackStyle::kParaphrase}) {
    double worst = INFINITY;
    for (size_t row = 0; row < c->members.size(); row += 7) {
      auto q = MakeAttackQuery(c->members.document(row), style, row);
      ASSERT_TRUE(q.ok());
      auto scores = ScoreAll(c->members, c->embedder.EmbedOne(*q));
      ASSERT_TRUE(scores.ok());
      auto p = BuildProfile(*scores, c->members);
      ASSERT_TRUE(p.ok());
      EXPECT_EQ(p->argmax_row, row);
      worst = std::min(worst, (p->s_max - p->mu_q) / p->sigma_q);
    }
    EXPECT_GE(worst, 5.0) << AttackStyleName(style);
  }
}

// Exhaustive oracle: accuracy at every midpoint of distinct scores, first
// best wins.
double CalibrationOracle(const std::vector<ScoredLabel>& data) {
  std::vector<double> v;
  for (const auto& d : data) v.push_back(d.score);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  double best_t = v.front(), best_acc = -1;
  for (size_t i = 0; i + 1 < v.size(); ++i) {
    const double t = v[i] + (v[i + 1] - v[i]) / 2;
    const double acc = AttackerAccuracy(data, t);
    if (acc > best_acc) {
      best_acc = acc;
      best_t = t;
    }
  }
  return best_t;
}

TEST(CalibrateAttackerTest, Separable) {
  std::vector<ScoredLabel> data;
  for (int i = 0; i < 5; ++i) {
    data.push_back({0.9, true});
    data.push_back({0.1, false});
  }
  EXPECT_EQ(*CalibrateAttacker(data), 0.5);
  EXPECT_EQ(AttackerAccuracy(data, 0.5), 1.0);
}

TEST(CalibrateAttackerTest, UninformativeScores) {
  std::vector<ScoredLabel> data = {
      {0.4, true}, {0.4, false}, {0.4, true}, {0.4, false}};
  auto t = CalibrateAttacker(data);
  ASSERT_TRUE(t.ok());
  EXPECT_EQ(AttackerAccuracy(data, *t), 0.5);
}

TEST(CalibrateAttackerTest, InterleavedMatchesOracle) {
  const std::vector<ScoredLabel> fixture = {
      {0.11, false}, {0.23, true}, {0.31, false}, {0.42, true}, {0.47, false},
      {0.55, true},  {0.61, true}, {0.68, false}, {0.77, true}, {0.93, true}};
  EXPECT_EQ(*CalibrateAttacker(fixture), CalibrationOracle(fixture));

  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    std::vector<ScoredLabel> data;
    std::uniform_int_distribution<int> level(0, 12);
    for (int i = 0; i < 2 + t % 30; ++i) {
      data.push_back({level(rng) / 12.0, i % 2 == 0});
    }
    auto got = CalibrateAttacker(data);
    ASSERT_TRUE(got.ok());
    EXPECT_EQ(AttackerAccuracy(data, *got),
              AttackerAccuracy(data, CalibrationOracle(data)));
    EXPECT_EQ(*got, CalibrationOracle(data));
  }
}

TEST(CalibrateAttackerTest, SingleClassIsError) {
  std::vector<ScoredLabel> data = {{0.1, true}, {0.2, true}};
  EXPECT_FALSE(CalibrateAttacker(data).ok());
  EXPECT_FALSE(CalibrateAttacker({}).ok());
}

class AttackerScoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = test::StoreFromRows({{1, 0, 0}, {0.6f, 0.8f, 0}, {0, 0, 1}});
  }
  RetrievalResult Hits(std::vector<size_t> rows) {
    RetrievalResult r;
    for (size_t row : rows) {
      r.hits.push_back({store_.document(row).id, row, 0.0f});
    }
    r.k = rows.size();
    return r;
  }
  CorpusStore store_;
};

TEST_F(AttackerScoreTest, ContainTopK) {
  const std::vector<float> target = {1, 0, 0};
  EXPECT_EQ(AttackerScore(Hits({1, 0}), store_, target, "d0",
                          AttackerMode::kContainTopK),
            1.0);
  const double absent = AttackerScore(Hits({1, 2}), store_, target, "d0",
                                      AttackerMode::kContainTopK);
  EXPECT_NEAR(absent, 0.6, 1e-6);
  // A perfect cosine from a different document stays below 1.
  EXPECT_LT(AttackerScore(Hits({0}), store_, target, "other",
                          AttackerMode::kContainTopK),
            1.0);
}

TEST_F(AttackerScoreTest, MaxSimAndEmpty) {
  const std::vector<float> target = {1, 0, 0};
  EXPECT_NEAR(
      AttackerScore(Hits({1, 0}), store_, target, "d0", AttackerMode::kMaxSim),
      0.6, 1e-6);
  for (auto mode : {AttackerMode::kMaxSim, AttackerMode::kContainTopK}) {
    EXPECT_EQ(AttackerScore(Hits({}), store_, target, "d0", mode), 0.0);
  }
}

TEST(ScoreHistogramTest, FixedEdges) {
  EXPECT_EQ(ScoreHistogram::BinOf(-1.0), 0u);
  EXPECT_EQ(ScoreHistogram::BinOf(-0.99), 0u);
  EXPECT_EQ(ScoreHistogram::BinOf(-0.98), 1u);
  EXPECT_EQ(ScoreHistogram::BinOf(0.0), 50u);
  EXPECT_EQ(ScoreHistogram::BinOf(0.5), 75u);
  EXPECT_EQ(ScoreHistogram::BinOf(1.0), 99u);
  EXPECT_EQ(ScoreHistogram::BinOf(1.00001), 99u);
  EXPECT_EQ(ScoreHistogram::BinOf(-1.5), 0u);
  ScoreHistogram h, g;
  h.Add(0.1);
  g.Add(0.1);
  g.Add(-0.3);
  h.Merge(g);
  EXPECT_EQ(h.total(), 3u);
  EXPECT_EQ(h.counts()[ScoreHistogram::BinOf(0.1)], 2u);
}

TEST(NamesTest, RoundTrip) {
  for (auto s : {AttackStyle::kHalfDoc, AttackStyle::kMasked,
                 AttackStyle::kParaphrase}) {
    EXPECT_EQ(ParseAttackStyle(AttackStyleName(s)), s);
  }
  for (auto m : {AttackerMode::kMaxSim, AttackerMode::kContainTopK}) {
    EXPECT_EQ(ParseAttackerMode(AttackerModeName(m)), m);
  }
  EXPECT_FALSE(ParseAttackStyle("nope").has_value());
}

ExperimentConfig SmallExperiment(uint64_t seed = 1) {
  ExperimentConfig c;
  c.spec = SmallSpec(seed);
  return c;
}

TEST(RunExperimentTest, TrialsAreConsistentAndBalanced) {
  const ExperimentConfig config = SmallExperiment();
  auto r = RunExperiment(config);
  ASSERT_TRUE(r.ok()) << r.status();
  auto corpus = GenerateCorpus(config.spec);
  ASSERT_TRUE(corpus.ok());
  std::array<size_t, 3> counts{}, in_set{};
  for (size_t i = 0; i < r->trials.size(); ++i) {
    const AttackTrial& t = r->trials[i];
    EXPECT_EQ(t.trial_id, i);
    ++counts[static_cast<size_t>(t.kind)];
    in_set[static_cast<size_t>(t.kind)] += t.in_detection_set;
    switch (t.kind) {
      case QueryKind::kMemberAttack:
        ASSERT_TRUE(t.target_id.has_value());
        EXPECT_TRUE(corpus->members.Contains(*t.target_id));
        break;
      case QueryKind::kNonMemberAttack:
        ASSERT_TRUE(t.target_id.has_value());
        EXPECT_FALSE(corpus->members.Contains(*t.target_id));
        break;
      case QueryKind::kBenign:
        EXPECT_FALSE(t.target_id.has_value());
        EXPECT_TRUE(t.gold_id.has_value());
        break;
    }
    if (t.hidden_id) {
      EXPECT_TRUE(t.detection.detected);
      EXPECT_FALSE(t.retrieval.Contains(*t.hidden_id));
    }
    if (t.kind != QueryKind::kBenign) {
      EXPECT_EQ(t.attacker_decision,
                t.attacker_score > r->report.attacker_threshold);
    }
  }
  const size_t member = static_cast<size_t>(QueryKind::kMemberAttack);
  const size_t benign = static_cast<size_t>(QueryKind::kBenign);
  const size_t non_member = static_cast<size_t>(QueryKind::kNonMemberAttack);
  EXPECT_EQ(counts[member], r->attack_pairs);
  EXPECT_EQ(counts[non_member], r->attack_pairs);
  EXPECT_EQ(in_set[member], in_set[benign] + in_set[non_member]);
  EXPECT_EQ(in_set[benign], r->detection_benign);
  EXPECT_EQ(r->report.detection_counts.total(),
            static_cast<int64_t>(2 * in_set[member]));
  // Histogram rows conserve trial counts.
  for (QueryKind k : kAllQueryKinds) {
    EXPECT_EQ(r->histograms[static_cast<size_t>(k)].s_max.total(),
              counts[static_cast<size_t>(k)]);
    EXPECT_EQ(r->histograms[static_cast<size_t>(k)].all_scores.total(),
              counts[static_cast<size_t>(k)] * corpus->members.size());
  }
}

TEST(RunExperimentTest, DeterministicAcrossRunsAndThreads) {
  ExperimentConfig config = SmallExperiment(9);
  auto a = RunExperiment(config);
  config.threads = 4;
  auto b = RunExperiment(config);
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(ReportToJson(config, *a).dump(), ReportToJson(config, *b).dump());
  EXPECT_EQ(TrialsToJsonl(*a), TrialsToJsonl(*b));
}

TEST(RunExperimentTest, DefenseLowersAttackAccuracyAndKs) {
  for (uint64_t seed : {1, 2, 3}) {
    ExperimentConfig config = SmallExperiment(seed);
    config.defense.enabled = false;
    auto off = RunExperiment(config);
    config.defense.enabled = true;
    auto on = RunExperiment(config);
    ASSERT_TRUE(off.ok() && on.ok());
    EXPECT_LT(on->report.attack.adjusted_accuracy,
              off->report.attack.adjusted_accuracy);
    EXPECT_LT(*on->report.attack.ks, *off->report.attack.ks);
    // Detection itself does not depend on whether hiding is enabled.
    EXPECT_EQ(on->report.detection_counts, off->report.detection_counts);
  }
}

TEST(RunExperimentTest, UtilityIdenticalWhenNotDetected) {
  auto r = RunExperiment(SmallExperiment(4));
  ASSERT_TRUE(r.ok());
  const UtilityReport& u = r->report.utility;
  EXPECT_EQ(u.queries, SmallSpec().benign_queries);
  EXPECT_EQ(u.identical_when_not_detected, u.queries - u.detected);
  EXPECT_LE(u.r_at_k_defended, u.r_at_k_plain);
}

TEST(RunExperimentTest, ConfigValidation) {
  ExperimentConfig c = SmallExperiment();
  c.threads = 0;
  EXPECT_FALSE(RunExperiment(c).ok());
  c = SmallExperiment();
  c.defense.k = 0;
  EXPECT_FALSE(RunExperiment(c).ok());
  c = SmallExperiment();
  c.attack.paraphrase_fraction = 0.0;
  EXPECT_FALSE(c.Validate().ok());
}

}  // namespace
}  // namespace mirabel
