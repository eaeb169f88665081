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

#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "mirabel/index.h"
#include "test_util.h"

namespace mirabel {
namespace {

using ::testing::HasSubstr;

std::string PromptFile(const std::string& part) {
  std::string s = test::ReadFile(
      absl::StrCat(MIRABEL_PROMPT_DIR, "/rag_prompt_v1.", part, ".txt"));
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

TEST(PromptTemplateTest, CompiledTextMatchesResourceFiles) {
  EXPECT_EQ(PromptSystemTemplate(), PromptFile("system"));
  EXPECT_EQ(PromptUserTemplate(), PromptFile("user"));
  EXPECT_EQ(PromptAssistantTemplate(), PromptFile("assistant"));
  EXPECT_EQ(kPromptTemplateVersion, "rag_prompt_v1");
}

TEST(PromptTemplateTest, TemplateWording) {
  EXPECT_THAT(std::string(PromptSystemTemplate()),
              HasSubstr("Answer the question given the information in those "
                        "contexts. Your answer should be short and concise."));
  EXPECT_THAT(std::string(PromptSystemTemplate()),
              HasSubstr("just say \"I don't know\""));
  EXPECT_THAT(std::string(PromptUserTemplate()), HasSubstr("{context}"));
  EXPECT_THAT(std::string(PromptUserTemplate()), HasSubstr("{question}"));
}

CorpusStore TextStore() {
  return test::StoreFromRows(
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
      {"Paris is the capital of France. It is large.",
       "The Seine flows through Paris! Boats sail on it.",
       "Mount Fuji is in Japan."});
}

RetrievalResult Hits(std::vector<std::string> ids) {
  RetrievalResult r;
  r.k = ids.size();
  for (size_t i = 0; i < ids.size(); ++i) r.hits.push_back({ids[i], i, 0.0f});
  return r;
}

TEST(AssemblePromptTest, ContextsInRankOrderBeforeQuery) {
  const CorpusStore store = TextStore();
  auto p = AssemblePrompt("Where is Fuji?", Hits({"d2", "d0"}), store);
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p->context_ids, (std::vector<std::string>{"d2", "d0"}));
  const size_t first = p->user_text.find("Mount Fuji");
  const size_t second = p->user_text.find("Paris is the capital");
  const size_t query = p->user_text.find("Where is Fuji?");
  ASSERT_NE(first, std::string::npos);
  EXPECT_LT(first, second);
  EXPECT_LT(second, query);
  EXPECT_EQ(p->system_text, PromptSystemTemplate());
  EXPECT_EQ(p->assistant_prefix, PromptAssistantTemplate());
}

TEST(AssemblePromptTest, EmptyRetrievalKeepsQuery) {
  auto p = AssemblePrompt("Anything?", Hits({}), TextStore());
  ASSERT_TRUE(p.ok());
  EXPECT_TRUE(p->context_ids.empty());
  EXPECT_EQ(p->user_text, "Contexts: \nQuery: Anything?");
}

TEST(AssemblePromptTest, UnknownIdIsNotFound) {
  auto p = AssemblePrompt("q", Hits({"d0", "zzz"}), TextStore());
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.status().code(), absl::StatusCode::kNotFound);
}

TEST(AssemblePromptTest, PlaceholdersInsideTextsAreNotExpanded) {
  const CorpusStore store =
      test::StoreFromRows({{1, 0}}, {"literal {question} marker"});
  auto p = AssemblePrompt("Q", Hits({"d0"}), store);
  ASSERT_TRUE(p.ok());
  EXPECT_THAT(p->user_text, HasSubstr("literal {question} marker"));
}

std::string Render(const AssembledPrompt& p) {
  return absl::StrCat("[system]\n", p.system_text, "\n[user]\n", p.user_text,
                      "\n[assistant]\n", p.assistant_prefix, "\n");
}

TEST(AssemblePromptTest, GoldenFile) {
  auto p = AssemblePrompt("What is the capital of France?", Hits({"d0", "d1"}),
                          TextStore());
  ASSERT_TRUE(p.ok());
  const std::string path =
      std::string(MIRABEL_TEST_GOLDEN_DIR) + "/prompt_two_hits.txt";
  const std::string rendered = Render(*p);
  if (std::getenv("MIRABEL_UPDATE_GOLDEN") != nullptr) {
    test::WriteFile(path, rendered);
  }
  EXPECT_EQ(rendered, test::ReadFile(path));
}

AssembledPrompt PromptWith(std::string question,
                           std::vector<std::string> contexts) {
  AssembledPrompt p;
  p.question = std::move(question);
  p.context_texts = std::move(contexts);
  return p;
}

TEST(TemplateGenerateTest, PicksOnlyOverlappingContext) {
  EXPECT_EQ(TemplateGenerate(PromptWith(
                "seine boats", {"Boats on the Seine. More.", "Nothing here."})),
            "Boats on the Seine.");
}

TEST(TemplateGenerateTest, NoOverlapSaysIDontKnow) {
  EXPECT_EQ(TemplateGenerate(PromptWith("zebra", {"alpha beta.", "gamma."})),
            "I don't know");
  EXPECT_EQ(TemplateGenerate(PromptWith("zebra", {})), "I don't know");
}

TEST(TemplateGenerateTest, MostOverlapWinsThenEarlierRank) {
  // Context 1 shares {paris}, context 2 shares {paris, seine, river}.
  EXPECT_EQ(TemplateGenerate(PromptWith(
                "paris seine river",
                {"Paris is big. Yes.", "The Seine river crosses Paris. Ok."})),
            "The Seine river crosses Paris.");
  // Equal overlap: the earlier context wins.
  EXPECT_EQ(
      TemplateGenerate(PromptWith("paris", {"Paris one. x", "Paris two. y"})),
      "Paris one.");
  // Repeated tokens count once.
  EXPECT_EQ(TemplateGenerate(PromptWith(
                "paris seine", {"Paris paris paris. z", "Paris seine. w"})),
            "Paris seine.");
  TemplateGenerator g;
  EXPECT_EQ(g.Generate(PromptWith("paris", {"Paris one. x"})), "Paris one.");
}

TEST(FirstSentenceTest, Boundaries) {
  EXPECT_EQ(FirstSentence("  One. Two."), "One.");
  EXPECT_EQ(FirstSentence("Version 1.5 is out! Yes"), "Version 1.5 is out!");
  EXPECT_EQ(FirstSentence("no terminator"), "no terminator");
  EXPECT_EQ(FirstSentence("Why?\nBecause."), "Why?");
  EXPECT_EQ(FirstSentence(""), "");
}

TEST(DefenseConfigTest, Validate) {
  EXPECT_TRUE(DefenseConfig{}.Validate().ok());
  DefenseConfig c;
  c.k = 0;
  EXPECT_FALSE(c.Validate().ok());
  c = DefenseConfig{};
  c.rho = 1.0;
  EXPECT_FALSE(c.Validate().ok());
}

class PlantedStore : public ::testing::Test {
 protected:
  void SetUp() override {
    sims_ = test::NormalSims(999, 0.1, 1234);
    sims_.push_back(0.9);
    store_ = test::StoreWithSimilarities(sims_);
    query_ = test::UnitQuery(1001);
  }
  std::vector<double> sims_;
  CorpusStore store_;
  std::vector<float> query_;
};

TEST_F(PlantedStore, HidesTargetAndShiftsRanking) {
  auto scores = ScoreAll(store_, query_);
  ASSERT_TRUE(scores.ok());
  const RetrievalResult plain = TopKRows(store_, *scores, 4);
  ASSERT_EQ(plain.hits[0].id, "d999");

  DefenseConfig config;
  auto d = DefendedRetrieve(store_, query_, config);
  ASSERT_TRUE(d.ok());
  EXPECT_TRUE(d->detection.detected);
  EXPECT_EQ(d->hidden_id, "d999");
  ASSERT_EQ(d->retrieval.hits.size(), 3u);
  EXPECT_FALSE(d->retrieval.Contains("d999"));
  for (size_t i = 0; i < 3; ++i)
    EXPECT_EQ(d->retrieval.hits[i], plain.hits[i + 1]);
}

TEST_F(PlantedStore, DisabledDefenseDetectsButDoesNotHide) {
  DefenseConfig config;
  config.enabled = false;
  auto d = DefendedRetrieve(store_, query_, config);
  ASSERT_TRUE(d.ok());
  EXPECT_TRUE(d->detection.detected);
  EXPECT_FALSE(d->hidden_id.has_value());
  EXPECT_EQ(d->retrieval.hits[0].id, "d999");
}

TEST_F(PlantedStore, MemberAndNonMemberCorporaGiveSameHits) {
  // The same query against D and against D without the target.
  DefenseConfig config;
  auto member = DefendedRetrieve(store_, query_, config);
  std::vector<double> without(sims_.begin(), sims_.end() - 1);
  const CorpusStore reduced = test::StoreWithSimilarities(without);
  auto non_member = DefendedRetrieve(reduced, test::UnitQuery(1000), config);
  ASSERT_TRUE(member.ok() && non_member.ok());
  ASSERT_TRUE(member->detection.detected);
  ASSERT_FALSE(non_member->detection.detected);
  EXPECT_EQ(member->retrieval.ids(), non_member->retrieval.ids());
}

TEST_F(PlantedStore, SecondPassIsDiagnosticOnly) {
  DefenseConfig config;
  config.diagnose_second_pass = true;
  auto d = DefendedRetrieve(store_, query_, config);
  ASSERT_TRUE(d.ok());
  ASSERT_TRUE(d->second_pass_detected.has_value());
  EXPECT_FALSE(*d->second_pass_detected);
  EXPECT_EQ(d->retrieval.hits.size(), 3u);

  // Two planted documents: the second pass notices the other one, but only
  // the first is hidden.
  std::vector<double> twin = sims_;
  twin[10] = 0.85;
  const CorpusStore store = test::StoreWithSimilarities(twin);
  auto t = DefendedRetrieve(store, query_, config);
  ASSERT_TRUE(t.ok());
  EXPECT_EQ(t->hidden_id, "d999");
  EXPECT_EQ(t->second_pass_detected, true);
  EXPECT_EQ(t->retrieval.hits[0].id, "d10");
}

TEST(DefendedRetrieveTest, NonDetectedQueryMatchesPlainExactly) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 50; ++t) {
    const CorpusStore store =
        test::StoreWithSimilarities(test::NormalSims(300, 0.1, rng()));
    const std::vector<float> q = test::UnitQuery(301);
    auto scores = ScoreAll(store, q);
    ASSERT_TRUE(scores.ok());
    auto d = DefendedRetrieve(store, q, DefenseConfig{});
    ASSERT_TRUE(d.ok());
    if (!d->detection.detected) {
      EXPECT_EQ(d->retrieval, TopKRows(store, *scores, 3));
      EXPECT_FALSE(d->hidden_id.has_value());
    } else {
      EXPECT_FALSE(d->retrieval.Contains(*d->hidden_id));
    }
  }
}

TEST(DefendedRetrieveTest, SmallStoreIsPrecondition) {
  const CorpusStore store = TextStore();
  auto d =
      DefendedRetrieve(store, std::vector<float>{1, 0, 0}, DefenseConfig{});
  ASSERT_FALSE(d.ok());
  EXPECT_EQ(d.status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(HideAndRetrieveTest, SingleDocumentStoreExhausts) {
  const CorpusStore store = test::StoreFromRows({{1, 0}});
  auto scores = ScoreAll(store, std::vector<float>{1, 0});
  ASSERT_TRUE(scores.ok());
  DetectionOutcome detected;
  detected.detected = true;
  detected.target_row = 0;
  detected.target_id = "d0";
  EXPECT_TRUE(HideAndRetrieve(store, *scores, detected, 3, true).hits.empty());
  EXPECT_EQ(HideAndRetrieve(store, *scores, detected, 3, false).hits.size(),
            1u);
  EXPECT_EQ(
      HideAndRetrieve(store, *scores, DetectionOutcome{}, 3, true).hits.size(),
      1u);
}

// Embeds by looking the text up in a fixed table.
class TableEmbedder : public EmbeddingProvider {
 public:
  explicit TableEmbedder(std::map<std::string, std::vector<float>> table)
      : table_(std::move(table)) {}
  size_t dim() const override { return table_.begin()->second.size(); }
  std::string name() const override { return "table"; }
  absl::StatusOr<EmbeddingMatrix> Embed(
      std::span<const std::string> texts) const override {
    EmbeddingMatrix m(dim(), 0);
    for (const auto& t : texts) m.AppendRow(table_.at(t));
    return m;
  }

 private:
  std::map<std::string, std::vector<float>> table_;
};

TEST(RespondTest, EndToEndHidesTargetEverywhere) {
  std::vector<double> sims = test::NormalSims(60, 0.05, 9);
  sims[7] = 0.95;
  std::vector<std::string> texts;
  for (size_t i = 0; i < sims.size(); ++i) {
    texts.push_back(absl::StrCat("Document ", i, " about topic ", i % 5, "."));
  }
  std::vector<std::vector<float>> rows(sims.size(),
                                       std::vector<float>(sims.size() + 1));
  for (size_t i = 0; i < sims.size(); ++i) {
    rows[i][0] = sims[i];
    rows[i][i + 1] = std::sqrt(1 - sims[i] * sims[i]);
  }
  const CorpusStore store = test::StoreFromRows(rows, texts);
  TableEmbedder embedder(
      {{"tell me about document 7", test::UnitQuery(sims.size() + 1)}});
  TemplateGenerator generator;
  auto r = Respond(store, embedder, "tell me about document 7", DefenseConfig{},
                   generator);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_EQ(r->hidden_id, "d7");
  EXPECT_FALSE(r->retrieval.Contains("d7"));
  for (const auto& id : r->prompt.context_ids) EXPECT_NE(id, "d7");
  EXPECT_THAT(r->prompt.user_text, ::testing::Not(HasSubstr("Document 7 ")));
  EXPECT_THAT(r->response, ::testing::Not(HasSubstr("Document 7 ")));
  EXPECT_EQ(r->prompt.context_ids, r->retrieval.ids());
}

}  // namespace
}  // namespace mirabel
