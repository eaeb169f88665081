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

#ifndef MIRABEL_ATTACKSIM_H_
#define MIRABEL_ATTACKSIM_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mirabel/corpus.h"
#include "mirabel/defense.h"
#include "mirabel/detector.h"
#include "mirabel/index.h"
#include "mirabel/stats.h"

namespace mirabel {

enum class QueryKind { kBenign, kMemberAttack, kNonMemberAttack };
enum class AttackStyle { kHalfDoc, kMasked, kParaphrase };
enum class AttackerMode { kMaxSim, kContainTopK };
enum class TrialSplit { kNone, kReference, kEvaluation };

inline constexpr std::array<QueryKind, 3> kAllQueryKinds = {
    QueryKind::kBenign, QueryKind::kMemberAttack, QueryKind::kNonMemberAttack};

std::string_view QueryKindName(QueryKind kind);
std::string_view AttackStyleName(AttackStyle style);
std::string_view AttackerModeName(AttackerMode mode);
std::string_view TrialSplitName(TrialSplit split);
std::optional<AttackStyle> ParseAttackStyle(std::string_view name);
std::optional<AttackerMode> ParseAttackerMode(std::string_view name);

// Shape of a synthetic corpus. Documents are token sequences mixing a
// per-topic vocabulary with a shared one, cut into sentences.
struct SyntheticSpec {
  size_t topics = 5;
  size_t docs_per_topic = 200;
  size_t dim = 1024;
  size_t doc_token_len = 200;
  uint64_t seed = 1;
  double member_fraction = 0.7;
  size_t benign_queries = 500;

  size_t topic_vocab = 1500;
  size_t common_vocab = 5000;
  // Probability that a document token comes from its topic vocabulary.
  double topic_weight = 0.4;
  size_t sentence_len = 20;
  // Benign queries: `benign_query_len` tokens, `benign_gold_tokens` of them
  // sampled from one member document (the gold document), the rest from the
  // gold document's topic and the shared vocabulary.
  size_t benign_query_len = 40;
  size_t benign_gold_tokens = 6;

  absl::Status Validate() const;
};

struct BenignQuery {
  std::string text;
  std::string gold_id;
  // First sentence of the gold document; the answer an extractive
  // generator should produce.
  std::string gold_answer;
  size_t topic = 0;
};

struct SyntheticCorpus {
  // Members: the private store, embedded.
  CorpusStore members;
  // Held out; never stored.
  std::vector<Document> non_members;
  std::vector<BenignQuery> benign;
  HashEmbedder embedder;
};

absl::StatusOr<SyntheticCorpus> GenerateCorpus(const SyntheticSpec& spec);

struct AttackQueryOptions {
  // Tokens deleted by the masked style.
  size_t mask_count = 10;
  // Fraction of tokens kept by the paraphrase style.
  double paraphrase_fraction = 0.4;
};

inline constexpr size_t kMinAttackDocTokens = 10;

// HalfDoc: first ceil(len/2) tokens. Masked: `mask_count` tokens deleted at
// uniformly chosen positions. Paraphrase: an order-preserving uniform
// subsample of round(fraction * len) tokens. Output tokens are joined by
// single spaces.
absl::StatusOr<std::string> MakeAttackQuery(
    const Document& doc, AttackStyle style, uint64_t seed,
    const AttackQueryOptions& options = {});

struct ScoredLabel {
  double score = 0.0;
  bool is_member = false;
};

// Accuracy-maximizing threshold over all midpoints between consecutive
// distinct sorted scores (decision: member iff score > threshold). Ties go to
// the lower threshold. Fails unless both classes are present.
absl::StatusOr<double> CalibrateAttacker(
    std::span<const ScoredLabel> reference);

// Accuracy of the rule score > threshold on labeled data.
double AttackerAccuracy(std::span<const ScoredLabel> data, double threshold);

// What the attacker can observe about its target from a retrieval.
// MaxSim: cosine between the target embedding and the top hit's embedding.
// ContainTopK: 1 if the target id is among the hits, otherwise the top-hit
// cosine capped just below 1. An empty retrieval scores 0.
double AttackerScore(const RetrievalResult& retrieval, const CorpusStore& store,
                     std::span<const float> target_embedding,
                     std::string_view target_id, AttackerMode mode);

// Fixed-edge histogram over [-1, 1]; the last bin is closed.
class ScoreHistogram {
 public:
  static constexpr double kLow = -1.0;
  static constexpr double kHigh = 1.0;
  static constexpr double kWidth = 0.02;
  static constexpr size_t kBins = 100;

  static size_t BinOf(double score);
  static double BinLow(size_t bin) { return kLow + kWidth * bin; }

  void Add(double score) { ++counts_[BinOf(score)]; }
  void Merge(const ScoreHistogram& other);
  uint64_t total() const;
  const std::array<uint64_t, kBins>& counts() const { return counts_; }

 private:
  std::array<uint64_t, kBins> counts_{};
};

struct KindHistograms {
  ScoreHistogram all_scores;
  ScoreHistogram s_max;
};

struct AttackTrial {
  size_t trial_id = 0;
  QueryKind kind = QueryKind::kBenign;
  std::string query_text;
  // Attack target (member or non-member) or, for benign queries, absent.
  std::optional<std::string> target_id;
  std::optional<std::string> gold_id;
  TrialSplit split = TrialSplit::kNone;
  // Attacker fields are only meaningful for attack trials.
  double attacker_score = 0.0;
  bool attacker_decision = false;
  DetectionOutcome detection;
  std::optional<std::string> hidden_id;
  RetrievalResult retrieval;
  // Normality p-values of the full score set and of the set without its
  // maximum; absent when the test is undefined for that set.
  std::optional<double> p_full;
  std::optional<double> p_loo;
  // Whether this trial belongs to the balanced detection evaluation set.
  bool in_detection_set = false;
};

struct ExperimentCounts {
  // Member and non-member attack trials each; 0 uses every non-member (or
  // every member, whichever is fewer).
  size_t attack_pairs = 0;
  // Benign trials in the detection set; the rest of the negatives are
  // non-member attack trials so that negatives == positives. 0 uses half of
  // the attack pairs.
  size_t detection_benign = 0;
};

struct ExperimentConfig {
  SyntheticSpec spec;
  AttackStyle style = AttackStyle::kHalfDoc;
  AttackQueryOptions attack;
  DefenseConfig defense;
  AttackerMode attacker_mode = AttackerMode::kContainTopK;
  ExperimentCounts counts;
  int threads = 1;

  absl::Status Validate() const;
};

struct KindSummary {
  size_t count = 0;
  size_t detected = 0;
  PValueSummary p_full;
  PValueSummary p_loo;
};

struct UtilityReport {
  size_t queries = 0;
  size_t detected = 0;
  // Non-detected queries whose defended retrieval equals the plain one.
  size_t identical_when_not_detected = 0;
  double r_at_k_plain = 0.0;
  double r_at_k_defended = 0.0;
  double em_plain = 0.0;
  double em_defended = 0.0;
};

struct ExperimentReport {
  // Detection: member attacks are positives; benign plus non-member attacks
  // the negatives, balanced.
  ConfusionCounts detection_counts;
  MetricsReport detection;
  // Attacker on the evaluation split, threshold calibrated on the reference
  // split. `attack.ks` compares member and non-member scores over all trials.
  ConfusionCounts attack_counts;
  MetricsReport attack;
  double attacker_threshold = 0.0;
  std::array<KindSummary, 3> kinds{};
  UtilityReport utility;
  // Threshold from pooling every benign score set into one sample (a figure
  // aid, not a detection mode).
  std::optional<double> pooled_benign_tau;

  const KindSummary& kind(QueryKind k) const {
    return kinds[static_cast<size_t>(k)];
  }
};

struct ExperimentResult {
  std::vector<AttackTrial> trials;
  ExperimentReport report;
  std::array<KindHistograms, 3> histograms{};
  size_t attack_pairs = 0;
  size_t detection_benign = 0;
};

// Generates the corpus, runs every query kind through detection and the
// (possibly disabled) defense, calibrates the attacker on the reference split
// and evaluates it on the rest. Trials may run on `threads` workers; results
// are assembled in trial order, so the output does not depend on scheduling.
absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& config);

}  // namespace mirabel

#endif  // MIRABEL_ATTACKSIM_H_
