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
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "src/hashing.h"

namespace mirabel {
namespace {

using internal::Shuffle;
using internal::StreamSeed;
using internal::UniformIndex;
using internal::UniformUnit;

// Stream labels for StreamSeed; one per independent random decision.
enum Stream : uint64_t {
  kDocuments = 1,
  kSplit = 2,
  kEmbedding = 3,
  kBenign = 4,
  kMemberSample = 5,
  kNonMemberSample = 6,
  kAttackQuery = 1000,
};

std::string TopicWord(size_t topic, size_t index) {
  return absl::StrFormat("t%zuw%zu", topic, index);
}

std::string CommonWord(size_t index) { return absl::StrFormat("c%zu", index); }

std::string DrawToken(std::mt19937_64& rng, const SyntheticSpec& spec,
                      size_t topic) {
  if (UniformUnit(rng) < spec.topic_weight) {
    return TopicWord(topic, UniformIndex(rng, spec.topic_vocab));
  }
  return CommonWord(UniformIndex(rng, spec.common_vocab));
}

std::string JoinSentences(const std::vector<std::string>& tokens,
                          size_t sentence_len) {
  std::string text;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) text.push_back(' ');
    text += tokens[i];
    if ((i + 1) % sentence_len == 0 || i + 1 == tokens.size()) {
      text.push_back('.');
    }
  }
  return text;
}

// k distinct positions of [0, n), ascending.
std::vector<size_t> SamplePositions(std::mt19937_64& rng, size_t n, size_t k) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  for (size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + UniformIndex(rng, n - i)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::string_view QueryKindName(QueryKind kind) {
  switch (kind) {
    case QueryKind::kBenign:
      return "benign";
    case QueryKind::kMemberAttack:
      return "member_attack";
    case QueryKind::kNonMemberAttack:
      return "non_member_attack";
  }
  return "unknown";
}

std::string_view AttackStyleName(AttackStyle style) {
  switch (style) {
    case AttackStyle::kHalfDoc:
      return "halfdoc";
    case AttackStyle::kMasked:
      return "masked";
    case AttackStyle::kParaphrase:
      return "paraphrase";
  }
  return "unknown";
}

std::string_view AttackerModeName(AttackerMode mode) {
  switch (mode) {
    case AttackerMode::kMaxSim:
      return "maxsim";
    case AttackerMode::kContainTopK:
      return "containtopk";
  }
  return "unknown";
}

std::string_view TrialSplitName(TrialSplit split) {
  switch (split) {
    case TrialSplit::kNone:
      return "none";
    case TrialSplit::kReference:
      return "reference";
    case TrialSplit::kEvaluation:
      return "evaluation";
  }
  return "unknown";
}

std::optional<AttackStyle> ParseAttackStyle(std::string_view name) {
  if (name == "halfdoc") return AttackStyle::kHalfDoc;
  if (name == "masked") return AttackStyle::kMasked;
  if (name == "paraphrase") return AttackStyle::kParaphrase;
  return std::nullopt;
}

std::optional<AttackerMode> ParseAttackerMode(std::string_view name) {
  if (name == "maxsim") return AttackerMode::kMaxSim;
  if (name == "containtopk") return AttackerMode::kContainTopK;
  return std::nullopt;
}

absl::Status SyntheticSpec::Validate() const {
  auto positive = [](std::string_view field, size_t v) -> absl::Status {
    if (v == 0)
      return absl::InvalidArgumentError(
          absl::StrCat(std::string(field), " must be > 0"));
    return absl::OkStatus();
  };
  for (auto [field, v] : {std::pair<std::string_view, size_t>{"topics", topics},
                          {"docs_per_topic", docs_per_topic},
                          {"topic_vocab", topic_vocab},
                          {"common_vocab", common_vocab},
                          {"sentence_len", sentence_len},
                          {"benign_query_len", benign_query_len}}) {
    if (auto s = positive(field, v); !s.ok()) return s;
  }
  if (dim < HashEmbedder::kMinDim || (dim & (dim - 1)) != 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("dim must be a power of two >= ", HashEmbedder::kMinDim,
                     ", got ", dim));
  }
  if (doc_token_len < kMinAttackDocTokens) {
    return absl::InvalidArgumentError(
        absl::StrCat("doc_token_len must be >= ", kMinAttackDocTokens, ", got ",
                     doc_token_len));
  }
  if (!(member_fraction > 0.0 && member_fraction < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "member_fraction must lie in (0, 1), got ", member_fraction));
  }
  if (!(topic_weight >= 0.0 && topic_weight <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("topic_weight must lie in [0, 1], got ", topic_weight));
  }
  if (benign_gold_tokens > benign_query_len ||
      benign_gold_tokens > doc_token_len) {
    return absl::InvalidArgumentError(
        "benign_gold_tokens exceeds benign_query_len or doc_token_len");
  }
  const size_t total = topics * docs_per_topic;
  const auto members = static_cast<size_t>(
      std::llround(member_fraction * static_cast<double>(total)));
  if (members == 0) {
    return absl::InvalidArgumentError("member split is empty");
  }
  return absl::OkStatus();
}

absl::StatusOr<SyntheticCorpus> GenerateCorpus(const SyntheticSpec& spec) {
  if (auto s = spec.Validate(); !s.ok()) return s;
  auto embedder =
      HashEmbedder::Create(spec.dim, StreamSeed(spec.seed, kEmbedding));
  if (!embedder.ok()) return embedder.status();

  const size_t total = spec.topics * spec.docs_per_topic;
  std::vector<Document> docs;
  std::vector<size_t> topic_of;
  docs.reserve(total);
  std::mt19937_64 doc_rng(StreamSeed(spec.seed, kDocuments));
  for (size_t t = 0; t < spec.topics; ++t) {
    for (size_t j = 0; j < spec.docs_per_topic; ++j) {
      std::vector<std::string> tokens;
      tokens.reserve(spec.doc_token_len);
      for (size_t i = 0; i < spec.doc_token_len; ++i) {
        tokens.push_back(DrawToken(doc_rng, spec, t));
      }
      Document d;
      d.id = absl::StrFormat("doc-t%zu-%04zu", t, j);
      d.text = JoinSentences(tokens, spec.sentence_len);
      d.metadata["topic"] = absl::StrCat(t);
      docs.push_back(std::move(d));
      topic_of.push_back(t);
    }
  }

  std::vector<size_t> order(total);
  for (size_t i = 0; i < total; ++i) order[i] = i;
  std::mt19937_64 split_rng(StreamSeed(spec.seed, kSplit));
  Shuffle(order, split_rng);
  const auto n_members = static_cast<size_t>(
      std::llround(spec.member_fraction * static_cast<double>(total)));
  std::vector<size_t> member_idx(order.begin(), order.begin() + n_members);
  std::vector<size_t> non_member_idx(order.begin() + n_members, order.end());
  std::sort(member_idx.begin(), member_idx.end());
  std::sort(non_member_idx.begin(), non_member_idx.end());

  std::vector<Document> members;
  std::vector<std::string> member_texts;
  members.reserve(n_members);
  for (size_t i : member_idx) {
    member_texts.push_back(docs[i].text);
    members.push_back(docs[i]);
  }
  auto embeddings = embedder->Embed(member_texts);
  if (!embeddings.ok()) return embeddings.status();
  auto store = CorpusStore::Create(std::move(members), *std::move(embeddings));
  if (!store.ok()) return store.status();

  SyntheticCorpus corpus{*std::move(store), {}, {}, *embedder};
  for (size_t i : non_member_idx) corpus.non_members.push_back(docs[i]);

  std::mt19937_64 benign_rng(StreamSeed(spec.seed, kBenign));
  corpus.benign.reserve(spec.benign_queries);
  for (size_t q = 0; q < spec.benign_queries; ++q) {
    const size_t gold_row = UniformIndex(benign_rng, corpus.members.size());
    const Document& gold = corpus.members.document(gold_row);
    const size_t topic = topic_of[member_idx[gold_row]];
    const auto gold_tokens = Tokenize(gold.text);
    std::vector<std::string> tokens;
    for (size_t pos : SamplePositions(benign_rng, gold_tokens.size(),
                                      spec.benign_gold_tokens)) {
      tokens.push_back(gold_tokens[pos]);
    }
    while (tokens.size() < spec.benign_query_len) {
      tokens.push_back(DrawToken(benign_rng, spec, topic));
    }
    Shuffle(tokens, benign_rng);
    BenignQuery bq;
    bq.text = absl::StrCat(absl::StrJoin(tokens, " "), "?");
    bq.gold_id = gold.id;
    bq.gold_answer = FirstSentence(gold.text);
    bq.topic = topic;
    corpus.benign.push_back(std::move(bq));
  }
  return corpus;
}

absl::StatusOr<std::string> MakeAttackQuery(const Document& doc,
                                            AttackStyle style, uint64_t seed,
                                            const AttackQueryOptions& options) {
  const auto tokens = Tokenize(doc.text);
  const size_t len = tokens.size();
  if (len < kMinAttackDocTokens) {
    return absl::InvalidArgumentError(
        absl::StrCat("document '", doc.id, "' has ", len,
                     " tokens; attacks need >= ", kMinAttackDocTokens));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::string> kept;
  switch (style) {
    case AttackStyle::kHalfDoc:
      kept.assign(tokens.begin(), tokens.begin() + (len + 1) / 2);
      break;
    case AttackStyle::kMasked: {
      if (options.mask_count >= len) {
        return absl::InvalidArgumentError(absl::StrCat(
            "mask_count ", options.mask_count, " leaves no tokens of ", len));
      }
      const auto masked = SamplePositions(rng, len, options.mask_count);
      size_t m = 0;
      for (size_t i = 0; i < len; ++i) {
        if (m < masked.size() && masked[m] == i) {
          ++m;
          continue;
        }
        kept.push_back(tokens[i]);
      }
      break;
    }
    case AttackStyle::kParaphrase: {
      if (!(options.paraphrase_fraction > 0.0 &&
            options.paraphrase_fraction <= 1.0)) {
        return absl::InvalidArgumentError(
            "paraphrase_fraction must lie in (0, 1]");
      }
      const auto keep = std::max<size_t>(
          1, static_cast<size_t>(std::llround(options.paraphrase_fraction *
                                              static_cast<double>(len))));
      for (size_t pos : SamplePositions(rng, len, keep)) {
        kept.push_back(tokens[pos]);
      }
      break;
    }
  }
  return absl::StrJoin(kept, " ");
}

double AttackerAccuracy(std::span<const ScoredLabel> data, double threshold) {
  if (data.empty()) return 0.0;
  size_t correct = 0;
  for (const auto& d : data) {
    if ((d.score > threshold) == d.is_member) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

absl::StatusOr<double> CalibrateAttacker(
    std::span<const ScoredLabel> reference) {
  std::vector<double> members, non_members;
  for (const auto& r : reference) {
    (r.is_member ? members : non_members).push_back(r.score);
  }
  if (members.empty() || non_members.empty()) {
    return absl::InvalidArgumentError(
        "attacker calibration needs both member and non-member references");
  }
  std::sort(members.begin(), members.end());
  std::sort(non_members.begin(), non_members.end());
  std::vector<double> all(members);
  all.insert(all.end(), non_members.begin(), non_members.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (all.size() == 1) return all.front();

  const auto below_or_equal = [](const std::vector<double>& v, double t) {
    return static_cast<size_t>(std::upper_bound(v.begin(), v.end(), t) -
                               v.begin());
  };
  double best_threshold = 0.0;
  size_t best_correct = 0;
  bool first = true;
  for (size_t i = 0; i + 1 < all.size(); ++i) {
    const double t = all[i] + (all[i + 1] - all[i]) / 2.0;
    const size_t correct = (members.size() - below_or_equal(members, t)) +
                           below_or_equal(non_members, t);
    if (first || correct > best_correct) {
      best_correct = correct;
      best_threshold = t;
      first = false;
    }
  }
  return best_threshold;
}

double AttackerScore(const RetrievalResult& retrieval, const CorpusStore& store,
                     std::span<const float> target_embedding,
                     std::string_view target_id, AttackerMode mode) {
  if (retrieval.hits.empty()) return 0.0;
  if (mode == AttackerMode::kContainTopK && retrieval.Contains(target_id)) {
    return 1.0;
  }
  const double best = Cosine(
      target_embedding, store.embeddings().row(retrieval.hits.front().row));
  if (mode == AttackerMode::kContainTopK) {
    return std::min(best, std::nextafter(1.0, 0.0));
  }
  return best;
}

size_t ScoreHistogram::BinOf(double score) {
  if (!(score > kLow)) return 0;
  const double pos = (score - kLow) / kWidth;
  const auto bin = static_cast<size_t>(std::floor(pos + 1e-9));
  return std::min(bin, kBins - 1);
}

void ScoreHistogram::Merge(const ScoreHistogram& other) {
  for (size_t i = 0; i < kBins; ++i) counts_[i] += other.counts_[i];
}

uint64_t ScoreHistogram::total() const {
  uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

absl::Status ExperimentConfig::Validate() const {
  if (auto s = spec.Validate(); !s.ok()) return s;
  if (auto s = defense.Validate(); !s.ok()) return s;
  if (threads < 1) return absl::InvalidArgumentError("threads must be >= 1");
  if (style == AttackStyle::kMasked &&
      attack.mask_count >= spec.doc_token_len) {
    return absl::InvalidArgumentError("mask_count must be < doc_token_len");
  }
  if (!(attack.paraphrase_fraction > 0.0 &&
        attack.paraphrase_fraction <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("paraphrase_fraction must lie in (0, 1], got ",
                     attack.paraphrase_fraction));
  }
  return absl::OkStatus();
}

namespace {

struct TrialPlan {
  QueryKind kind;
  // Member row, non-member index, or benign pool index.
  size_t source;
  TrialSplit split;
};

struct TrialOutput {
  AttackTrial trial;
  ScoreHistogram all_scores;
  double score_sum = 0.0;
  double score_sq_sum = 0.0;
};

std::optional<double> PValue(std::span<const double> sample) {
  auto r = DagostinoPearson(sample);
  if (!r.ok()) return std::nullopt;
  return r->p_value;
}

absl::StatusOr<TrialOutput> RunTrial(const ExperimentConfig& config,
                                     const SyntheticCorpus& corpus,
                                     size_t trial_id, const TrialPlan& plan) {
  const CorpusStore& store = corpus.members;
  TrialOutput out;
  AttackTrial& trial = out.trial;
  trial.trial_id = trial_id;
  trial.kind = plan.kind;
  trial.split = plan.split;

  const Document* target = nullptr;
  if (plan.kind == QueryKind::kMemberAttack) {
    target = &store.document(plan.source);
  } else if (plan.kind == QueryKind::kNonMemberAttack) {
    target = &corpus.non_members[plan.source];
  }
  if (target != nullptr) {
    auto text = MakeAttackQuery(
        *target, config.style,
        StreamSeed(config.spec.seed, kAttackQuery + trial_id), config.attack);
    if (!text.ok()) return text.status();
    trial.query_text = *std::move(text);
    trial.target_id = target->id;
  } else {
    const BenignQuery& bq = corpus.benign[plan.source];
    trial.query_text = bq.text;
    trial.gold_id = bq.gold_id;
  }

  const auto query = corpus.embedder.EmbedOne(trial.query_text);
  auto scores = ScoreAll(store, query);
  if (!scores.ok()) return scores.status();
  auto defended = DefendedRetrieveScores(store, *scores, config.defense);
  if (!defended.ok()) return defended.status();
  trial.detection = std::move(defended->detection);
  trial.hidden_id = std::move(defended->hidden_id);
  trial.retrieval = std::move(defended->retrieval);

  if (target != nullptr) {
    std::vector<float> owned;
    std::span<const float> target_embedding;
    if (plan.kind == QueryKind::kMemberAttack) {
      target_embedding = store.embeddings().row(plan.source);
    } else {
      owned = corpus.embedder.EmbedOne(target->text);
      target_embedding = owned;
    }
    trial.attacker_score =
        AttackerScore(trial.retrieval, store, target_embedding, target->id,
                      config.attacker_mode);
  }

  std::vector<double> all(scores->scores.begin(), scores->scores.end());
  for (double s : all) {
    out.all_scores.Add(s);
    out.score_sum += s;
    out.score_sq_sum += s * s;
  }
  trial.p_full = PValue(all);
  all.erase(all.begin() +
            static_cast<std::ptrdiff_t>(trial.detection.profile.argmax_row));
  trial.p_loo = PValue(all);
  return out;
}

}  // namespace

absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& config) {
  if (auto s = config.Validate(); !s.ok()) return s;
  auto corpus_or = GenerateCorpus(config.spec);
  if (!corpus_or.ok()) return corpus_or.status();
  const SyntheticCorpus& corpus = *corpus_or;
  const CorpusStore& store = corpus.members;
  if (store.size() < kMinCorpus) {
    return absl::FailedPreconditionError(
        absl::StrCat("member store has ", store.size(),
                     " documents; detection needs >= ", kMinCorpus));
  }

  const size_t max_pairs = std::min(store.size(), corpus.non_members.size());
  const size_t pairs =
      config.counts.attack_pairs == 0 ? max_pairs : config.counts.attack_pairs;
  if (pairs < 2 || pairs > max_pairs) {
    return absl::InvalidArgumentError(absl::StrCat(
        "attack_pairs must lie in [2, ", max_pairs, "], got ", pairs));
  }
  const size_t benign = config.counts.detection_benign == 0
                            ? pairs / 2
                            : config.counts.detection_benign;
  if (benign > pairs || benign > corpus.benign.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "detection_benign must be <= attack_pairs (", pairs,
        ") and <= benign_queries (", corpus.benign.size(), "), got ", benign));
  }

  std::vector<size_t> member_rows(store.size());
  for (size_t i = 0; i < member_rows.size(); ++i) member_rows[i] = i;
  std::mt19937_64 member_rng(StreamSeed(config.spec.seed, kMemberSample));
  Shuffle(member_rows, member_rng);
  std::vector<size_t> non_member_idx(corpus.non_members.size());
  for (size_t i = 0; i < non_member_idx.size(); ++i) non_member_idx[i] = i;
  std::mt19937_64 non_member_rng(
      StreamSeed(config.spec.seed, kNonMemberSample));
  Shuffle(non_member_idx, non_member_rng);

  // Per side: the first half is the attacker's reference split.
  const size_t reference = pairs / 2;
  std::vector<TrialPlan> plans;
  plans.reserve(2 * pairs + benign);
  for (size_t i = 0; i < pairs; ++i) {
    plans.push_back(
        {QueryKind::kMemberAttack, member_rows[i],
         i < reference ? TrialSplit::kReference : TrialSplit::kEvaluation});
  }
  for (size_t i = 0; i < pairs; ++i) {
    plans.push_back(
        {QueryKind::kNonMemberAttack, non_member_idx[i],
         i < reference ? TrialSplit::kReference : TrialSplit::kEvaluation});
  }
  for (size_t i = 0; i < benign; ++i) {
    plans.push_back({QueryKind::kBenign, i, TrialSplit::kNone});
  }

  std::vector<absl::StatusOr<TrialOutput>> outputs(
      plans.size(), absl::UnknownError("not run"));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < plans.size(); i = next++) {
      outputs[i] = RunTrial(config, corpus, i, plans[i]);
    }
  };
  const auto workers = static_cast<size_t>(config.threads);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.attack_pairs = pairs;
  result.detection_benign = benign;
  result.trials.reserve(plans.size());
  ExperimentReport& report = result.report;
  double benign_sum = 0.0, benign_sq = 0.0;
  uint64_t benign_values = 0;
  for (auto& out : outputs) {
    if (!out.ok()) return out.status();
    AttackTrial& trial = out->trial;
    const auto k = static_cast<size_t>(trial.kind);
    result.histograms[k].all_scores.Merge(out->all_scores);
    result.histograms[k].s_max.Add(trial.detection.profile.s_max);
    if (trial.kind == QueryKind::kBenign) {
      benign_sum += out->score_sum;
      benign_sq += out->score_sq_sum;
      benign_values += store.size();
    }
    result.trials.push_back(std::move(trial));
  }

  // Attacker: calibrate on the reference split, score the evaluation split.
  std::vector<ScoredLabel> reference_set;
  std::vector<double> member_scores, non_member_scores;
  for (const auto& t : result.trials) {
    if (t.kind == QueryKind::kBenign) continue;
    const bool member = t.kind == QueryKind::kMemberAttack;
    (member ? member_scores : non_member_scores).push_back(t.attacker_score);
    if (t.split == TrialSplit::kReference) {
      reference_set.push_back({t.attacker_score, member});
    }
  }
  auto threshold = CalibrateAttacker(reference_set);
  if (!threshold.ok()) return threshold.status();
  report.attacker_threshold = *threshold;
  for (auto& t : result.trials) {
    if (t.kind == QueryKind::kBenign) continue;
    t.attacker_decision = t.attacker_score > *threshold;
    if (t.split == TrialSplit::kEvaluation) {
      report.attack_counts.Add(t.attacker_decision,
                               t.kind == QueryKind::kMemberAttack);
    }
  }
  auto attack = ClassificationMetrics(report.attack_counts);
  if (!attack.ok()) return attack.status();
  report.attack = *attack;
  auto ks = KsTwoSample(member_scores, non_member_scores);
  if (!ks.ok()) return ks.status();
  report.attack.ks = *ks;

  // Detection: every member attack against an equal number of negatives,
  // all benign trials first, then non-member attacks.
  size_t non_member_negatives = pairs - benign;
  for (auto& t : result.trials) {
    if (t.kind == QueryKind::kMemberAttack || t.kind == QueryKind::kBenign) {
      t.in_detection_set = true;
    } else if (non_member_negatives > 0) {
      t.in_detection_set = true;
      --non_member_negatives;
    }
    if (t.in_detection_set) {
      report.detection_counts.Add(t.detection.detected,
                                  t.kind == QueryKind::kMemberAttack);
    }
  }
  auto detection = ClassificationMetrics(report.detection_counts);
  if (!detection.ok()) return detection.status();
  report.detection = *detection;

  std::array<std::vector<double>, 3> p_full, p_loo;
  std::array<size_t, 3> p_full_missing{}, p_loo_missing{};
  for (const auto& t : result.trials) {
    const auto k = static_cast<size_t>(t.kind);
    KindSummary& s = report.kinds[k];
    ++s.count;
    if (t.detection.detected) ++s.detected;
    if (t.p_full)
      p_full[k].push_back(*t.p_full);
    else
      ++p_full_missing[k];
    if (t.p_loo)
      p_loo[k].push_back(*t.p_loo);
    else
      ++p_loo_missing[k];
  }
  for (size_t k = 0; k < 3; ++k) {
    auto summarize = [](const std::vector<double>& ps, size_t missing) {
      PValueSummary s;
      s.used = ps.size();
      s.dropped = missing;
      for (double p : ps) s.mean_p += p;
      if (!ps.empty()) s.mean_p /= static_cast<double>(ps.size());
      return s;
    };
    report.kinds[k].p_full = summarize(p_full[k], p_full_missing[k]);
    report.kinds[k].p_loo = summarize(p_loo[k], p_loo_missing[k]);
  }

  // Utility over the whole benign pool: plain vs defended retrieval of the
  // same scan.
  UtilityReport& utility = report.utility;
  std::vector<std::pair<RetrievalResult, std::string>> plain_hits,
      defended_hits;
  std::vector<AnswerWithGold> plain_answers, defended_answers;
  for (const BenignQuery& bq : corpus.benign) {
    const auto query = corpus.embedder.EmbedOne(bq.text);
    auto scores = ScoreAll(store, query);
    if (!scores.ok()) return scores.status();
    auto defended = DefendedRetrieveScores(store, *scores, config.defense);
    if (!defended.ok()) return defended.status();
    RetrievalResult plain = TopKRows(store, *scores, config.defense.k);
    ++utility.queries;
    if (defended->detection.detected) {
      ++utility.detected;
    } else if (defended->retrieval == plain) {
      ++utility.identical_when_not_detected;
    }
    auto plain_prompt = AssemblePrompt(bq.text, plain, store);
    auto defended_prompt = AssemblePrompt(bq.text, defended->retrieval, store);
    if (!plain_prompt.ok()) return plain_prompt.status();
    if (!defended_prompt.ok()) return defended_prompt.status();
    plain_answers.push_back(
        {TemplateGenerate(*plain_prompt), {bq.gold_answer}});
    defended_answers.push_back(
        {TemplateGenerate(*defended_prompt), {bq.gold_answer}});
    plain_hits.emplace_back(std::move(plain), bq.gold_id);
    defended_hits.emplace_back(std::move(defended->retrieval), bq.gold_id);
  }
  if (!corpus.benign.empty()) {
    utility.r_at_k_plain = *RecallAtK(plain_hits);
    utility.r_at_k_defended = *RecallAtK(defended_hits);
    utility.em_plain = *EmContainment(plain_answers);
    utility.em_defended = *EmContainment(defended_answers);
    report.attack.r_at_k = utility.r_at_k_defended;
    report.attack.em = utility.em_defended;
  }

  if (benign_values > 0) {
    SimilarityProfile pooled;
    pooled.n = store.size();
    pooled.mu_q = benign_sum / static_cast<double>(benign_values);
    pooled.sigma_q =
        std::sqrt(std::max(0.0, benign_sq / static_cast<double>(benign_values) -
                                    pooled.mu_q * pooled.mu_q));
    auto tau =
        ComputeThreshold(pooled, config.defense.rho, config.defense.variant);
    if (tau.ok()) report.pooled_benign_tau = tau->tau;
  }
  return result;
}

}  // namespace mirabel
