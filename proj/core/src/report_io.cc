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

#include "mirabel/report_io.h"

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace mirabel {

using nlohmann::ordered_json;

namespace {

template <typename T>
ordered_json Optional(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json CountsToJson(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

ordered_json PValuesToJson(const PValueSummary& s) {
  return {{"mean_p", s.mean_p}, {"used", s.used}, {"dropped", s.dropped}};
}

ordered_json HitsToJson(const RetrievalResult& r) {
  ordered_json hits = ordered_json::array();
  for (const auto& h : r.hits) {
    hits.push_back({{"id", h.id}, {"row", h.row}, {"score", h.score}});
  }
  return hits;
}

}  // namespace

nlohmann::ordered_json ProfileToJson(const SimilarityProfile& p) {
  ordered_json j = {{"n", p.n},
                    {"s_max", p.s_max},
                    {"argmax_row", p.argmax_row},
                    {"argmax_id", p.argmax_id},
                    {"mu_q", p.mu_q},
                    {"sigma_q", p.sigma_q}};
  return j;
}

nlohmann::ordered_json DetectionToJson(const DetectionOutcome& o) {
  ordered_json j;
  j["detected"] = o.detected;
  j["target_id"] = Optional(o.target_id);
  j["s_max"] = o.profile.s_max;
  j["mu_q"] = o.profile.mu_q;
  j["sigma_q"] = o.profile.sigma_q;
  j["tau"] = o.threshold.tau;
  j["mu_n"] = o.threshold.mu_n;
  j["beta_n"] = o.threshold.beta_n;
  j["c"] = o.threshold.c;
  j["rho"] = o.threshold.rho;
  j["variant"] = VariantName(o.threshold.variant);
  j["n"] = o.profile.n;
  j["argmax_id"] = o.profile.argmax_id;
  return j;
}

nlohmann::ordered_json MetricsToJson(const MetricsReport& m) {
  ordered_json j = {{"accuracy", m.accuracy},
                    {"adjusted_accuracy", m.adjusted_accuracy},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1}};
  j["ks"] = Optional(m.ks);
  j["r_at_k"] = Optional(m.r_at_k);
  j["em"] = Optional(m.em);
  return j;
}

nlohmann::ordered_json TrialToJson(const AttackTrial& t) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["trial_id"] = t.trial_id;
  j["kind"] = QueryKindName(t.kind);
  j["split"] = TrialSplitName(t.split);
  j["query_text"] = t.query_text;
  j["target_id"] = Optional(t.target_id);
  j["gold_id"] = Optional(t.gold_id);
  if (t.kind == QueryKind::kBenign) {
    j["attacker_score"] = nullptr;
    j["attacker_decision"] = nullptr;
  } else {
    j["attacker_score"] = t.attacker_score;
    j["attacker_decision"] = t.attacker_decision;
  }
  j["in_detection_set"] = t.in_detection_set;
  j["detection"] = DetectionToJson(t.detection);
  j["hidden_id"] = Optional(t.hidden_id);
  j["hits"] = HitsToJson(t.retrieval);
  j["p_full"] = Optional(t.p_full);
  j["p_loo"] = Optional(t.p_loo);
  return j;
}

nlohmann::ordered_json ReportToJson(const ExperimentConfig& config,
                                    const ExperimentResult& result) {
  const ExperimentReport& r = result.report;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  const SyntheticSpec& s = config.spec;
  j["config"] = {{"topics", s.topics},
                 {"docs_per_topic", s.docs_per_topic},
                 {"dim", s.dim},
                 {"doc_token_len", s.doc_token_len},
                 {"seed", s.seed},
                 {"member_fraction", s.member_fraction},
                 {"benign_queries", s.benign_queries},
                 {"topic_vocab", s.topic_vocab},
                 {"common_vocab", s.common_vocab},
                 {"topic_weight", s.topic_weight},
                 {"sentence_len", s.sentence_len},
                 {"benign_query_len", s.benign_query_len},
                 {"benign_gold_tokens", s.benign_gold_tokens},
                 {"style", AttackStyleName(config.style)},
                 {"mask_count", config.attack.mask_count},
                 {"paraphrase_fraction", config.attack.paraphrase_fraction},
                 {"rho", config.defense.rho},
                 {"variant", VariantName(config.defense.variant)},
                 {"k", config.defense.k},
                 {"defense", config.defense.enabled},
                 {"diagnose_second_pass", config.defense.diagnose_second_pass},
                 {"attacker_mode", AttackerModeName(config.attacker_mode)},
                 {"attack_pairs", result.attack_pairs},
                 {"detection_benign", result.detection_benign}};
  j["detection"] = MetricsToJson(r.detection);
  j["detection"]["counts"] = CountsToJson(r.detection_counts);
  j["attack"] = MetricsToJson(r.attack);
  j["attack"]["counts"] = CountsToJson(r.attack_counts);
  j["attack"]["threshold"] = r.attacker_threshold;
  ordered_json kinds = ordered_json::object();
  for (QueryKind k : kAllQueryKinds) {
    const KindSummary& ks = r.kind(k);
    kinds[std::string(QueryKindName(k))] = {
        {"count", ks.count},
        {"detected", ks.detected},
        {"detection_rate", ks.count == 0 ? 0.0
                                         : static_cast<double>(ks.detected) /
                                               static_cast<double>(ks.count)},
        {"normality_full", PValuesToJson(ks.p_full)},
        {"normality_without_max", PValuesToJson(ks.p_loo)}};
  }
  j["kinds"] = kinds;
  const UtilityReport& u = r.utility;
  j["utility"] = {
      {"queries", u.queries},
      {"detected", u.detected},
      {"identical_when_not_detected", u.identical_when_not_detected},
      {"r_at_k_plain", u.r_at_k_plain},
      {"r_at_k_defended", u.r_at_k_defended},
      {"em_plain", u.em_plain},
      {"em_defended", u.em_defended}};
  j["pooled_benign_tau"] = Optional(r.pooled_benign_tau);
  return j;
}

std::string TrialsToJsonl(const ExperimentResult& result) {
  std::string out;
  for (const auto& t : result.trials) {
    out += TrialToJson(t).dump();
    out += '\n';
  }
  return out;
}

std::string HistogramCsv(const ExperimentResult& result, bool s_max) {
  std::string out = "kind,total";
  for (size_t b = 0; b < ScoreHistogram::kBins; ++b) {
    absl::StrAppendFormat(&out, ",%.2f", ScoreHistogram::BinLow(b));
  }
  out += '\n';
  for (QueryKind k : kAllQueryKinds) {
    const auto& h = s_max
                        ? result.histograms[static_cast<size_t>(k)].s_max
                        : result.histograms[static_cast<size_t>(k)].all_scores;
    absl::StrAppend(&out, std::string(QueryKindName(k)), ",", h.total());
    for (uint64_t c : h.counts()) absl::StrAppend(&out, ",", c);
    out += '\n';
  }
  return out;
}

}  // namespace mirabel
