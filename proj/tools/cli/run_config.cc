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

#include "cli/run_config.h"

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace mirabel::cli {

using nlohmann::json;

namespace {

using Setter = std::function<absl::Status(const json&, RunConfig&)>;

absl::Status TypeError(const std::string& key, std::string_view expected,
                       const json& value) {
  return absl::InvalidArgumentError(absl::StrCat("config.", key, ": expected ",
                                                 std::string(expected),
                                                 ", got ", value.dump()));
}

Setter Size(const std::string& key, std::function<size_t&(RunConfig&)> field) {
  return [key, field](const json& v, RunConfig& c) -> absl::Status {
    if (!v.is_number_integer() || v.get<int64_t>() < 0) {
      return TypeError(key, "a non-negative integer", v);
    }
    field(c) = v.get<size_t>();
    return absl::OkStatus();
  };
}

Setter Real(const std::string& key, std::function<double&(RunConfig&)> field) {
  return [key, field](const json& v, RunConfig& c) -> absl::Status {
    if (!v.is_number()) return TypeError(key, "a number", v);
    field(c) = v.get<double>();
    return absl::OkStatus();
  };
}

Setter Flag(const std::string& key, std::function<bool&(RunConfig&)> field) {
  return [key, field](const json& v, RunConfig& c) -> absl::Status {
    if (!v.is_boolean()) return TypeError(key, "a boolean", v);
    field(c) = v.get<bool>();
    return absl::OkStatus();
  };
}

template <typename Enum>
Setter Choice(const std::string& key, std::string_view choices,
              std::function<std::optional<Enum>(std::string_view)> parse,
              std::function<Enum&(RunConfig&)> field) {
  return [key, choices = std::string(choices), parse, field](
             const json& v, RunConfig& c) -> absl::Status {
    if (!v.is_string()) return TypeError(key, "a string", v);
    std::optional<Enum> parsed = parse(v.get<std::string>());
    if (!parsed) return TypeError(key, "one of " + choices, v);
    field(c) = *parsed;
    return absl::OkStatus();
  };
}

const std::vector<std::pair<std::string, Setter>>& Fields() {
  static const auto* fields = [] {
    auto* f = new std::vector<std::pair<std::string, Setter>>;
    auto add = [f](const std::string& key, Setter s) {
      f->emplace_back(key, std::move(s));
    };
    add("seed", [](const json& v, RunConfig& c) -> absl::Status {
      if (!v.is_number_integer() || v.get<int64_t>() < 0) {
        return TypeError("seed", "a non-negative integer", v);
      }
      c.experiment.spec.seed = v.get<uint64_t>();
      return absl::OkStatus();
    });
    add("topics", Size("topics", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.topics;
        }));
    add("docs_per_topic", Size("docs_per_topic", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.docs_per_topic;
        }));
    add("dim", Size("dim", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.dim;
        }));
    add("doc_token_len", Size("doc_token_len", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.doc_token_len;
        }));
    add("member_fraction", Real("member_fraction", [](RunConfig& c) -> double& {
          return c.experiment.spec.member_fraction;
        }));
    add("benign_queries", Size("benign_queries", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.benign_queries;
        }));
    add("topic_vocab", Size("topic_vocab", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.topic_vocab;
        }));
    add("common_vocab", Size("common_vocab", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.common_vocab;
        }));
    add("topic_weight", Real("topic_weight", [](RunConfig& c) -> double& {
          return c.experiment.spec.topic_weight;
        }));
    add("sentence_len", Size("sentence_len", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.sentence_len;
        }));
    add("benign_query_len",
        Size("benign_query_len", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.benign_query_len;
        }));
    add("benign_gold_tokens",
        Size("benign_gold_tokens", [](RunConfig& c) -> size_t& {
          return c.experiment.spec.benign_gold_tokens;
        }));
    add("style",
        Choice<AttackStyle>(
            "style", "halfdoc, masked, paraphrase", ParseAttackStyle,
            [](RunConfig& c) -> AttackStyle& { return c.experiment.style; }));
    add("mask_count", Size("mask_count", [](RunConfig& c) -> size_t& {
          return c.experiment.attack.mask_count;
        }));
    add("paraphrase_fraction",
        Real("paraphrase_fraction", [](RunConfig& c) -> double& {
          return c.experiment.attack.paraphrase_fraction;
        }));
    add("rho", Real("rho", [](RunConfig& c) -> double& {
          return c.experiment.defense.rho;
        }));
    add("variant",
        Choice<ThresholdVariant>("variant", "alg1, exact", ParseVariant,
                                 [](RunConfig& c) -> ThresholdVariant& {
                                   return c.experiment.defense.variant;
                                 }));
    add("k", Size("k", [](RunConfig& c) -> size_t& {
          return c.experiment.defense.k;
        }));
    add("defense", Flag("defense", [](RunConfig& c) -> bool& {
          return c.experiment.defense.enabled;
        }));
    add("diagnose_second_pass",
        Flag("diagnose_second_pass", [](RunConfig& c) -> bool& {
          return c.experiment.defense.diagnose_second_pass;
        }));
    add("attacker_mode",
        Choice<AttackerMode>("attacker_mode", "maxsim, containtopk",
                             ParseAttackerMode,
                             [](RunConfig& c) -> AttackerMode& {
                               return c.experiment.attacker_mode;
                             }));
    add("attack_pairs", Size("attack_pairs", [](RunConfig& c) -> size_t& {
          return c.experiment.counts.attack_pairs;
        }));
    add("detection_benign",
        Size("detection_benign", [](RunConfig& c) -> size_t& {
          return c.experiment.counts.detection_benign;
        }));
    add("threads", [](const json& v, RunConfig& c) -> absl::Status {
      if (!v.is_number_integer() || v.get<int64_t>() < 1 ||
          v.get<int64_t>() > std::numeric_limits<int>::max()) {
        return TypeError("threads", "a positive integer", v);
      }
      c.experiment.threads = v.get<int>();
      return absl::OkStatus();
    });
    add("out", [](const json& v, RunConfig& c) -> absl::Status {
      if (!v.is_string() || v.get<std::string>().empty()) {
        return TypeError("out", "a non-empty string", v);
      }
      c.out_dir = v.get<std::string>();
      return absl::OkStatus();
    });
    return f;
  }();
  return *fields;
}

}  // namespace

const std::vector<std::string>& RunConfigKeys() {
  static const auto* keys = [] {
    auto* k = new std::vector<std::string>;
    for (const auto& [key, setter] : Fields()) k->push_back(key);
    return k;
  }();
  return *keys;
}

absl::Status ApplyConfigObject(const json& object, RunConfig& config) {
  if (!object.is_object()) {
    return absl::InvalidArgumentError(
        "config: top level must be a JSON object");
  }
  std::vector<std::string> unknown;
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const auto& [name, setter] : Fields()) {
      if (name != key) continue;
      known = true;
      if (absl::Status s = setter(value, config); !s.ok()) return s;
      break;
    }
    if (!known) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "config: unknown key(s) ", absl::StrJoin(unknown, ", "),
        "; accepted keys: ", absl::StrJoin(RunConfigKeys(), ", ")));
  }
  return absl::OkStatus();
}

absl::Status ValidateRunConfig(const RunConfig& config) {
  if (absl::Status s = config.experiment.Validate(); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat("config.", std::string(s.message())));
  }
  return absl::OkStatus();
}

absl::StatusOr<RunConfig> LoadRunConfig(std::string_view text,
                                        const json& overrides) {
  RunConfig config;
  if (!text.empty()) {
    json parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
      return absl::InvalidArgumentError("config: not valid JSON");
    }
    if (absl::Status s = ApplyConfigObject(parsed, config); !s.ok()) return s;
  }
  if (!overrides.is_null()) {
    if (absl::Status s = ApplyConfigObject(overrides, config); !s.ok()) {
      return s;
    }
  }
  if (absl::Status s = ValidateRunConfig(config); !s.ok()) return s;
  return config;
}

nlohmann::ordered_json RunConfigToJson(const RunConfig& config) {
  const ExperimentConfig& e = config.experiment;
  const SyntheticSpec& s = e.spec;
  return {{"seed", s.seed},
          {"topics", s.topics},
          {"docs_per_topic", s.docs_per_topic},
          {"dim", s.dim},
          {"doc_token_len", s.doc_token_len},
          {"member_fraction", s.member_fraction},
          {"benign_queries", s.benign_queries},
          {"topic_vocab", s.topic_vocab},
          {"common_vocab", s.common_vocab},
          {"topic_weight", s.topic_weight},
          {"sentence_len", s.sentence_len},
          {"benign_query_len", s.benign_query_len},
          {"benign_gold_tokens", s.benign_gold_tokens},
          {"style", AttackStyleName(e.style)},
          {"mask_count", e.attack.mask_count},
          {"paraphrase_fraction", e.attack.paraphrase_fraction},
          {"rho", e.defense.rho},
          {"variant", VariantName(e.defense.variant)},
          {"k", e.defense.k},
          {"defense", e.defense.enabled},
          {"diagnose_second_pass", e.defense.diagnose_second_pass},
          {"attacker_mode", AttackerModeName(e.attacker_mode)},
          {"attack_pairs", e.counts.attack_pairs},
          {"detection_benign", e.counts.detection_benign},
          {"threads", e.threads},
          {"out", config.out_dir}};
}

}  // namespace mirabel::cli
