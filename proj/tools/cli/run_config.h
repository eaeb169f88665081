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

#ifndef MIRABEL_TOOLS_CLI_RUN_CONFIG_H_
#define MIRABEL_TOOLS_CLI_RUN_CONFIG_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "mirabel/attacksim.h"
#include "nlohmann/json.hpp"

namespace mirabel::cli {

// Everything `mirabel simulate` needs. The config file is one flat JSON
// object whose keys are listed by RunConfigKeys(); absent keys keep their
// defaults.
struct RunConfig {
  ExperimentConfig experiment;
  std::string out_dir = "mirabel_out";
};

// Accepted keys, in documentation order.
const std::vector<std::string>& RunConfigKeys();

// Applies every key of `object` on top of `config`. Unknown keys and values
// of the wrong type fail with kInvalidArgument naming the key. The result is
// not validated as a whole; see ValidateRunConfig.
absl::Status ApplyConfigObject(const nlohmann::json& object, RunConfig& config);

// Cross-field checks, reported with the offending key.
absl::Status ValidateRunConfig(const RunConfig& config);

// Parses config text and layers `overrides` (same key space, typically built
// from command-line flags) on top. An empty `text` means defaults only.
absl::StatusOr<RunConfig> LoadRunConfig(std::string_view text,
                                        const nlohmann::json& overrides);

nlohmann::ordered_json RunConfigToJson(const RunConfig& config);

}  // namespace mirabel::cli

#endif  // MIRABEL_TOOLS_CLI_RUN_CONFIG_H_
