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

#ifndef MIRABEL_REPORT_IO_H_
#define MIRABEL_REPORT_IO_H_

#include <string>

#include "absl/status/status.h"
#include "mirabel/attacksim.h"
#include "mirabel/detector.h"
#include "nlohmann/json.hpp"

namespace mirabel {

// Every JSON document written by this project carries this version.
inline constexpr int kSchemaVersion = 1;

nlohmann::ordered_json ProfileToJson(const SimilarityProfile& profile);
nlohmann::ordered_json DetectionToJson(const DetectionOutcome& outcome);
nlohmann::ordered_json MetricsToJson(const MetricsReport& metrics);
nlohmann::ordered_json TrialToJson(const AttackTrial& trial);
// Full report document including the experiment configuration.
nlohmann::ordered_json ReportToJson(const ExperimentConfig& config,
                                    const ExperimentResult& result);

// One trial per line.
std::string TrialsToJsonl(const ExperimentResult& result);

// Rows are query kinds, columns the fixed bins; each row also states its
// total. `s_max` selects the per-query maximum histogram instead of the
// pooled score histogram.
std::string HistogramCsv(const ExperimentResult& result, bool s_max);

}  // namespace mirabel

#endif  // MIRABEL_REPORT_IO_H_
