// Copyright 2026 The grnboost Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// File formats. Real numbers in model files are decimal strings that parse
// back to the identical double.
//
// Model (JSON):
//   { "format": "grnboost-ensemble", "version": 1,
//     "loss": {"name", "classes", "l2_ridge", "drift_scale", "drift_power"},
//     "output_dim", "n_features", "feature_names": [...],
//     "initial_prediction": ["..."],
//     "trees": [ {"eta": "...", "max_depth": d,
//                 "nodes": [ {"feature", "threshold", "left", "right",
//                             "depth", "n_samples", "gain"}
//                          | {"leaf": ["..."], "depth", "n_samples"} ]} ] }
//
// Metrics: CSV with the fixed header kMetricsHeader, one row per round, and
// JSONL with one object per round. Undefined values are empty CSV cells and
// JSON nulls; non-finite values are written as "inf", "-inf" or "nan".

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "grnboost/boosting.hpp"
#include "json.hpp"

namespace grnboost {

inline constexpr const char* kModelFormat = "grnboost-ensemble";
inline constexpr int kModelVersion = 1;
inline constexpr const char* kMetricsHeader =
    "k,train_loss,valid_loss,grad_norm,lambda_k,theta_k,gamma_k,"
    "edge_violated,decrement_slack,growth_slack";

nlohmann::json model_to_json(const Ensemble& ensemble);
/// Throws DataError on malformed or unsupported files.
Ensemble model_from_json(const nlohmann::json& doc);

void save_model(const Ensemble& ensemble, const std::string& path);
Ensemble load_model(const std::string& path);

nlohmann::json tree_to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& doc, int output_dim, int n_features);

void write_metrics_csv(const std::vector<IterationRecord>& records,
                       std::ostream& out);
void write_metrics_jsonl(const std::vector<IterationRecord>& records,
                         std::ostream& out);
nlohmann::json record_to_json(const IterationRecord& record);

nlohmann::json config_to_json(const BoostConfig& config);

struct RunManifest {
  nlohmann::json config;  // resolved values
  std::string dataset_fingerprint;
  nlohmann::json loss;
  std::string tool_version;
  std::map<std::string, double> phase_seconds;
  int exit_status = 0;
  std::string status;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);

/// Writes `text` to `path`, throwing DataError on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace grnboost
