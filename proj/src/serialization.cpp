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

#include "grnboost/serialization.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "grnboost/common.hpp"

namespace grnboost {

namespace {

using nlohmann::json;

json decimal(double v) { return format_double(v); }

double read_decimal(const json& j, const char* what) {
  if (!j.is_string()) {
    throw DataError(std::string("model: '") + what + "' must be a decimal string");
  }
  try {
    return parse_double(j.get<std::string>());
  } catch (const InvalidArgument&) {
    throw DataError(std::string("model: bad number in '") + what + "'");
  }
}

json decimals(std::span<const double> values) {
  json out = json::array();
  for (double v : values) out.push_back(decimal(v));
  return out;
}

std::vector<double> read_decimals(const json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string("model: '") + what + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(read_decimal(v, what));
  return out;
}

// Finite numbers as JSON numbers, others as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json optional_number(const std::optional<double>& v) {
  return v ? number(*v) : json(nullptr);
}

std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

template <typename T>
T require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw DataError(std::string("model: missing '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("model: wrong type for '") + key + "'");
  }
}

}  // namespace

json tree_to_json(const Tree& tree) {
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes()) {
    json node;
    if (n.is_leaf()) {
      node["leaf"] = decimals(n.weight);
    } else {
      node["feature"] = n.feature;
      node["threshold"] = decimal(n.threshold);
      node["left"] = n.left;
      node["right"] = n.right;
      node["gain"] = decimal(n.gain);
    }
    node["depth"] = n.depth;
    node["n_samples"] = n.n_samples;
    nodes.push_back(std::move(node));
  }
  return json{{"max_depth", tree.max_depth()}, {"nodes", std::move(nodes)}};
}

Tree tree_from_json(const json& doc, int output_dim, int n_features) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw DataError("model: tree without a node array");
  }
  std::vector<TreeNode> nodes;
  for (const auto& j : doc["nodes"]) {
    TreeNode n;
    n.depth = require<int>(j, "depth");
    n.n_samples = require<int>(j, "n_samples");
    if (j.contains("leaf")) {
      n.weight = read_decimals(j["leaf"], "leaf");
    } else {
      n.feature = require<int>(j, "feature");
      n.threshold = read_decimal(j.at("threshold"), "threshold");
      n.left = require<int>(j, "left");
      n.right = require<int>(j, "right");
      n.gain = j.contains("gain") ? read_decimal(j["gain"], "gain") : 0.0;
    }
    nodes.push_back(std::move(n));
  }
  try {
    return Tree(output_dim, n_features, require<int>(doc, "max_depth"),
                std::move(nodes));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

json model_to_json(const Ensemble& e) {
  const LossModel& loss = e.loss;
  json trees = json::array();
  for (std::size_t t = 0; t < e.trees.size(); ++t) {
    json tree = tree_to_json(e.trees[t]);
    tree["eta"] = decimal(e.etas[t]);
    trees.push_back(std::move(tree));
  }
  return json{
      {"format", kModelFormat},
      {"version", kModelVersion},
      {"loss",
       {{"name", loss.name()},
        {"classes", loss.output_dim()},
        {"l2_ridge", decimal(loss.l2_ridge())},
        {"drift_scale", decimal(loss.drift_variant().scale)},
        {"drift_power", loss.drift_variant().power}}},
      {"output_dim", loss.output_dim()},
      {"n_features", e.n_features},
      {"feature_names", e.feature_names},
      {"initial_prediction", decimals(e.initial_prediction)},
      {"trees", std::move(trees)},
  };
}

Ensemble model_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != kModelFormat) {
    throw DataError("model: not a grnboost-ensemble file");
  }
  if (require<int>(doc, "version") != kModelVersion) {
    throw DataError("model: unsupported version");
  }
  const json& loss = doc.at("loss");
  Ensemble e;
  try {
    e.loss = LossModel::from_name(require<std::string>(loss, "name"),
                                  require<int>(loss, "classes"),
                                  read_decimal(loss.at("l2_ridge"), "l2_ridge"),
                                  read_decimal(loss.at("drift_scale"), "drift_scale"),
                                  require<int>(loss, "drift_power"));
  } catch (const InvalidArgument& ex) {
    throw DataError(std::string("model: ") + ex.what());
  }
  const int k = require<int>(doc, "output_dim");
  if (k != e.loss.output_dim()) throw DataError("model: output_dim disagrees with loss");
  e.n_features = require<int>(doc, "n_features");
  e.feature_names = require<std::vector<std::string>>(doc, "feature_names");
  e.initial_prediction = read_decimals(doc.at("initial_prediction"), "initial_prediction");
  if (static_cast<int>(e.initial_prediction.size()) != k) {
    throw DataError("model: initial_prediction has wrong length");
  }
  for (const auto& t : doc.at("trees")) {
    e.trees.push_back(tree_from_json(t, k, e.n_features));
    e.etas.push_back(read_decimal(t.at("eta"), "eta"));
  }
  return e;
}

void save_model(const Ensemble& ensemble, const std::string& path) {
  write_text_file(path, model_to_json(ensemble).dump(1) + "\n");
}

Ensemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open model");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  return model_from_json(doc);
}

void write_metrics_csv(const std::vector<IterationRecord>& records,
                       std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const IterationRecord& r : records) {
    out << r.k << ',' << format_double(r.train_loss) << ',' << cell(r.valid_loss)
        << ',' << format_double(r.grad_norm) << ',' << format_double(r.lambda_k)
        << ',' << cell(r.theta_k) << ',' << cell(r.gamma_k) << ','
        << (r.edge_violated ? 1 : 0) << ',' << cell(r.decrement_slack()) << ','
        << cell(r.growth_slack()) << '\n';
  }
}

json record_to_json(const IterationRecord& r) {
  json residuals = json::object();
  for (const auto& [name, value] : r.identity_residuals) residuals[name] = number(value);
  return json{
      {"k", r.k},
      {"scheme", scheme_name(r.scheme)},
      {"loss_before", number(r.loss_before)},
      {"train_loss", number(r.train_loss)},
      {"valid_loss", optional_number(r.valid_loss)},
      {"grad_norm", number(r.grad_norm)},
      {"lambda_k", number(r.lambda_k)},
      {"theta_k", optional_number(r.theta_k)},
      {"theta_raw", optional_number(r.theta_raw)},
      {"gamma_k", optional_number(r.gamma_k)},
      {"edge_violated", r.edge_violated},
      {"weak_norm", optional_number(r.weak_norm)},
      {"weak_norm_K_sq", optional_number(r.weak_norm_K_sq)},
      {"grad_dot_weak", optional_number(r.grad_dot_weak)},
      {"weak_norm_H", optional_number(r.weak_norm_H)},
      {"exact_norm_H", optional_number(r.exact_norm_H)},
      {"decrement_lhs", number(r.decrement_lhs)},
      {"decrement_rhs", optional_number(r.decrement_rhs)},
      {"decrement_slack", optional_number(r.decrement_slack())},
      {"growth_lhs", optional_number(r.growth_lhs)},
      {"growth_rhs", optional_number(r.growth_rhs)},
      {"growth_slack", optional_number(r.growth_slack())},
      {"identity_residuals", std::move(residuals)},
      {"warnings", r.warnings},
  };
}

void write_metrics_jsonl(const std::vector<IterationRecord>& records,
                         std::ostream& out) {
  for (const IterationRecord& r : records) out << record_to_json(r).dump() << '\n';
}

json config_to_json(const BoostConfig& c) {
  return json{
      {"scheme", scheme_name(c.scheme)},
      {"eta", c.eta},
      {"lambda_base", c.lambda_base},
      {"M", c.M ? json(*c.M) : json(nullptr)},
      {"C", c.C},
      {"rounds", c.n_rounds},
      {"depth", c.max_depth},
      {"min_samples_leaf", c.min_samples_leaf},
      {"diagnostics", diagnostics_name(c.diagnostics)},
      {"seed", c.seed},
      {"init", init_mode_name(c.init)},
      {"fixed_scalar_lambda", c.regularization == LeafRegularization::FixedScalar},
      {"diagonal_hessian", c.diagonal_hessian},
  };
}

json manifest_to_json(const RunManifest& m) {
  json phases = json::object();
  for (const auto& [name, seconds] : m.phase_seconds) phases[name] = seconds;
  return json{
      {"tool", "grnboost"},
      {"tool_version", m.tool_version},
      {"config", m.config},
      {"loss", m.loss},
      {"dataset_fingerprint", m.dataset_fingerprint},
      {"wall_clock_seconds", std::move(phases)},
      {"status", m.status},
      {"exit_status", m.exit_status},
  };
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace grnboost
