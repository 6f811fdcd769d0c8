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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "grnboost/boosting.hpp"
#include "grnboost/common.hpp"
#include "grnboost/data_io.hpp"
#include "grnboost/lab1d.hpp"
#include "grnboost/oracles.hpp"
#include "grnboost/serialization.hpp"
#include "json.hpp"

namespace grnboost::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct TrainOptions {
  std::string data;
  std::string synth;
  int n = 1000;
  int q = 8;
  std::string target;
  bool no_header = false;
  std::string loss = "mse";
  int classes = 3;
  double ridge = 0.0;
  double drift_scale = 1.0;
  int drift_power = 3;
  std::string scheme = "grn";
  double eta = 1.0;
  int rounds = 100;
  int depth = 4;
  int min_samples_leaf = 1;
  double lambda_base = 0.0;
  std::optional<double> M;
  double C = 1.0;
  std::string diagnostics = "full";
  double valid_fraction = 0.0;
  std::uint64_t seed = 0;
  std::string init = "auto";
  bool fixed_scalar_lambda = false;
  bool diagonal_hessian = false;
  int threads = 1;
  std::string out;
  std::string config;
};

void add_train_options(CLI::App* sub, TrainOptions& o) {
  sub->add_option("--config", o.config,
                  "JSON file of option values; command-line flags win");
  sub->add_option("--data", o.data, "training CSV (target in the last column unless --target)");
  sub->add_option("--synth", o.synth,
                  "synthetic data instead of --data: regression_smooth, "
                  "binary_blobs, multiclass_blobs, charbonnier_wide");
  sub->add_option("--n", o.n, "synthetic sample count");
  sub->add_option("--q", o.q, "synthetic feature count");
  sub->add_option("--target", o.target, "target column name or zero-based index");
  sub->add_flag("--no-header", o.no_header, "CSV has no header row");
  sub->add_option("--loss", o.loss,
                  "mse, bce, cce, charbonnier, logbarrier, power, arctan, drift-charbonnier");
  sub->add_option("--classes", o.classes, "class count for cce");
  sub->add_option("--ridge", o.ridge, "per-sample l2 ridge folded into the loss");
  sub->add_option("--drift-scale", o.drift_scale, "scale C of drift losses");
  sub->add_option("--drift-power", o.drift_power, "m of the power drift loss (3..8)");
  sub->add_option("--scheme", o.scheme, "first-order, newton or grn");
  sub->add_option("--eta", o.eta, "step size in (0, 2]");
  sub->add_option("--rounds", o.rounds, "boosting rounds");
  sub->add_option("--depth", o.depth, "maximum tree depth");
  sub->add_option("--min-samples-leaf", o.min_samples_leaf, "minimum samples per leaf");
  sub->add_option("--lambda-base", o.lambda_base, "base l2 leaf regularization");
  sub->add_option("--M", o.M,
                  "Hessian Lipschitz constant for grn (default: M0 * sqrt(N))");
  sub->add_option("--C", o.C, "multiplier of sqrt(M ||g||) in lambda_k, >= 1");
  sub->add_option("--diagnostics", o.diagnostics, "off, cheap or full");
  sub->add_option("--valid-fraction", o.valid_fraction, "held-out fraction in [0, 1)");
  sub->add_option("--seed", o.seed, "seed for synthetic data and the split");
  sub->add_option("--init", o.init, "auto or zero initial prediction");
  sub->add_flag("--fixed-scalar-lambda", o.fixed_scalar_lambda,
                "regularize leaves with lambda instead of |leaf| * lambda");
  sub->add_flag("--diagonal-hessian", o.diagonal_hessian,
                "drop off-diagonal Hessian entries in leaf solves");
  sub->add_option("--threads", o.threads, "worker threads (results do not depend on it)");
  sub->add_option("--out", o.out, "output directory");
}

// Turns a JSON object of option values into command-line tokens.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open config");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw DataError(path + ": config must be a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : doc.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "--config") throw InvalidArgument("config files cannot nest");
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_string()) {
      tokens.push_back(flag);
      tokens.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      tokens.push_back(flag);
      tokens.push_back(value.is_number_float() ? format_double(value.get<double>())
                                               : value.dump());
    } else if (!value.is_null()) {
      throw InvalidArgument("config value for '" + key + "' must be a scalar");
    }
  }
  return tokens;
}

// Splices config-file tokens right after the subcommand so that explicit
// flags, which come later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    std::vector<std::string> out{args[0]};
    const auto tokens = config_tokens(path);
    out.insert(out.end(), tokens.begin(), tokens.end());
    out.insert(out.end(), args.begin() + 1, args.end());
    return out;
  }
  return args;
}

Task task_for(const LossModel& loss) {
  if (loss.kind() == LossKind::BCE) return Task::Binary;
  if (loss.kind() == LossKind::CCE) return Task::Multiclass;
  return Task::Regression;
}

struct Prepared {
  LossModel loss = LossModel::mse();
  Dataset train;
  Dataset valid;
  std::string fingerprint;
  BoostConfig config;
  nlohmann::json source;
};

Prepared prepare(const TrainOptions& o) {
  Prepared p;
  p.loss = LossModel::from_name(o.loss, o.classes, o.ridge, o.drift_scale,
                                o.drift_power);
  Dataset full;
  if (!o.synth.empty() && !o.data.empty()) {
    throw InvalidArgument("--data and --synth are mutually exclusive");
  }
  if (!o.synth.empty()) {
    full = synthesize(parse_synth_kind(o.synth), o.n, o.q, o.seed, o.classes);
    p.source = {{"synth", o.synth}, {"n", o.n}, {"q", o.q}, {"seed", o.seed}};
  } else if (!o.data.empty()) {
    CsvOptions csv;
    csv.has_header = !o.no_header;
    csv.target_column = o.target;
    csv.task = task_for(p.loss);
    csv.classes = p.loss.output_dim();
    full = load_csv(o.data, csv);
    p.source = {{"data", o.data}};
  } else {
    throw InvalidArgument("one of --data or --synth is required");
  }
  p.fingerprint = fingerprint_hex(full);
  if (o.valid_fraction > 0.0) {
    std::tie(p.train, p.valid) = split(full, o.valid_fraction, o.seed);
  } else {
    if (!(o.valid_fraction == 0.0)) {
      throw InvalidArgument("valid_fraction must lie in [0, 1)");
    }
    p.train = std::move(full);
  }

  BoostConfig& c = p.config;
  c.scheme = parse_scheme(o.scheme);
  c.eta = o.eta;
  c.lambda_base = o.lambda_base;
  c.M = o.M;
  c.C = o.C;
  c.n_rounds = o.rounds;
  c.max_depth = o.depth;
  c.min_samples_leaf = o.min_samples_leaf;
  c.diagnostics = parse_diagnostics(o.diagnostics);
  c.seed = o.seed;
  c.init = parse_init_mode(o.init);
  c.regularization = o.fixed_scalar_lambda ? LeafRegularization::FixedScalar
                                           : LeafRegularization::PerLeafCount;
  c.diagonal_hessian = o.diagonal_hessian;
  c.threads = o.threads;
  c.validate();
  return p;
}

nlohmann::json loss_json(const LossModel& loss) {
  return {{"name", loss.name()},
          {"classes", loss.output_dim()},
          {"l2_ridge", loss.l2_ridge()},
          {"drift_scale", loss.drift_variant().scale},
          {"drift_power", loss.drift_variant().power}};
}

std::string status_name(TrainStatus s) {
  return s == TrainStatus::Diverged ? "diverged" : "completed";
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
  if (o.out.empty()) throw InvalidArgument("--out is required");
  const auto t0 = Clock::now();
  Prepared p = prepare(o);
  const double load_s = seconds_since(t0);

  const auto t1 = Clock::now();
  const TrainResult result = train(p.train, p.loss, p.config,
                                   p.valid.n_samples() > 0 ? &p.valid : nullptr);
  const double train_s = seconds_since(t1);

  const auto t2 = Clock::now();
  std::filesystem::create_directories(o.out);
  const std::filesystem::path dir(o.out);
  save_model(result.ensemble, (dir / "model.json").string());
  std::ostringstream csv;
  write_metrics_csv(result.records, csv);
  write_text_file((dir / "metrics.csv").string(), csv.str());
  std::ostringstream jsonl;
  write_metrics_jsonl(result.records, jsonl);
  write_text_file((dir / "metrics.jsonl").string(), jsonl.str());
  const int code =
      result.status == TrainStatus::Diverged ? kExitDiverged : kExitOk;

  RunManifest manifest;
  manifest.config = config_to_json(p.config);
  manifest.config["M_used"] = result.M_used;
  manifest.config["valid_fraction"] = o.valid_fraction;
  manifest.config["threads"] = o.threads;
  manifest.config["source"] = p.source;
  manifest.dataset_fingerprint = p.fingerprint;
  manifest.loss = loss_json(p.loss);
  manifest.tool_version = kVersion;
  manifest.phase_seconds = {{"load", load_s}, {"train", train_s},
                            {"write", seconds_since(t2)}};
  manifest.exit_status = code;
  manifest.status = status_name(result.status);
  write_text_file((dir / "manifest.json").string(),
                  manifest_to_json(manifest).dump(2) + "\n");

  for (const auto& w : result.warnings) out << "warning: " << w << '\n';
  out << "status=" << manifest.status << " rounds=" << result.records.size();
  if (!result.records.empty()) {
    out << " final_train_loss=" << format_double(result.records.back().train_loss);
  }
  out << " out=" << o.out << '\n';
  return code;
}

int cmd_diagnose(TrainOptions o, int window, std::ostream& out) {
  if (o.diagnostics != "full") {
    throw InvalidArgument("diagnose needs --diagnostics full");
  }
  if (window < 1) throw InvalidArgument("--window must be >= 1");
  Prepared p = prepare(o);
  const TrainResult result = train(p.train, p.loss, p.config,
                                   p.valid.n_samples() > 0 ? &p.valid : nullptr);

  std::vector<std::optional<double>> theta, gamma;
  for (const auto& r : result.records) {
    theta.push_back(r.theta_k);
    gamma.push_back(r.gamma_k);
  }
  const auto theta_mean = rolling_mean(theta, window);
  const auto gamma_mean = rolling_mean(gamma, window);
  auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };

  std::ostringstream series;
  series << "k,theta_k,gamma_k,theta_mean,gamma_mean\n";
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    series << result.records[i].k << ',' << cell(theta[i]) << ',' << cell(gamma[i])
           << ',' << cell(theta_mean[i]) << ',' << cell(gamma_mean[i]) << '\n';
  }

  struct Tally {
    int checked = 0;
    int held = 0;
    std::optional<double> min_slack;
  };
  std::map<std::string, Tally> tally;
  for (const auto& r : result.records) {
    for (const AuditResult& a : audit_iteration(r, p.config, p.loss)) {
      Tally& t = tally[a.name];
      t.checked += 1;
      t.held += a.holds ? 1 : 0;
      t.min_slack = t.min_slack ? std::min(*t.min_slack, a.slack) : a.slack;
    }
  }
  std::ostringstream audit;
  audit << "inequality,checked,held,min_slack\n";
  for (const auto& [name, t] : tally) {
    audit << name << ',' << t.checked << ',' << t.held << ',' << cell(t.min_slack)
          << '\n';
  }

  out << series.str() << '\n' << audit.str();
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    const std::filesystem::path dir(o.out);
    write_text_file((dir / "diagnostics.csv").string(), series.str());
    write_text_file((dir / "audit.csv").string(), audit.str());
  }
  return result.status == TrainStatus::Diverged ? kExitDiverged : kExitOk;
}

struct PredictOptions {
  std::string model;
  std::string data;
  std::string target;
  bool no_header = false;
  std::string out;
};

int cmd_predict(const PredictOptions& o, std::ostream& out) {
  const Ensemble ensemble = load_model(o.model);
  CsvOptions csv;
  csv.has_header = !o.no_header;
  csv.target_column = o.target;
  // Accept files with or without a target column.
  Dataset data = load_csv(o.data, csv);
  FeatureMatrix features = data.features;
  if (data.n_features() + 1 == ensemble.n_features) {
    std::vector<double> values;
    for (int i = 0; i < data.n_samples(); ++i) {
      const auto row = data.features.row(i);
      values.insert(values.end(), row.begin(), row.end());
      values.push_back(data.targets[i]);
    }
    features = FeatureMatrix(data.n_samples(), ensemble.n_features, std::move(values));
  }
  const PredictionField pred = predict_ensemble(ensemble, features);

  std::ostringstream text;
  for (int j = 0; j < pred.output_dim(); ++j) text << (j ? "," : "") << "pred_" << j;
  text << '\n';
  for (int i = 0; i < pred.n_samples(); ++i) {
    for (int j = 0; j < pred.output_dim(); ++j) {
      text << (j ? "," : "") << format_double(pred(i, j));
    }
    text << '\n';
  }
  if (o.out.empty()) {
    out << text.str();
  } else {
    write_text_file(o.out, text.str());
    out << "wrote " << pred.n_samples() << " predictions to " << o.out << '\n';
  }
  return kExitOk;
}

struct LabOptions {
  std::string variant = "charbonnier";
  double scale = 1.0;
  int power = 3;
  double x0 = 0.0;
  std::string scheme = "newton";
  double eta = 1.0;
  std::optional<double> M;
  int steps = 20;
  std::string out;
};

DriftFamily parse_family(const std::string& name) {
  if (name == "logbarrier") return DriftFamily::LogBarrier;
  if (name == "charbonnier") return DriftFamily::Charbonnier;
  if (name == "power") return DriftFamily::PowerFamily;
  if (name == "arctan") return DriftFamily::ArcTan;
  throw InvalidArgument("unknown variant '" + name + "'");
}

int cmd_lab1d(const LabOptions& o, std::ostream& out) {
  const DriftVariant variant{parse_family(o.variant), o.scale, o.power};
  variant.validate();
  const double M = o.M ? *o.M : drift_lipschitz_constant(variant);
  const LabResult r =
      newton_1d_lab(variant, o.x0, o.eta, parse_lab_scheme(o.scheme), M, o.steps);
  std::ostringstream table;
  table << "k,x,loss,lambda\n";
  for (const LabStep& s : r.steps) {
    table << s.k << ',' << format_double(s.x) << ',' << format_double(s.loss) << ','
          << format_double(s.lambda) << '\n';
  }
  if (!o.out.empty()) write_text_file(o.out, table.str());
  out << table.str() << "# status=" << (r.diverged ? "diverged" : "completed")
      << " M=" << format_double(M) << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& only, std::optional<double> tolerance,
               std::ostream& out) {
  VerifyOptions options;
  options.only = only;
  options.tolerance = tolerance;
  const auto reports = run_verification(options);
  bool all = true;
  out << std::left << std::setw(36) << "oracle" << std::setw(6) << "pass"
      << std::setw(14) << "max_abs_err" << std::setw(14) << "max_rel_err"
      << std::setw(14) << "min_slack" << std::setw(9) << "samples"
      << "tolerance\n";
  for (const OracleReport& r : reports) {
    all = all && r.pass;
    std::ostringstream abs_err, rel_err, slack;
    abs_err << std::setprecision(3) << r.max_abs_error;
    rel_err << std::setprecision(3) << r.max_rel_error;
    if (r.min_slack) slack << std::setprecision(3) << *r.min_slack;
    else slack << "-";
    out << std::left << std::setw(36) << r.name << std::setw(6)
        << (r.pass ? "ok" : "FAIL") << std::setw(14) << abs_err.str()
        << std::setw(14) << rel_err.str() << std::setw(14) << slack.str()
        << std::setw(9) << r.samples_checked << r.tolerance << '\n';
  }
  out << (all ? "all oracles passed" : "oracle failures") << '\n';
  return all ? kExitOk : kExitVerifyFailed;
}

struct SynthOptions {
  std::string kind;
  int n = 1000;
  int q = 8;
  std::uint64_t seed = 0;
  int classes = 3;
  std::string out;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const Dataset data = synthesize(parse_synth_kind(o.kind), o.n, o.q, o.seed, o.classes);
  write_csv(data, o.out);
  out << "wrote " << data.n_samples() << " rows to " << o.out << '\n';
  return kExitOk;
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  return text;
}

int fail(std::ostream& err, const char* kind, const std::string& message) {
  err << "error kind=" << kind << " message=\"" << one_line(message) << "\"\n";
  return kExitUsage;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Gradient-boosted trees with first-order, Newton and "
               "gradient-regularized Newton steps",
               "grnboost"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  TrainOptions train_opts;
  train_opts.threads = default_thread_count();
  auto* train_cmd = app.add_subcommand("train", "train an ensemble and write metrics");
  add_train_options(train_cmd, train_opts);

  TrainOptions diag_opts;
  diag_opts.threads = default_thread_count();
  int window = 10;
  auto* diag_cmd = app.add_subcommand(
      "diagnose", "retrain with full diagnostics and report angles and audits");
  add_train_options(diag_cmd, diag_opts);
  diag_cmd->add_option("--window", window, "rolling mean window");

  PredictOptions pred_opts;
  auto* pred_cmd = app.add_subcommand("predict", "predict raw scores with a saved model");
  pred_cmd->add_option("--model", pred_opts.model, "model.json")->required();
  pred_cmd->add_option("--data", pred_opts.data, "feature CSV")->required();
  pred_cmd->add_option("--target", pred_opts.target, "target column to drop, if present");
  pred_cmd->add_flag("--no-header", pred_opts.no_header, "CSV has no header row");
  pred_cmd->add_option("--out", pred_opts.out, "output CSV (default stdout)");

  LabOptions lab_opts;
  auto* lab_cmd = app.add_subcommand("lab1d", "scalar Newton dynamics on drift losses");
  lab_cmd->add_option("--variant", lab_opts.variant, "logbarrier, charbonnier, power, arctan");
  lab_cmd->add_option("--scale", lab_opts.scale, "loss scale C");
  lab_cmd->add_option("--power", lab_opts.power, "m for the power variant");
  lab_cmd->add_option("--x0", lab_opts.x0, "starting point")->required();
  lab_cmd->add_option("--scheme", lab_opts.scheme, "newton, damped or grn");
  lab_cmd->add_option("--eta", lab_opts.eta, "step size in (0, 1]");
  lab_cmd->add_option("--M", lab_opts.M, "GRN constant (default: analytic sup|L'''|/2)");
  lab_cmd->add_option("--steps", lab_opts.steps, "iterations");
  lab_cmd->add_option("--out", lab_opts.out, "also write the table to this CSV");

  std::string only;
  std::optional<double> tolerance;
  auto* verify_cmd = app.add_subcommand("verify", "run the built-in oracles");
  verify_cmd->add_option("--only", only, "fd, dominance, drift, leaf, recursion or log");
  verify_cmd->add_option("--tolerance", tolerance, "override every oracle tolerance");

  SynthOptions synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset as CSV");
  synth_cmd->add_option("--kind", synth_opts.kind, "dataset kind")->required();
  synth_cmd->add_option("--n", synth_opts.n, "sample count");
  synth_cmd->add_option("--q", synth_opts.q, "feature count");
  synth_cmd->add_option("--seed", synth_opts.seed, "seed");
  synth_cmd->add_option("--classes", synth_opts.classes, "classes for multiclass_blobs");
  synth_cmd->add_option("--out", synth_opts.out, "output CSV")->required();

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> argv_store{"grnboost"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::CallForVersion&) {
      out << kVersion << '\n';
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      return fail(err, "usage", e.what());
    }

    if (train_cmd->parsed()) return cmd_train(train_opts, out);
    if (diag_cmd->parsed()) return cmd_diagnose(diag_opts, window, out);
    if (pred_cmd->parsed()) return cmd_predict(pred_opts, out);
    if (lab_cmd->parsed()) return cmd_lab1d(lab_opts, out);
    if (verify_cmd->parsed()) return cmd_verify(only, tolerance, out);
    if (synth_cmd->parsed()) return cmd_synth(synth_opts, out);
    return fail(err, "usage", "no subcommand");
  } catch (const InvalidArgument& e) {
    return fail(err, "config", e.what());
  } catch (const DataError& e) {
    return fail(err, "data", e.what());
  } catch (const SingularSystem& e) {
    return fail(err, "singular", e.what());
  } catch (const std::exception& e) {
    return fail(err, "internal", e.what());
  }
}

}  // namespace grnboost::cli
