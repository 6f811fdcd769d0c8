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

#include "grnboost/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grnboost/common.hpp"

namespace grnboost {

namespace {

struct Derivatives {
  double value = 0.0;
  PredictionField gradient;
  BlockHessian hessian;
};

Derivatives derivatives(const LossModel& loss, const PredictionField& f,
                        const PredictionField& targets, int threads) {
  const int n = f.n_samples();
  const int k = f.output_dim();
  Derivatives out{0.0, PredictionField(n, k), BlockHessian(n, k)};
  std::vector<double> values(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t i = begin; i < end; ++i) {
                   const int row = static_cast<int>(i);
                   values[i] = loss.evaluate(f.row(row), targets.row(row),
                                             out.gradient.row(row),
                                             out.hessian.block(row));
                 }
               });
  out.value = n > 0 ? pairwise_sum(values) / n : 0.0;
  return out;
}

// Same per-sample arithmetic as derivatives(), so L(F_{k+1}) measured here is
// bit-identical to L(F_k) at the start of the next round.
double mean_loss(const LossModel& loss, const PredictionField& f,
                 const PredictionField& targets, int threads) {
  const int n = f.n_samples();
  if (n == 0) return 0.0;
  const int k = f.output_dim();
  std::vector<double> values(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads,
               [&](std::size_t begin, std::size_t end) {
                 std::vector<double> g(static_cast<std::size_t>(k));
                 std::vector<double> h(static_cast<std::size_t>(k) * k);
                 for (std::size_t i = begin; i < end; ++i) {
                   const int row = static_cast<int>(i);
                   values[i] =
                       loss.evaluate(f.row(row), targets.row(row), g, h);
                 }
               });
  return pairwise_sum(values) / n;
}

PredictionField broadcast(std::span<const double> f0, int n) {
  const int k = static_cast<int>(f0.size());
  PredictionField out(n, k);
  for (int i = 0; i < n; ++i) std::copy(f0.begin(), f0.end(), out.row(i).begin());
  return out;
}

bool within_threshold(const PredictionField& f, double threshold) {
  for (double v : f.values()) {
    if (!std::isfinite(v) || std::abs(v) > threshold) return false;
  }
  return true;
}

Task task_for(const LossModel& loss) {
  switch (loss.kind()) {
    case LossKind::BCE:
      return Task::Binary;
    case LossKind::CCE:
      return Task::Multiclass;
    default:
      return Task::Regression;
  }
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "first-order" || name == "first_order" || name == "firstorder") {
    return Scheme::FirstOrder;
  }
  if (name == "newton") return Scheme::Newton;
  if (name == "grn") return Scheme::GRN;
  throw InvalidArgument("unknown scheme '" + name + "'");
}

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::FirstOrder:
      return "first-order";
    case Scheme::Newton:
      return "newton";
    case Scheme::GRN:
      return "grn";
  }
  return "unknown";
}

DiagnosticsLevel parse_diagnostics(const std::string& name) {
  if (name == "off") return DiagnosticsLevel::Off;
  if (name == "cheap") return DiagnosticsLevel::Cheap;
  if (name == "full") return DiagnosticsLevel::Full;
  throw InvalidArgument("unknown diagnostics level '" + name + "'");
}

std::string diagnostics_name(DiagnosticsLevel level) {
  switch (level) {
    case DiagnosticsLevel::Off:
      return "off";
    case DiagnosticsLevel::Cheap:
      return "cheap";
    case DiagnosticsLevel::Full:
      return "full";
  }
  return "unknown";
}

InitMode parse_init_mode(const std::string& name) {
  if (name == "auto") return InitMode::Auto;
  if (name == "zero") return InitMode::Zero;
  throw InvalidArgument("unknown init mode '" + name + "'");
}

std::string init_mode_name(InitMode mode) {
  return mode == InitMode::Zero ? "zero" : "auto";
}

std::vector<std::string> BoostConfig::validate() const {
  if (!(eta > 0.0 && eta <= 2.0)) {
    throw InvalidArgument("eta must lie in (0, 2]");
  }
  if (!(lambda_base >= 0.0) || !std::isfinite(lambda_base)) {
    throw InvalidArgument("lambda_base must be finite and >= 0");
  }
  if (M && (!(*M >= 0.0) || !std::isfinite(*M))) {
    throw InvalidArgument("M must be finite and >= 0");
  }
  if (!(C >= 1.0) || !std::isfinite(C)) {
    throw InvalidArgument("C must be finite and >= 1");
  }
  if (n_rounds < 0) throw InvalidArgument("n_rounds must be >= 0");
  if (max_depth < 0) throw InvalidArgument("max_depth must be >= 0");
  if (min_samples_leaf < 1) {
    throw InvalidArgument("min_samples_leaf must be >= 1");
  }
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  if (!(divergence_threshold > 0.0)) {
    throw InvalidArgument("divergence_threshold must be > 0");
  }
  std::vector<std::string> warnings;
  if (scheme == Scheme::GRN && eta > 1.0) {
    warnings.push_back(
        "eta > 1 under GRN: the global convergence guarantees assume eta <= 1");
  }
  return warnings;
}

double resolved_M(const BoostConfig& config, const LossModel& loss,
                  int n_samples) {
  if (config.M) return *config.M;
  return boosting_space_constant(loss, n_samples);
}

std::optional<double> IterationRecord::decrement_slack() const {
  if (scheme != Scheme::GRN || !decrement_rhs) return std::nullopt;
  return decrement_lhs - *decrement_rhs;
}

std::optional<double> IterationRecord::growth_slack() const {
  if (scheme != Scheme::GRN || !growth_lhs || !growth_rhs) return std::nullopt;
  return *growth_rhs - *growth_lhs;
}

PredictionField encode_targets(const Dataset& data, const LossModel& loss) {
  const int n = data.n_samples();
  const int k = loss.output_dim();
  if (static_cast<int>(data.targets.size()) != n) {
    throw DataError("dataset has " + std::to_string(data.targets.size()) +
                    " targets for " + std::to_string(n) + " samples");
  }
  check_targets(data, task_for(loss), k);
  PredictionField out(n, k);
  for (int i = 0; i < n; ++i) {
    if (loss.kind() == LossKind::CCE) {
      out(i, static_cast<int>(data.targets[i])) = 1.0;
    } else {
      out(i, 0) = data.targets[i];
    }
  }
  return out;
}

std::vector<double> initial_prediction(const Dataset& data,
                                       const LossModel& loss, InitMode mode) {
  const int k = loss.output_dim();
  std::vector<double> f0(static_cast<std::size_t>(k), 0.0);
  if (mode == InitMode::Zero) return f0;
  const int n = data.n_samples();
  if (n < 1) throw InvalidArgument("initial_prediction: empty dataset");
  check_targets(data, task_for(loss), k);
  switch (loss.kind()) {
    case LossKind::BCE: {
      const double rate =
          std::clamp(pairwise_sum(data.targets) / n, 1e-6, 1.0 - 1e-6);
      f0[0] = std::log(rate / (1.0 - rate));
      break;
    }
    case LossKind::CCE: {
      std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
      for (double t : data.targets) counts[static_cast<std::size_t>(t)] += 1.0;
      double mean = 0.0;
      for (int j = 0; j < k; ++j) {
        // Absent classes are floored like the binary base rate.
        f0[j] = std::log(std::max(counts[j] / n, 1e-6));
        mean += f0[j];
      }
      mean /= k;
      for (double& v : f0) v -= mean;
      break;
    }
    default:
      f0[0] = pairwise_sum(data.targets) / n;
      break;
  }
  return f0;
}

TrainResult train(const Dataset& data, const LossModel& loss,
                  const BoostConfig& config, const Dataset* valid) {
  TrainResult result;
  result.warnings = config.validate();
  const int n = data.n_samples();
  if (n < 1) throw InvalidArgument("train: empty dataset");
  const int k = loss.output_dim();
  const int threads = config.threads;

  const PredictionField targets = encode_targets(data, loss);
  const bool has_valid = valid != nullptr && valid->n_samples() > 0;
  PredictionField valid_targets;
  if (has_valid) {
    if (valid->n_features() != data.n_features()) {
      throw DataError("validation set has a different feature count");
    }
    valid_targets = encode_targets(*valid, loss);
  }

  Ensemble& ensemble = result.ensemble;
  ensemble.loss = loss;
  ensemble.n_features = data.n_features();
  ensemble.feature_names = data.feature_names;
  ensemble.initial_prediction = initial_prediction(data, loss, config.init);

  const double M = resolved_M(config, loss, n);
  result.M_used = M;
  const bool first_order = config.scheme == Scheme::FirstOrder;
  // The softmax Hessian annihilates the all-ones vector; with no ridge, solve
  // on the zero-sum subspace (exact whenever the gradient is zero-sum).
  const linalg::Gauge gauge =
      (!first_order && loss.kind() == LossKind::CCE && loss.l2_ridge() == 0.0)
          ? linalg::Gauge::ZeroSum
          : linalg::Gauge::None;

  TreeParams params;
  params.max_depth = config.max_depth;
  params.min_samples_leaf = config.min_samples_leaf;
  params.regularization = config.regularization;
  params.diagonal_hessian = config.diagonal_hessian;
  params.gauge = gauge;

  PredictionField f = broadcast(ensemble.initial_prediction, n);
  PredictionField f_valid =
      has_valid ? broadcast(ensemble.initial_prediction, valid->n_samples())
                : PredictionField();
  const BlockHessian identity =
      first_order ? BlockHessian::identity(n, k) : BlockHessian();

  const double eta = config.eta;
  auto finish_growth = [&](IterationRecord& r, double next_norm) {
    r.growth_lhs = next_norm;
    if (r.gamma_k) {
      const double g = *r.gamma_k;
      r.growth_rhs = (1.0 + eta * eta + eta * std::sqrt(std::max(0.0, 1.0 - g * g))) *
                     r.grad_norm;
    }
  };

  for (int round = 0; round < config.n_rounds; ++round) {
    Derivatives d = derivatives(loss, f, targets, threads);
    const double grad_norm = grad_hilbert_norm(d.gradient);
    if (round > 0) finish_growth(result.records.back(), grad_norm);

    IterationRecord rec;
    rec.k = round;
    rec.scheme = config.scheme;
    rec.loss_before = d.value;
    rec.grad_norm = grad_norm;
    rec.lambda_k = config.lambda_base;
    if (config.scheme == Scheme::GRN) {
      rec.lambda_k += config.C * std::sqrt(M * grad_norm);
    }
    const BlockHessian& h = first_order ? identity : d.hessian;

    params.lambda = rec.lambda_k;
    Tree tree = fit_tree(data.features, d.gradient, h, params, threads);
    const PredictionField weak = tree.predict(data.features);
    f.add_scaled(weak, eta);
    if (has_valid) f_valid.add_scaled(tree.predict(valid->features), eta);
    ensemble.trees.push_back(std::move(tree));
    ensemble.etas.push_back(eta);

    const bool finite = within_threshold(f, config.divergence_threshold);
    rec.train_loss = finite ? mean_loss(loss, f, targets, threads)
                            : std::numeric_limits<double>::infinity();
    rec.decrement_lhs = rec.loss_before - rec.train_loss;
    if (has_valid) {
      rec.valid_loss = within_threshold(f_valid, config.divergence_threshold)
                           ? mean_loss(loss, f_valid, valid_targets, threads)
                           : std::numeric_limits<double>::infinity();
    }

    if (config.diagnostics != DiagnosticsLevel::Off) {
      const double weak_sq = hilbert_inner(weak, weak);
      rec.weak_norm = std::sqrt(weak_sq);
      rec.grad_dot_weak = hilbert_inner(d.gradient, weak);
      rec.weak_norm_K_sq = hessian_inner(weak, weak, h, rec.lambda_k);
      rec.weak_norm_H = std::sqrt(std::max(0.0, hessian_inner(weak, weak, h)));
      if (config.scheme == Scheme::GRN) {
        rec.decrement_rhs = (eta - eta * eta * eta / 3.0) * rec.lambda_k * weak_sq;
      }
      rec.identity_residuals["scalability"] =
          std::abs(*rec.grad_dot_weak + *rec.weak_norm_K_sq);
      rec.identity_residuals["lambda_bound"] =
          rec.lambda_k * *rec.weak_norm - grad_norm;

      if (const auto edge = weak_gradient_edge(weak, h, rec.lambda_k, d.gradient)) {
        rec.gamma_k = edge->gamma;
        rec.edge_violated = edge->edge_violated;
        if (edge->edge_violated) {
          rec.warnings.push_back("weak gradient edge violated");
        }
      }
    }

    if (config.diagnostics == DiagnosticsLevel::Full) {
      try {
        const NewtonDirection exact =
            exact_newton_direction(h, d.gradient, 0.0, gauge, threads);
        if (exact.jittered_blocks > 0) {
          rec.warnings.push_back(std::to_string(exact.jittered_blocks) +
                                 " singular Hessian blocks jittered");
        }
        rec.exact_norm_H = std::sqrt(
            std::max(0.0, hessian_inner(exact.direction, exact.direction, h)));
        if (const auto angle = cosine_angle(exact.direction, weak, h)) {
          rec.theta_k = angle->clamped;
          rec.theta_raw = angle->raw;
        } else {
          rec.warnings.push_back("cosine angle undefined");
        }
      } catch (const SingularSystem& e) {
        rec.warnings.push_back(e.what());
      }
    }

    result.records.push_back(std::move(rec));
    if (!finite || !std::isfinite(result.records.back().train_loss)) {
      result.status = TrainStatus::Diverged;
      result.records.back().warnings.push_back("diverged");
      return result;
    }
  }

  if (!result.records.empty()) {
    const Derivatives d = derivatives(loss, f, targets, threads);
    finish_growth(result.records.back(), grad_hilbert_norm(d.gradient));
  }
  return result;
}

PredictionField predict_ensemble(const Ensemble& ensemble,
                                 const FeatureMatrix& features) {
  if (features.cols() != ensemble.n_features) {
    throw InvalidArgument("predict: model expects " +
                          std::to_string(ensemble.n_features) +
                          " features, got " + std::to_string(features.cols()));
  }
  if (ensemble.etas.size() != ensemble.trees.size()) {
    throw InvalidArgument("predict: malformed ensemble");
  }
  PredictionField out = broadcast(ensemble.initial_prediction, features.rows());
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    out.add_scaled(ensemble.trees[t].predict(features), ensemble.etas[t]);
  }
  return out;
}

std::vector<AuditResult> audit_iteration(const IterationRecord& record,
                                         const BoostConfig& config,
                                         const LossModel& loss,
                                         const AuditTolerances& tol) {
  if (config.diagnostics != DiagnosticsLevel::Full || !record.weak_norm ||
      !record.weak_norm_K_sq || !record.grad_dot_weak) {
    throw InvalidArgument("audit_iteration requires diagnostics level full");
  }
  std::vector<AuditResult> out;
  const double eta = config.eta;

  if (record.scheme == Scheme::GRN) {
    if (record.decrement_rhs && eta <= 2.0) {
      const double slack = record.decrement_lhs - *record.decrement_rhs;
      out.push_back({"decrement", slack >= -tol.decrement_relative *
                                                 std::abs(record.loss_before),
                     slack});
    }
    const double bound_slack =
        record.grad_norm - record.lambda_k * *record.weak_norm;
    out.push_back({"lambda_bound",
                   bound_slack >= -tol.lambda_bound_relative * record.grad_norm,
                   bound_slack});
    if (record.growth_lhs && record.growth_rhs && !record.edge_violated) {
      const double slack = *record.growth_rhs - *record.growth_lhs;
      out.push_back(
          {"growth", slack >= -tol.growth_relative * record.grad_norm, slack});
    }
  }

  if (config.regularization == LeafRegularization::PerLeafCount) {
    const double scale = *record.weak_norm_K_sq;
    const double residual = std::abs(*record.grad_dot_weak + scale);
    const double slack = tol.identity_relative * std::abs(scale) - residual;
    out.push_back({"scalability_identity", slack >= 0.0, slack});
  }

  if (record.scheme == Scheme::Newton && record.lambda_k == 0.0 &&
      record.theta_k && record.exact_norm_H && record.weak_norm_H) {
    const double predicted = *record.theta_raw * *record.exact_norm_H;
    const double residual = std::abs(*record.weak_norm_H - predicted);
    const double slack = 1e-6 * *record.weak_norm_H - residual;
    out.push_back({"theta_identity", slack >= 0.0, slack});
  }

  if (record.scheme == Scheme::Newton) {
    const RegularityConstants rc = regularity_constants(loss);
    const double mu = rc.strong_convexity;
    if (rc.smoothness && mu > 0.0 && eta < 2.0 * mu / *rc.smoothness &&
        record.theta_k && record.exact_norm_H) {
      const double theta = *record.theta_k;
      const double exact_sq = *record.exact_norm_H * *record.exact_norm_H;
      const double rhs =
          eta * (1.0 - eta * *rc.smoothness / (2.0 * mu)) * theta * theta * exact_sq;
      const double slack = record.decrement_lhs - rhs;
      out.push_back({"theorem_decrease", slack >= -tol.theorem_absolute, slack});
    }
  }
  return out;
}

std::vector<std::optional<double>> rolling_mean(
    const std::vector<std::optional<double>>& series, int window) {
  if (window < 1) throw InvalidArgument("rolling window must be >= 1");
  std::vector<std::optional<double>> out(series.size());
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t k = w - 1; k < series.size(); ++k) {
    std::vector<double> values;
    for (std::size_t j = k + 1 - w; j <= k; ++j) {
      if (!series[j]) break;
      values.push_back(*series[j]);
    }
    if (values.size() == w) out[k] = pairwise_sum(values) / window;
  }
  return out;
}

std::vector<PredictionField> unrestricted_newton(const PredictionField& start,
                                                 const PredictionField& targets,
                                                 const LossModel& loss,
                                                 double eta, int n_steps) {
  if (start.n_samples() != targets.n_samples() ||
      start.output_dim() != loss.output_dim() ||
      targets.output_dim() != loss.output_dim()) {
    throw InvalidArgument("unrestricted_newton: shape mismatch");
  }
  std::vector<PredictionField> trajectory{start};
  for (int step = 0; step < n_steps; ++step) {
    const PredictionField& f = trajectory.back();
    if (!f.all_finite()) break;
    const Derivatives d = derivatives(loss, f, targets, 1);
    const NewtonDirection dir =
        exact_newton_direction(d.hessian, d.gradient, 0.0, loss.newton_gauge());
    PredictionField next = f;
    next.add_scaled(dir.direction, eta);
    trajectory.push_back(std::move(next));
  }
  return trajectory;
}

}  // namespace grnboost
