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

// Training loops for first-order, Newton and gradient-regularized Newton
// boosting, with per-iteration diagnostics and inequality audits.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grnboost/data_io.hpp"
#include "grnboost/hilbert.hpp"
#include "grnboost/losses.hpp"
#include "grnboost/trees.hpp"

namespace grnboost {

enum class Scheme { FirstOrder, Newton, GRN };
enum class DiagnosticsLevel { Off, Cheap, Full };
enum class InitMode { Auto, Zero };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme scheme);
DiagnosticsLevel parse_diagnostics(const std::string& name);
std::string diagnostics_name(DiagnosticsLevel level);
InitMode parse_init_mode(const std::string& name);
std::string init_mode_name(InitMode mode);

struct BoostConfig {
  Scheme scheme = Scheme::GRN;
  double eta = 1.0;
  double lambda_base = 0.0;
  /// GRN only. Empty selects the boosting-space constant M0 * sqrt(N).
  std::optional<double> M;
  double C = 1.0;
  int n_rounds = 100;
  int max_depth = 4;
  int min_samples_leaf = 1;
  DiagnosticsLevel diagnostics = DiagnosticsLevel::Full;
  std::uint64_t seed = 0;
  InitMode init = InitMode::Auto;
  LeafRegularization regularization = LeafRegularization::PerLeafCount;
  bool diagonal_hessian = false;
  int threads = 1;
  /// |F| beyond this flags divergence.
  double divergence_threshold = 1e100;

  /// Throws InvalidArgument on invalid values; returns warnings for valid
  /// but unusual ones (eta > 1 under GRN).
  std::vector<std::string> validate() const;
};

/// M actually used by GRN for a training set of `n_samples`.
double resolved_M(const BoostConfig& config, const LossModel& loss,
                  int n_samples);

struct Ensemble {
  LossModel loss = LossModel::mse();
  int n_features = 0;
  std::vector<std::string> feature_names;
  std::vector<double> initial_prediction;
  std::vector<Tree> trees;
  std::vector<double> etas;  // step used for each tree

  int output_dim() const { return loss.output_dim(); }
};

struct IterationRecord {
  int k = 0;
  double loss_before = 0.0;  // L(F_k)
  double train_loss = 0.0;   // L(F_{k+1})
  std::optional<double> valid_loss;
  double grad_norm = 0.0;  // ||g_k||
  double lambda_k = 0.0;
  std::optional<double> theta_k;  // clamped to [-1, 1]
  std::optional<double> theta_raw;
  std::optional<double> gamma_k;
  bool edge_violated = false;

  // Norms of the weak step f^w (cheap and full).
  std::optional<double> weak_norm;         // ||f^w||
  std::optional<double> weak_norm_K_sq;    // <f^w, (H + lambda_k I) f^w>
  std::optional<double> grad_dot_weak;     // <g_k, f^w>
  std::optional<double> weak_norm_H;       // ||f^w||_H, loss Hessian
  std::optional<double> exact_norm_H;      // ||f_{k+1}||_H (full only)

  double decrement_lhs = 0.0;  // L(F_k) - L(F_{k+1})
  std::optional<double> decrement_rhs;  // (eta - eta^3/3) lambda_k ||f^w||^2
  std::optional<double> growth_lhs;     // ||g_{k+1}||
  std::optional<double> growth_rhs;     // (1 + eta^2 + eta sqrt(1-gamma^2)) ||g_k||
  std::map<std::string, double> identity_residuals;
  std::vector<std::string> warnings;

  /// decrement_lhs - decrement_rhs, GRN only.
  std::optional<double> decrement_slack() const;
  /// growth_rhs - growth_lhs, GRN only.
  std::optional<double> growth_slack() const;

  Scheme scheme = Scheme::GRN;
};

enum class TrainStatus { Completed, Diverged };

struct TrainResult {
  Ensemble ensemble;
  std::vector<IterationRecord> records;
  TrainStatus status = TrainStatus::Completed;
  double M_used = 0.0;
  std::vector<std::string> warnings;
};

/// Converts stored targets to per-sample K-vectors (one-hot for CCE) and
/// validates them; throws DataError on invalid targets.
PredictionField encode_targets(const Dataset& data, const LossModel& loss);

std::vector<double> initial_prediction(const Dataset& data,
                                       const LossModel& loss,
                                       InitMode mode = InitMode::Auto);

/// Runs config.n_rounds iterations (fewer on divergence). `valid` may be
/// empty. Throws SingularSystem when an unregularized leaf cannot be solved.
TrainResult train(const Dataset& data, const LossModel& loss,
                  const BoostConfig& config, const Dataset* valid = nullptr);

PredictionField predict_ensemble(const Ensemble& ensemble,
                                 const FeatureMatrix& features);

struct AuditTolerances {
  double decrement_relative = 1e-9;  // times |L(F_k)|
  double lambda_bound_relative = 1e-8;
  double growth_relative = 1e-8;  // times ||g_k||
  double identity_relative = 1e-8;
  double theorem_absolute = 1e-9;
};

struct AuditResult {
  std::string name;
  bool holds = false;
  double slack = 0.0;
};

/// Checks the per-iteration inequalities that apply to the record's
/// scheme. Throws InvalidArgument when the record lacks the diagnostics an
/// inequality needs (requires diagnostics level full).
std::vector<AuditResult> audit_iteration(const IterationRecord& record,
                                         const BoostConfig& config,
                                         const LossModel& loss,
                                         const AuditTolerances& tol = {});

/// Trailing mean over `window` consecutive entries; entry k is empty until a
/// full window is available or when any value in it is undefined.
std::vector<std::optional<double>> rolling_mean(
    const std::vector<std::optional<double>>& series, int window);

/// Exact per-sample Newton iterations with no tree restriction:
/// F <- F - eta * h^{-1} g independently at every sample. Returns the
/// trajectory F_0, F_1, ... (stops early once any entry is non-finite).
std::vector<PredictionField> unrestricted_newton(const PredictionField& start,
                                                 const PredictionField& targets,
                                                 const LossModel& loss,
                                                 double eta, int n_steps);

}  // namespace grnboost
