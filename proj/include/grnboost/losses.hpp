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

// Per-sample losses l(u, y) with analytic gradients and Hessians with
// respect to the prediction u, their regularity constants, and the family of
// even 1D losses generated from a prescribed Newton drift.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnboost/linalg.hpp"

namespace grnboost {

enum class LossKind { MSE, BCE, CCE, Charbonnier, Drift };

/// Closed-form even losses L(x) whose classical Newton map is x - d~(x).
enum class DriftFamily {
  LogBarrier,   // d(x) = x(1 + x)
  Charbonnier,  // d(x) = x(1 + x^2)
  PowerFamily,  // d(x) = (1 + x)((1 + x)^(m-1) - 1) / (m - 1)
  ArcTan,       // d(x) = (1 + x^2) arctan(x)
};

struct DriftVariant {
  DriftFamily family = DriftFamily::Charbonnier;
  double scale = 1.0;  // C > 0
  int power = 3;       // m, PowerFamily only, 3 <= m <= 8

  /// Throws InvalidArgument when scale or power is out of range.
  void validate() const;
};

/// Value and first two derivatives of a scalar function.
struct ScalarDerivatives {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// Drift loss L(x) and its derivatives.
ScalarDerivatives drift_loss(const DriftVariant& variant, double x);

/// Odd extension d~(x) = sign(x) d(|x|) of the variant's drift.
double newton_drift(const DriftVariant& variant, double x);

/// newton_drift(x) - x, evaluated without cancellation near 0.
double newton_drift_excess(const DriftVariant& variant, double x);

/// sup |L'''| / 2 for the drift loss, i.e. the M of a 2M-Lipschitz second
/// derivative.
double drift_lipschitz_constant(const DriftVariant& variant);

/// Per-sample constants in Euclidean geometry. `smoothness` and `dominance`
/// are empty when unbounded / unknown.
struct RegularityConstants {
  double lipschitz_hessian = 0.0;
  std::optional<double> smoothness;
  double strong_convexity = 0.0;
  std::optional<double> dominance;
};

/// Analytic triple returned by eval(). The Hessian is row-major K x K.
struct LossEvaluation {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> hessian;
};

class LossModel {
 public:
  static LossModel mse(double l2_ridge = 0.0);
  static LossModel bce(double l2_ridge = 0.0);
  static LossModel cce(int classes, double l2_ridge = 0.0);
  static LossModel charbonnier(double l2_ridge = 0.0);
  static LossModel drift(const DriftVariant& variant, double l2_ridge = 0.0);

  /// Builds a loss from its textual name: mse, bce, cce, charbonnier,
  /// logbarrier, power, arctan (the last three are drift losses).
  static LossModel from_name(const std::string& name, int classes = 3,
                             double l2_ridge = 0.0, double drift_scale = 1.0,
                             int drift_power = 3);

  LossKind kind() const { return kind_; }
  int output_dim() const { return output_dim_; }
  double l2_ridge() const { return l2_ridge_; }
  const DriftVariant& drift_variant() const { return drift_; }
  std::string name() const;

  RegularityConstants regularity() const;

  /// Gauge needed for an unshifted Newton solve on this loss's Hessian.
  linalg::Gauge newton_gauge() const {
    return kind_ == LossKind::CCE ? linalg::Gauge::ZeroSum
                                  : linalg::Gauge::None;
  }

  /// Throws InvalidArgument unless `target` is a valid encoding for this
  /// loss (length K; {0,1} for BCE; one-hot for CCE; finite otherwise).
  void validate_target(std::span<const double> target) const;

  /// Unchecked hot path: writes the gradient (K) and row-major Hessian
  /// (K x K) and returns the loss value.
  double evaluate(std::span<const double> prediction,
                  std::span<const double> target, std::span<double> gradient,
                  std::span<double> hessian) const;

  /// Value only.
  double value(std::span<const double> prediction,
               std::span<const double> target) const;

 private:
  LossModel(LossKind kind, int output_dim, double l2_ridge,
            DriftVariant drift = {});

  LossKind kind_;
  int output_dim_;
  double l2_ridge_;
  DriftVariant drift_;
};

/// Checked evaluation: validates shapes and the target encoding.
LossEvaluation eval(const LossModel& loss, std::span<const double> prediction,
                    std::span<const double> target);

RegularityConstants regularity_constants(const LossModel& loss);

/// M0 * sqrt(N): Lipschitz constant of the empirical-risk Hessian in the
/// boosting space when the per-sample Hessian is M0-Lipschitz.
double boosting_space_constant(const LossModel& loss, int n_samples);

}  // namespace grnboost
