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

// The empirical boosting space: functions on the N training points with
// values in R^K, identified with R^{N x K} under
//     <a, b> = (1/N) sum_i <a(x_i), b(x_i)>.
// Hessians of the empirical risk act pointwise, so they are stored as N
// independent K x K blocks.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "grnboost/linalg.hpp"

namespace grnboost {

/// One K-vector per training sample, row-major.
class PredictionField {
 public:
  PredictionField() = default;
  PredictionField(int n_samples, int output_dim, double fill = 0.0);
  PredictionField(int n_samples, int output_dim, std::vector<double> values);

  int n_samples() const { return n_; }
  int output_dim() const { return k_; }

  std::span<double> row(int i) {
    return {values_.data() + static_cast<std::size_t>(i) * k_,
            static_cast<std::size_t>(k_)};
  }
  std::span<const double> row(int i) const {
    return {values_.data() + static_cast<std::size_t>(i) * k_,
            static_cast<std::size_t>(k_)};
  }
  double& operator()(int i, int j) {
    return values_[static_cast<std::size_t>(i) * k_ + j];
  }
  double operator()(int i, int j) const {
    return values_[static_cast<std::size_t>(i) * k_ + j];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  PredictionField scaled(double alpha) const;
  /// this += alpha * other
  void add_scaled(const PredictionField& other, double alpha);

  bool operator==(const PredictionField&) const = default;

 private:
  int n_ = 0;
  int k_ = 0;
  std::vector<double> values_;
};

/// Pointwise Hessian blocks h_(i), plus an optional scalar shift so that the
/// same type represents H + lambda I.
class BlockHessian {
 public:
  BlockHessian() = default;
  BlockHessian(int n_samples, int output_dim, double shift = 0.0);

  static BlockHessian identity(int n_samples, int output_dim);

  int n_samples() const { return n_; }
  int output_dim() const { return k_; }
  double shift() const { return shift_; }
  void set_shift(double shift) { shift_ = shift; }

  std::span<double> block(int i) {
    const std::size_t kk = static_cast<std::size_t>(k_) * k_;
    return {blocks_.data() + i * kk, kk};
  }
  std::span<const double> block(int i) const {
    const std::size_t kk = static_cast<std::size_t>(k_) * k_;
    return {blocks_.data() + i * kk, kk};
  }

 private:
  int n_ = 0;
  int k_ = 0;
  double shift_ = 0.0;
  std::vector<double> blocks_;
};

double hilbert_inner(const PredictionField& a, const PredictionField& b);
double hilbert_norm(const PredictionField& a);

/// ||g||_H = sqrt((1/N) sum_i ||g_(i)||^2).
double grad_hilbert_norm(const PredictionField& g);

/// <a, (H + (hess.shift() + extra_shift) I) b>.
double hessian_inner(const PredictionField& a, const PredictionField& b,
                     const BlockHessian& hess, double extra_shift = 0.0);

struct NewtonDirection {
  PredictionField direction;
  int jittered_blocks = 0;
};

/// f(x_i) = -(h_(i) + (hess.shift() + shift) I)^{-1} g_(i), block by block.
/// Blocks that are numerically singular are retried with a tiny diagonal
/// jitter and counted; a block that is still singular throws SingularSystem.
NewtonDirection exact_newton_direction(const BlockHessian& hess,
                                       const PredictionField& g, double shift,
                                       linalg::Gauge gauge = linalg::Gauge::None,
                                       int threads = 1);

struct CosineAngle {
  double raw = 0.0;      // signed quotient
  double clamped = 0.0;  // raw clamped to [-1, 1]
};

/// Hessian-induced cosine between the exact and weak directions, using the
/// unshifted blocks of `hess`. Empty when either direction has zero
/// Hessian norm.
std::optional<CosineAngle> cosine_angle(const PredictionField& exact,
                                        const PredictionField& weak,
                                        const BlockHessian& hess);

struct WeakGradientEdge {
  double gamma = 0.0;
  bool edge_violated = false;
  /// ||g^w - g||^2 / ||g||^2
  double residual_ratio = 0.0;
  PredictionField implied_gradient;
};

/// Implied weak gradient g^w = -(H + lambda_k I) weak and the edge
/// gamma = sqrt(max(0, 1 - ||g^w - g||^2 / ||g||^2)). Uses the unshifted
/// blocks of `hess`. Empty when g = 0.
std::optional<WeakGradientEdge> weak_gradient_edge(const PredictionField& weak,
                                                   const BlockHessian& hess,
                                                   double lambda_k,
                                                   const PredictionField& g);

}  // namespace grnboost
