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

// Brute-force verifiers. None of them reuses the solve or derivative code
// of the routine it checks.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnboost/losses.hpp"
#include "grnboost/trees.hpp"

namespace grnboost {

struct OracleReport {
  std::string name;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  int samples_checked = 0;
  bool pass = false;
  double tolerance = 0.0;
  /// Smallest (lhs - rhs) seen by inequality checks.
  std::optional<double> min_slack;
  std::string detail;
};

/// Minimizer of sum_{i in members} (<w, g_i> + w^T h_i w / 2) + reg ||w||^2 / 2
/// where reg = |members| * lambda (PerLeafCount) or lambda (FixedScalar).
/// K = 1 bisects on the derivative; K > 1 uses Gaussian elimination with
/// partial pivoting. `grads` is N x K and `hessians` N x K x K, row-major.
/// Throws SingularSystem for a singular or indefinite aggregate.
std::vector<double> numeric_leaf_minimizer(
    std::span<const double> grads, std::span<const double> hessians, int k,
    double lambda, std::span<const int> members,
    LeafRegularization regularization = LeafRegularization::PerLeafCount);

/// Central differences of value (for the gradient) and of the gradient (for
/// the Hessian) at n_points random inputs in [-10, 10]^K. The error of an
/// entry is |analytic - fd| / max(1, |analytic|); pass iff every error is
/// below `tolerance`.
OracleReport finite_difference_check(const LossModel& loss, int n_points,
                                     double step, double tolerance = 1e-5,
                                     std::uint64_t seed = 1);

/// Simulates a_{k+1} = a_k - c a_k^{3/2} and checks
/// a_k <= 1 / (1/sqrt(a_0) + c k / 2)^2 <= 4 / (c^2 (k + 2)^2).
/// Throws InvalidArgument unless c sqrt(a_0) <= 1.
OracleReport recursion_bound_check(double alpha0, double c, int n_steps,
                                   double tolerance = 1e-12);

/// Pointwise and empirical (N = 64) Hessian dominance ||f||_H^2 >= c L for
/// BCE and CCE; for CCE the gauge-fixed decrement is cross-checked against
/// (1 - p_t) / p_t.
OracleReport hessian_dominance_sweep(const LossModel& loss, int n_points,
                                     std::uint64_t seed = 7,
                                     double tolerance = 1e-10);

/// L'(x) / L''(x) against the closed-form drift on random x in [-5, 5],
/// together with convexity and evenness.
OracleReport drift_identity_check(const DriftVariant& variant, int n_points,
                                  std::uint64_t seed = 11,
                                  double tolerance = 1e-8);

/// (1 - p) / p + log p >= -tolerance on a logarithmic grid over (1e-6, 1].
OracleReport log_inequality_check(int n_grid, double tolerance = 1e-12);

/// Fits single-leaf trees to random leaves (K in {1, 3}, sizes 1..50,
/// lambda in {0, 0.5, 2}) and compares with numeric_leaf_minimizer.
OracleReport leaf_minimizer_check(int n_leaves, std::uint64_t seed = 3,
                                  double tolerance = 1e-8);

struct VerifyOptions {
  /// Empty runs everything; otherwise one of fd, dominance, drift, leaf,
  /// recursion, log.
  std::string only;
  /// Overrides every oracle's tolerance.
  std::optional<double> tolerance;
};

std::vector<OracleReport> run_verification(const VerifyOptions& options);

}  // namespace grnboost
