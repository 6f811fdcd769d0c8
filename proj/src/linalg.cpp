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

#include "grnboost/linalg.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "grnboost/common.hpp"

namespace grnboost::linalg {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool ldlt_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                Eigen::VectorXd& out) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = ldlt.vectorD();
  const double largest = d.cwiseAbs().maxCoeff();
  if (!(largest > 0.0) || !std::isfinite(largest)) return false;
  if (d.minCoeff() <= largest * kSingularRatio) return false;
  out = ldlt.solve(rhs);
  return out.allFinite();
}

}  // namespace

bool solve_psd(std::span<const double> a, int k, double shift,
               std::span<const double> rhs, std::span<double> x, Gauge gauge) {
  if (k <= 0 || a.size() != static_cast<std::size_t>(k) * k ||
      rhs.size() != static_cast<std::size_t>(k) || x.size() != rhs.size()) {
    throw InvalidArgument("solve_psd: shape mismatch");
  }
  if (k == 1) {
    const double denom = a[0] + shift;
    if (!(denom > 0.0) || !std::isfinite(denom)) return false;
    x[0] = rhs[0] / denom;
    return std::isfinite(x[0]);
  }
  Eigen::Map<const RowMatrix> block(a.data(), k, k);
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), k);
  Eigen::MatrixXd shifted = block;
  shifted.diagonal().array() += shift;

  Eigen::VectorXd solution;
  if (gauge == Gauge::ZeroSum) {
    // Columns e_j - (1/k) 1, j < k, span the zero-sum subspace.
    Eigen::MatrixXd basis =
        Eigen::MatrixXd::Constant(k, k - 1, -1.0 / static_cast<double>(k));
    for (int j = 0; j < k - 1; ++j) basis(j, j) += 1.0;
    const Eigen::MatrixXd reduced = basis.transpose() * shifted * basis;
    Eigen::VectorXd z;
    if (!ldlt_solve(reduced, basis.transpose() * b, z)) return false;
    solution = basis * z;
  } else if (!ldlt_solve(shifted, b, solution)) {
    return false;
  }
  for (int i = 0; i < k; ++i) x[i] = solution[i];
  return true;
}

SolveStatus solve_psd_with_jitter(std::span<const double> a, int k,
                                  double shift, std::span<const double> rhs,
                                  std::span<double> x, Gauge gauge) {
  if (solve_psd(a, k, shift, rhs, x, gauge)) return SolveStatus::Solved;
  double trace = 0.0;
  for (int i = 0; i < k; ++i) trace += a[static_cast<std::size_t>(i) * k + i];
  const double jitter = 1e-12 * trace / k;
  if (jitter > 0.0 && solve_psd(a, k, shift + jitter, rhs, x, gauge)) {
    return SolveStatus::Jittered;
  }
  return SolveStatus::Singular;
}

double quadratic_form(std::span<const double> a, int k, double shift,
                      std::span<const double> u, std::span<const double> v) {
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    double row = shift * v[i];
    for (int j = 0; j < k; ++j) row += a[static_cast<std::size_t>(i) * k + j] * v[j];
    total += u[i] * row;
  }
  return total;
}

double min_eigenvalue(std::span<const double> a, int k) {
  if (k == 1) return a[0];
  Eigen::Map<const RowMatrix> block(a.data(), k, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      Eigen::MatrixXd(block), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace grnboost::linalg
