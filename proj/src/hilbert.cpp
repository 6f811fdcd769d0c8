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

#include "grnboost/hilbert.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "grnboost/common.hpp"

namespace grnboost {

namespace {

void require_same_shape(const PredictionField& a, const PredictionField& b,
                        const char* where) {
  if (a.n_samples() != b.n_samples() || a.output_dim() != b.output_dim()) {
    throw InvalidArgument(std::string(where) + ": shape mismatch (" +
                          std::to_string(a.n_samples()) + "x" +
                          std::to_string(a.output_dim()) + " vs " +
                          std::to_string(b.n_samples()) + "x" +
                          std::to_string(b.output_dim()) + ")");
  }
}

void require_hessian_shape(const BlockHessian& h, const PredictionField& a,
                           const char* where) {
  if (h.n_samples() != a.n_samples() || h.output_dim() != a.output_dim()) {
    throw InvalidArgument(std::string(where) + ": Hessian shape mismatch");
  }
}

double mean_of(std::vector<double>& terms) {
  if (terms.empty()) return 0.0;
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

}  // namespace

PredictionField::PredictionField(int n_samples, int output_dim, double fill)
    : n_(n_samples),
      k_(output_dim),
      values_(static_cast<std::size_t>(n_samples) * output_dim, fill) {
  if (n_samples < 0 || output_dim < 1) {
    throw InvalidArgument("PredictionField: invalid shape");
  }
}

PredictionField::PredictionField(int n_samples, int output_dim,
                                 std::vector<double> values)
    : n_(n_samples), k_(output_dim), values_(std::move(values)) {
  if (n_samples < 0 || output_dim < 1 ||
      values_.size() != static_cast<std::size_t>(n_samples) * output_dim) {
    throw InvalidArgument("PredictionField: value count does not match shape");
  }
}

bool PredictionField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

PredictionField PredictionField::scaled(double alpha) const {
  PredictionField out = *this;
  for (double& v : out.values_) v *= alpha;
  return out;
}

void PredictionField::add_scaled(const PredictionField& other, double alpha) {
  require_same_shape(*this, other, "add_scaled");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] += alpha * other.values_[i];
  }
}

BlockHessian::BlockHessian(int n_samples, int output_dim, double shift)
    : n_(n_samples),
      k_(output_dim),
      shift_(shift),
      blocks_(static_cast<std::size_t>(n_samples) * output_dim * output_dim,
              0.0) {
  if (n_samples < 0 || output_dim < 1) {
    throw InvalidArgument("BlockHessian: invalid shape");
  }
}

BlockHessian BlockHessian::identity(int n_samples, int output_dim) {
  BlockHessian out(n_samples, output_dim);
  for (int i = 0; i < n_samples; ++i) {
    auto b = out.block(i);
    for (int j = 0; j < output_dim; ++j) {
      b[static_cast<std::size_t>(j) * output_dim + j] = 1.0;
    }
  }
  return out;
}

double hilbert_inner(const PredictionField& a, const PredictionField& b) {
  require_same_shape(a, b, "hilbert_inner");
  std::vector<double> terms(static_cast<std::size_t>(a.n_samples()));
  for (int i = 0; i < a.n_samples(); ++i) {
    const auto ra = a.row(i);
    const auto rb = b.row(i);
    double dot = 0.0;
    for (int j = 0; j < a.output_dim(); ++j) dot += ra[j] * rb[j];
    terms[i] = dot;
  }
  return mean_of(terms);
}

double hilbert_norm(const PredictionField& a) {
  return std::sqrt(std::max(0.0, hilbert_inner(a, a)));
}

double grad_hilbert_norm(const PredictionField& g) { return hilbert_norm(g); }

double hessian_inner(const PredictionField& a, const PredictionField& b,
                     const BlockHessian& hess, double extra_shift) {
  require_same_shape(a, b, "hessian_inner");
  require_hessian_shape(hess, a, "hessian_inner");
  const double shift = hess.shift() + extra_shift;
  std::vector<double> terms(static_cast<std::size_t>(a.n_samples()));
  for (int i = 0; i < a.n_samples(); ++i) {
    terms[i] = linalg::quadratic_form(hess.block(i), a.output_dim(), shift,
                                      a.row(i), b.row(i));
  }
  return mean_of(terms);
}

NewtonDirection exact_newton_direction(const BlockHessian& hess,
                                       const PredictionField& g, double shift,
                                       linalg::Gauge gauge, int threads) {
  require_hessian_shape(hess, g, "exact_newton_direction");
  if (!(shift >= 0.0)) {
    throw InvalidArgument("exact_newton_direction: shift must be >= 0");
  }
  const int k = g.output_dim();
  const double total_shift = hess.shift() + shift;
  NewtonDirection out{PredictionField(g.n_samples(), k), 0};
  std::vector<unsigned char> jittered(static_cast<std::size_t>(g.n_samples()), 0);
  std::atomic<int> singular_at{-1};

  parallel_for(static_cast<std::size_t>(g.n_samples()), threads,
               [&](std::size_t begin, std::size_t end) {
                 std::vector<double> rhs(static_cast<std::size_t>(k));
                 for (std::size_t i = begin; i < end; ++i) {
                   const int row = static_cast<int>(i);
                   const auto gi = g.row(row);
                   for (int j = 0; j < k; ++j) rhs[j] = -gi[j];
                   const auto status = linalg::solve_psd_with_jitter(
                       hess.block(row), k, total_shift, rhs,
                       out.direction.row(row), gauge);
                   if (status == linalg::SolveStatus::Jittered) {
                     jittered[i] = 1;
                   } else if (status == linalg::SolveStatus::Singular) {
                     int expected = -1;
                     singular_at.compare_exchange_strong(expected, row);
                   }
                 }
               });
  if (singular_at.load() >= 0) {
    throw SingularSystem("Newton direction undefined: Hessian block " +
                         std::to_string(singular_at.load()) +
                         " is singular");
  }
  for (unsigned char j : jittered) out.jittered_blocks += j;
  return out;
}

std::optional<CosineAngle> cosine_angle(const PredictionField& exact,
                                        const PredictionField& weak,
                                        const BlockHessian& hess) {
  require_same_shape(exact, weak, "cosine_angle");
  const double unshift = -hess.shift();
  const double exact_sq = hessian_inner(exact, exact, hess, unshift);
  const double weak_sq = hessian_inner(weak, weak, hess, unshift);
  if (!(exact_sq > 0.0) || !(weak_sq > 0.0)) return std::nullopt;
  const double cross = hessian_inner(exact, weak, hess, unshift);
  CosineAngle out;
  out.raw = cross / (std::sqrt(exact_sq) * std::sqrt(weak_sq));
  out.clamped = std::clamp(out.raw, -1.0, 1.0);
  return out;
}

std::optional<WeakGradientEdge> weak_gradient_edge(const PredictionField& weak,
                                                   const BlockHessian& hess,
                                                   double lambda_k,
                                                   const PredictionField& g) {
  require_same_shape(weak, g, "weak_gradient_edge");
  require_hessian_shape(hess, g, "weak_gradient_edge");
  const double g_sq = hilbert_inner(g, g);
  if (!(g_sq > 0.0)) return std::nullopt;

  const int k = g.output_dim();
  WeakGradientEdge out;
  out.implied_gradient = PredictionField(g.n_samples(), k);
  PredictionField diff(g.n_samples(), k);
  for (int i = 0; i < g.n_samples(); ++i) {
    const auto block = hess.block(i);
    const auto w = weak.row(i);
    auto gw = out.implied_gradient.row(i);
    for (int a = 0; a < k; ++a) {
      double acc = lambda_k * w[a];
      for (int b = 0; b < k; ++b) {
        acc += block[static_cast<std::size_t>(a) * k + b] * w[b];
      }
      gw[a] = -acc;
      diff(i, a) = gw[a] - g(i, a);
    }
  }
  out.residual_ratio = hilbert_inner(diff, diff) / g_sq;
  out.edge_violated = out.residual_ratio > 1.0;
  out.gamma = std::sqrt(std::max(0.0, 1.0 - out.residual_ratio));
  return out;
}

}  // namespace grnboost
