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

#include "grnboost/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grnboost/common.hpp"
#include "grnboost/hilbert.hpp"
#include "grnboost/linalg.hpp"

namespace grnboost {

namespace {

void track_error(OracleReport& r, double analytic, double reference) {
  const double abs_err = std::abs(analytic - reference);
  const double rel_err = abs_err / std::max(1.0, std::abs(analytic));
  r.max_abs_error = std::max(r.max_abs_error, abs_err);
  r.max_rel_error = std::max(r.max_rel_error, rel_err);
}

void track_slack(OracleReport& r, double slack) {
  r.min_slack = r.min_slack ? std::min(*r.min_slack, slack) : slack;
}

std::vector<double> random_target(const LossModel& loss, Rng& rng) {
  const int k = loss.output_dim();
  std::vector<double> y(static_cast<std::size_t>(k), 0.0);
  switch (loss.kind()) {
    case LossKind::BCE:
      y[0] = static_cast<double>(rng.below(2));
      break;
    case LossKind::CCE:
      y[rng.below(static_cast<std::uint64_t>(k))] = 1.0;
      break;
    default:
      y[0] = rng.uniform(-10.0, 10.0);
      break;
  }
  return y;
}

// Gaussian elimination with partial pivoting on copies of a and b.
std::optional<std::vector<double>> gauss_eliminate(std::vector<double> a,
                                                   std::vector<double> b,
                                                   int k) {
  auto at = [&](int r, int c) -> double& {
    return a[static_cast<std::size_t>(r) * k + c];
  };
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
  for (int col = 0; col < k; ++col) {
    int pivot = col;
    for (int r = col + 1; r < k; ++r) {
      if (std::abs(at(r, col)) > std::abs(at(pivot, col))) pivot = r;
    }
    if (std::abs(at(pivot, col)) <= 1e-13 * scale) return std::nullopt;
    if (pivot != col) {
      for (int c = 0; c < k; ++c) std::swap(at(col, c), at(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (int r = col + 1; r < k; ++r) {
      const double factor = at(r, col) / at(col, col);
      for (int c = col; c < k; ++c) at(r, c) -= factor * at(col, c);
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(k));
  for (int r = k - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < k; ++c) acc -= at(r, c) * x[c];
    x[r] = acc / at(r, r);
  }
  return x;
}

// Elimination plus one step of iterative refinement.
std::optional<std::vector<double>> gauss_solve(const std::vector<double>& a,
                                               const std::vector<double>& b,
                                               int k) {
  auto x = gauss_eliminate(a, b, k);
  if (!x) return std::nullopt;
  std::vector<double> residual(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    double acc = b[r];
    for (int c = 0; c < k; ++c) acc -= a[static_cast<std::size_t>(r) * k + c] * (*x)[c];
    residual[r] = acc;
  }
  if (const auto correction = gauss_eliminate(a, residual, k)) {
    for (int i = 0; i < k; ++i) (*x)[i] += (*correction)[i];
  }
  for (double v : *x) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return x;
}

}  // namespace

std::vector<double> numeric_leaf_minimizer(std::span<const double> grads,
                                           std::span<const double> hessians,
                                           int k, double lambda,
                                           std::span<const int> members,
                                           LeafRegularization regularization) {
  if (k < 1 || members.empty()) {
    throw InvalidArgument("numeric_leaf_minimizer: empty leaf");
  }
  const std::size_t kk = static_cast<std::size_t>(k) * k;
  const std::size_t n = grads.size() / static_cast<std::size_t>(k);
  if (grads.size() != n * k || hessians.size() != n * kk) {
    throw InvalidArgument("numeric_leaf_minimizer: shape mismatch");
  }
  std::vector<double> g_sum(static_cast<std::size_t>(k), 0.0);
  std::vector<double> h_sum(kk, 0.0);
  for (int i : members) {
    if (i < 0 || static_cast<std::size_t>(i) >= n) {
      throw InvalidArgument("numeric_leaf_minimizer: member out of range");
    }
    for (int a = 0; a < k; ++a) g_sum[a] += grads[static_cast<std::size_t>(i) * k + a];
    for (std::size_t e = 0; e < kk; ++e) h_sum[e] += hessians[i * kk + e];
  }
  const double reg = regularization == LeafRegularization::PerLeafCount
                         ? lambda * static_cast<double>(members.size())
                         : lambda;
  for (int a = 0; a < k; ++a) h_sum[static_cast<std::size_t>(a) * k + a] += reg;

  if (k == 1) {
    // q'(w) = G + H w is increasing; bisect on its sign.
    const double slope = h_sum[0];
    const double offset = g_sum[0];
    if (!(slope > 0.0) || !std::isfinite(slope)) {
      throw SingularSystem("numeric_leaf_minimizer: leaf curvature is not positive");
    }
    auto derivative = [&](double w) { return offset + slope * w; };
    double lo = -1.0;
    double hi = 1.0;
    for (int i = 0; i < 4000 && derivative(lo) > 0.0; ++i) lo *= 2.0;
    for (int i = 0; i < 4000 && derivative(hi) < 0.0; ++i) hi *= 2.0;
    for (int i = 0; i < 4000; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (derivative(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double w = std::abs(derivative(lo)) < std::abs(derivative(hi)) ? lo : hi;
    return {w};
  }

  std::vector<double> rhs(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) rhs[a] = -g_sum[a];
  auto w = gauss_solve(h_sum, rhs, k);
  if (!w) throw SingularSystem("numeric_leaf_minimizer: leaf system is singular");
  return *w;
}

namespace {

std::string loss_label(const LossModel& loss) {
  std::string label = loss.name();
  if (loss.kind() == LossKind::CCE) label += "/K=" + std::to_string(loss.output_dim());
  if (loss.kind() == LossKind::Drift) {
    const DriftVariant& v = loss.drift_variant();
    if (v.family == DriftFamily::PowerFamily) label += "/m=" + std::to_string(v.power);
    if (v.scale != 1.0) label += "/C=" + format_double(v.scale);
  }
  if (loss.l2_ridge() != 0.0) label += "/ridge=" + format_double(loss.l2_ridge());
  return label;
}

}  // namespace

OracleReport finite_difference_check(const LossModel& loss, int n_points,
                                     double step, double tolerance,
                                     std::uint64_t seed) {
  if (!(step >= 1e-8 && step <= 1e-3)) {
    throw InvalidArgument("finite difference step must lie in [1e-8, 1e-3]");
  }
  OracleReport r;
  r.name = "finite_difference/" + loss_label(loss);
  r.tolerance = tolerance;
  Rng rng(seed);
  const int k = loss.output_dim();
  std::vector<double> u(static_cast<std::size_t>(k));
  std::vector<double> g(static_cast<std::size_t>(k));
  std::vector<double> h(static_cast<std::size_t>(k) * k);
  std::vector<double> g_plus(g.size()), g_minus(g.size()), scratch(h.size());

  for (int p = 0; p < n_points; ++p) {
    for (double& v : u) v = rng.uniform(-10.0, 10.0);
    const std::vector<double> y = random_target(loss, rng);
    loss.evaluate(u, y, g, h);
    for (int j = 0; j < k; ++j) {
      const double saved = u[j];
      u[j] = saved + step;
      const double f_plus = loss.value(u, y);
      loss.evaluate(u, y, g_plus, scratch);
      u[j] = saved - step;
      const double f_minus = loss.value(u, y);
      loss.evaluate(u, y, g_minus, scratch);
      u[j] = saved;
      track_error(r, g[j], (f_plus - f_minus) / (2.0 * step));
      for (int i = 0; i < k; ++i) {
        track_error(r, h[static_cast<std::size_t>(i) * k + j],
                    (g_plus[i] - g_minus[i]) / (2.0 * step));
      }
    }
    r.samples_checked += 1;
  }
  r.pass = r.max_rel_error < tolerance;
  return r;
}

OracleReport recursion_bound_check(double alpha0, double c, int n_steps,
                                   double tolerance) {
  if (!(alpha0 > 0.0) || !(c > 0.0) || n_steps < 0) {
    throw InvalidArgument("recursion_bound_check: alpha0, c must be > 0");
  }
  if (c * std::sqrt(alpha0) > 1.0) {
    throw InvalidArgument(
        "recursion_bound_check: hypothesis c * sqrt(alpha0) <= 1 violated");
  }
  OracleReport r;
  r.name = "recursion_bound";
  r.tolerance = tolerance;
  double alpha = alpha0;
  bool ok = true;
  for (int k = 0; k <= n_steps; ++k) {
    const double tight = 1.0 / std::pow(1.0 / std::sqrt(alpha0) + c * k / 2.0, 2);
    const double loose = 4.0 / (c * c * (k + 2.0) * (k + 2.0));
    const double slack_tight = tight - alpha;
    const double slack_loose = loose - tight;
    track_slack(r, std::min(slack_tight / tight, slack_loose / loose));
    if (slack_tight < -tolerance * tight || slack_loose < -tolerance * loose ||
        alpha < 0.0) {
      ok = false;
      r.max_rel_error = std::max(r.max_rel_error, -slack_tight / tight);
    }
    r.samples_checked += 1;
    const double next = alpha - c * std::pow(alpha, 1.5);
    if (next > alpha) ok = false;  // must be non-increasing
    alpha = next;
  }
  r.pass = ok;
  return r;
}

OracleReport hessian_dominance_sweep(const LossModel& loss, int n_points,
                                     std::uint64_t seed, double tolerance) {
  if (loss.kind() != LossKind::BCE && loss.kind() != LossKind::CCE) {
    throw InvalidArgument("hessian dominance sweep supports bce and cce only");
  }
  OracleReport r;
  r.name = "dominance/" + loss.name() + "/K=" + std::to_string(loss.output_dim());
  r.tolerance = tolerance;
  const double c = regularity_constants(loss).dominance.value_or(1.0);
  const int k = loss.output_dim();
  const bool closed_form = loss.kind() == LossKind::CCE && loss.l2_ridge() == 0.0;
  const linalg::Gauge gauge =
      closed_form ? linalg::Gauge::ZeroSum : linalg::Gauge::None;
  Rng rng(seed);
  std::vector<double> u(static_cast<std::size_t>(k));
  std::vector<double> g(static_cast<std::size_t>(k));
  std::vector<double> h(static_cast<std::size_t>(k) * k);
  std::vector<double> f(static_cast<std::size_t>(k));
  std::vector<double> rhs(static_cast<std::size_t>(k));
  bool ok = true;

  for (int p = 0; p < n_points; ++p) {
    for (double& v : u) v = rng.uniform(-10.0, 10.0);
    const std::vector<double> y = random_target(loss, rng);
    const double value = loss.evaluate(u, y, g, h);
    double decrement = 0.0;
    if (k == 1) {
      decrement = g[0] * g[0] / h[0];
    } else {
      for (int j = 0; j < k; ++j) rhs[j] = -g[j];
      if (!linalg::solve_psd(h, k, 0.0, rhs, f, gauge)) {
        ok = false;
        continue;
      }
      for (int j = 0; j < k; ++j) decrement -= g[j] * f[j];
    }
    if (closed_form) {
      int t = 0;
      while (y[t] != 1.0) ++t;
      double top = u[0];
      for (double v : u) top = std::max(top, v);
      double total = 0.0;
      for (double v : u) total += std::exp(v - top);
      const double p_t = std::exp(u[t] - top) / total;
      const double reference = (1.0 - p_t) / p_t;
      const double rel = std::abs(decrement - reference) / std::max(1.0, reference);
      r.max_rel_error = std::max(r.max_rel_error, rel);
      r.max_abs_error = std::max(r.max_abs_error, std::abs(decrement - reference));
      if (rel > 1e-6) ok = false;
    }
    const double slack = decrement - c * value;
    track_slack(r, slack);
    if (slack < -tolerance) ok = false;
    r.samples_checked += 1;
  }

  // Empirical risk over N = 64 points via the block-diagonal exact direction.
  constexpr int kEmpiricalSamples = 64;
  constexpr int kEmpiricalTrials = 5;
  for (int trial = 0; trial < kEmpiricalTrials; ++trial) {
    PredictionField field(kEmpiricalSamples, k);
    PredictionField grad(kEmpiricalSamples, k);
    BlockHessian hess(kEmpiricalSamples, k);
    std::vector<double> values(kEmpiricalSamples);
    for (int i = 0; i < kEmpiricalSamples; ++i) {
      for (int j = 0; j < k; ++j) field(i, j) = rng.uniform(-10.0, 10.0);
      const std::vector<double> y = random_target(loss, rng);
      values[i] = loss.evaluate(field.row(i), y, grad.row(i), hess.block(i));
    }
    const double risk = pairwise_sum(values) / kEmpiricalSamples;
    try {
      const NewtonDirection dir = exact_newton_direction(hess, grad, 0.0, gauge);
      const double decrement = hessian_inner(dir.direction, dir.direction, hess);
      const double slack = decrement - c * risk;
      track_slack(r, slack);
      if (slack < -tolerance) ok = false;
    } catch (const SingularSystem&) {
      ok = false;
    }
    r.samples_checked += 1;
  }
  r.detail = std::to_string(n_points) + " pointwise + " +
             std::to_string(kEmpiricalTrials) + " empirical (N=64)";
  r.pass = ok;
  return r;
}

OracleReport drift_identity_check(const DriftVariant& variant, int n_points,
                                  std::uint64_t seed, double tolerance) {
  variant.validate();
  OracleReport r;
  const LossModel model = LossModel::drift(variant);
  r.name = "drift_identity/" + model.name() +
           (variant.family == DriftFamily::PowerFamily
                ? "/m=" + std::to_string(variant.power)
                : "");
  r.tolerance = tolerance;
  Rng rng(seed);
  bool ok = drift_loss(variant, 0.0).value == 0.0;
  for (int p = 0; p < n_points; ++p) {
    double x = 0.0;
    while (x == 0.0) x = rng.uniform(-5.0, 5.0);
    const ScalarDerivatives d = drift_loss(variant, x);
    const ScalarDerivatives m = drift_loss(variant, -x);
    const double drift = newton_drift(variant, x);
    const double ratio = d.first / d.second;
    const double err = std::abs(ratio - drift) / (1.0 + std::abs(drift));
    r.max_abs_error = std::max(r.max_abs_error, std::abs(ratio - drift));
    r.max_rel_error = std::max(r.max_rel_error, err);
    if (!(err <= tolerance)) ok = false;
    if (!(d.second > 0.0)) ok = false;
    // Even loss, odd gradient.
    if (std::abs(d.value - m.value) > 1e-12 * (1.0 + std::abs(d.value))) ok = false;
    if (std::abs(d.first + m.first) > 1e-12 * (1.0 + std::abs(d.first))) ok = false;
    r.samples_checked += 1;
  }
  r.pass = ok;
  return r;
}

OracleReport log_inequality_check(int n_grid, double tolerance) {
  if (n_grid < 2) throw InvalidArgument("log_inequality_check: grid too small");
  OracleReport r;
  r.name = "log_inequality";
  r.tolerance = tolerance;
  bool ok = true;
  for (int j = 1; j <= n_grid; ++j) {
    const double p = std::pow(10.0, -6.0 + 6.0 * j / n_grid);
    const double slack = (1.0 - p) / p + std::log(p);
    track_slack(r, slack);
    if (slack < -tolerance) ok = false;
    r.samples_checked += 1;
  }
  r.pass = ok;
  return r;
}

OracleReport leaf_minimizer_check(int n_leaves, std::uint64_t seed,
                                  double tolerance) {
  OracleReport r;
  r.name = "leaf_minimizer";
  r.tolerance = tolerance;
  Rng rng(seed);
  const double lambdas[] = {0.0, 0.5, 2.0};
  bool ok = true;
  for (int leaf = 0; leaf < n_leaves; ++leaf) {
    const int k = (leaf % 2 == 0) ? 1 : 3;
    const int size = 1 + static_cast<int>(rng.below(50));
    const double lambda = lambdas[rng.below(3)];
    PredictionField grad(size, k);
    BlockHessian hess(size, k);
    for (int i = 0; i < size; ++i) {
      for (int a = 0; a < k; ++a) grad(i, a) = rng.normal();
      auto block = hess.block(i);
      if (k == 1) {
        block[0] = rng.uniform(0.05, 2.0);
      } else {
        // B B^T + 0.1 I
        double b[9];
        for (double& v : b) v = rng.normal() / std::sqrt(3.0);
        for (int a = 0; a < 3; ++a) {
          for (int c = 0; c < 3; ++c) {
            double acc = a == c ? 0.1 : 0.0;
            for (int t = 0; t < 3; ++t) acc += b[a * 3 + t] * b[c * 3 + t];
            block[static_cast<std::size_t>(a) * 3 + c] = acc;
          }
        }
      }
    }
    FeatureMatrix features(size, 1);
    TreeParams params;
    params.max_depth = 0;
    params.lambda = lambda;
    const Tree tree = fit_tree(features, grad, hess, params);
    std::vector<int> members(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) members[i] = i;
    std::vector<double> flat_h;
    for (int i = 0; i < size; ++i) {
      const auto block = hess.block(i);
      flat_h.insert(flat_h.end(), block.begin(), block.end());
    }
    const std::vector<double> reference =
        numeric_leaf_minimizer(grad.values(), flat_h, k, lambda, members);
    const auto fitted = tree.nodes()[0].weight;
    for (int a = 0; a < k; ++a) {
      const double err = std::abs(fitted[a] - reference[a]);
      r.max_abs_error = std::max(r.max_abs_error, err);
      r.max_rel_error =
          std::max(r.max_rel_error, err / std::max(1.0, std::abs(reference[a])));
      if (!(err <= tolerance)) ok = false;
    }
    r.samples_checked += 1;
  }
  r.pass = ok;
  return r;
}

std::vector<OracleReport> run_verification(const VerifyOptions& options) {
  static const char* const kGroups[] = {"fd",   "dominance", "drift",
                                        "leaf", "recursion", "log"};
  if (!options.only.empty() &&
      std::find(std::begin(kGroups), std::end(kGroups), options.only) ==
          std::end(kGroups)) {
    throw InvalidArgument("unknown oracle group '" + options.only + "'");
  }
  auto wanted = [&](const char* group) {
    return options.only.empty() || options.only == group;
  };
  auto tol = [&](double fallback) { return options.tolerance.value_or(fallback); };

  std::vector<OracleReport> out;
  const std::vector<DriftVariant> drifts = {
      {DriftFamily::LogBarrier, 1.0, 3},
      {DriftFamily::Charbonnier, 1.0, 3},
      {DriftFamily::PowerFamily, 1.0, 3},
      {DriftFamily::PowerFamily, 2.0, 5},
      {DriftFamily::ArcTan, 1.0, 3},
  };

  if (wanted("fd")) {
    std::vector<LossModel> losses = {LossModel::mse(), LossModel::bce(),
                                     LossModel::cce(3), LossModel::charbonnier(),
                                     LossModel::bce(0.1)};
    for (const DriftVariant& v : drifts) losses.push_back(LossModel::drift(v));
    std::uint64_t seed = 100;
    for (const LossModel& loss : losses) {
      out.push_back(finite_difference_check(loss, 100, 1e-6, tol(1e-5), seed++));
    }
  }
  if (wanted("dominance")) {
    out.push_back(hessian_dominance_sweep(LossModel::bce(), 500, 7, tol(1e-10)));
    for (int k : {2, 3, 5}) {
      out.push_back(hessian_dominance_sweep(LossModel::cce(k), 500,
                                            7 + static_cast<std::uint64_t>(k),
                                            tol(1e-10)));
    }
  }
  if (wanted("drift")) {
    std::uint64_t seed = 200;
    for (const DriftVariant& v : drifts) {
      out.push_back(drift_identity_check(v, 200, seed++, tol(1e-8)));
    }
  }
  if (wanted("leaf")) out.push_back(leaf_minimizer_check(200, 3, tol(1e-8)));
  if (wanted("recursion")) {
    Rng rng(17);
    OracleReport merged;
    merged.name = "recursion_bound/20-random";
    merged.tolerance = tol(1e-12);
    merged.pass = true;
    for (int i = 0; i < 20; ++i) {
      const double alpha0 = std::pow(10.0, rng.uniform(-2.0, 1.0));
      const double c = rng.uniform(0.01, 1.0) / std::sqrt(alpha0);
      const OracleReport one = recursion_bound_check(alpha0, c, 1000, tol(1e-12));
      merged.pass = merged.pass && one.pass;
      merged.samples_checked += one.samples_checked;
      merged.max_rel_error = std::max(merged.max_rel_error, one.max_rel_error);
      if (one.min_slack) track_slack(merged, *one.min_slack);
    }
    out.push_back(merged);
  }
  if (wanted("log")) out.push_back(log_inequality_check(10000, tol(1e-12)));
  return out;
}

}  // namespace grnboost
