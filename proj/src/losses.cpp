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

#include "grnboost/losses.hpp"

#include <algorithm>
#include <cmath>

#include "grnboost/common.hpp"

namespace grnboost {

namespace {

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log(1 + e^u) without overflow.
double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void DriftVariant::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("drift scale C must be positive and finite");
  }
  if (family == DriftFamily::PowerFamily && (power < 3 || power > 8)) {
    throw InvalidArgument("power-family drift requires 3 <= m <= 8");
  }
}

ScalarDerivatives drift_loss(const DriftVariant& variant, double x) {
  const double c = variant.scale;
  const double a = std::abs(x);
  ScalarDerivatives out;
  switch (variant.family) {
    case DriftFamily::LogBarrier:
      out.value = c * (a - std::log1p(a));
      out.first = c * x / (1.0 + a);
      out.second = c / ((1.0 + a) * (1.0 + a));
      break;
    case DriftFamily::Charbonnier: {
      const double root = std::hypot(1.0, x);
      // sqrt(1 + x^2) - 1 rewritten to avoid cancellation near zero.
      out.value = c * (x / (root + 1.0)) * x;
      out.first = c * x / root;
      out.second = c / (root * root * root);
      break;
    }
    case DriftFamily::PowerFamily: {
      const double m = variant.power;
      const double log1pa = std::log1p(a);
      out.value = c * a + c / (m - 2.0) * std::expm1(-(m - 2.0) * log1pa);
      out.first = sign(x) * c * -std::expm1(-(m - 1.0) * log1pa);
      out.second = c * (m - 1.0) * std::exp(-m * log1pa);
      break;
    }
    case DriftFamily::ArcTan:
      out.value = c * (a * std::atan(a) - 0.5 * std::log1p(a * a));
      out.first = c * std::atan(x);
      out.second = c / (1.0 + x * x);
      break;
  }
  return out;
}

double newton_drift(const DriftVariant& variant, double x) {
  const double a = std::abs(x);
  double d = 0.0;
  switch (variant.family) {
    case DriftFamily::LogBarrier:
      d = a * (1.0 + a);
      break;
    case DriftFamily::Charbonnier:
      d = a * (1.0 + a * a);
      break;
    case DriftFamily::PowerFamily: {
      const double m = variant.power;
      d = (1.0 + a) * std::expm1((m - 1.0) * std::log1p(a)) / (m - 1.0);
      break;
    }
    case DriftFamily::ArcTan:
      d = (1.0 + a * a) * std::atan(a);
      break;
  }
  return sign(x) * d;
}

double newton_drift_excess(const DriftVariant& variant, double x) {
  const double a = std::abs(x);
  double e = 0.0;
  switch (variant.family) {
    case DriftFamily::LogBarrier:
      e = a * a;
      break;
    case DriftFamily::Charbonnier:
      e = a * a * a;
      break;
    case DriftFamily::PowerFamily: {
      // ((1 + a)^m - 1 - m a) / (m - 1) = sum_{j >= 2} binom(m, j) a^j / (m - 1)
      const int m = variant.power;
      double binom = 1.0;
      double power = 1.0;
      for (int j = 1; j <= m; ++j) {
        binom = binom * (m - j + 1) / j;
        power *= a;
        if (j >= 2) e += binom * power;
      }
      e /= m - 1.0;
      break;
    }
    case DriftFamily::ArcTan: {
      double tail = 0.0;  // atan(a) - a
      if (a < 0.1) {
        double term = a;
        for (int j = 1; j <= 10; ++j) {
          term *= -a * a;
          tail += term / (2.0 * j + 1.0);
        }
      } else {
        tail = std::atan(a) - a;
      }
      e = a * a * std::atan(a) + tail;
      break;
    }
  }
  return sign(x) * e;
}

double drift_lipschitz_constant(const DriftVariant& variant) {
  const double c = variant.scale;
  switch (variant.family) {
    case DriftFamily::LogBarrier:
      // |L'''| = 2C / (1 + x)^3, largest at 0.
      return c;
    case DriftFamily::Charbonnier:
      // |L'''| = 3x (1 + x^2)^(-5/2), largest at x = 1/2.
      return c * 1.5 * 0.5 * std::pow(1.25, -2.5);
    case DriftFamily::PowerFamily: {
      // |L'''| = C m (m - 1) (1 + x)^(-(m + 1)), largest at 0.
      const double m = variant.power;
      return c * m * (m - 1.0) / 2.0;
    }
    case DriftFamily::ArcTan:
      // |L'''| = 2x / (1 + x^2)^2, largest at x = 1/sqrt(3).
      return c * 9.0 / (16.0 * std::sqrt(3.0));
  }
  return 0.0;
}

LossModel::LossModel(LossKind kind, int output_dim, double l2_ridge,
                     DriftVariant drift)
    : kind_(kind), output_dim_(output_dim), l2_ridge_(l2_ridge), drift_(drift) {
  if (!(l2_ridge >= 0.0) || !std::isfinite(l2_ridge)) {
    throw InvalidArgument("l2_ridge must be a nonnegative finite number");
  }
}

LossModel LossModel::mse(double l2_ridge) {
  return LossModel(LossKind::MSE, 1, l2_ridge);
}

LossModel LossModel::bce(double l2_ridge) {
  return LossModel(LossKind::BCE, 1, l2_ridge);
}

LossModel LossModel::cce(int classes, double l2_ridge) {
  if (classes < 2) throw InvalidArgument("cce requires at least 2 classes");
  return LossModel(LossKind::CCE, classes, l2_ridge);
}

LossModel LossModel::charbonnier(double l2_ridge) {
  return LossModel(LossKind::Charbonnier, 1, l2_ridge,
                   DriftVariant{DriftFamily::Charbonnier, 1.0, 3});
}

LossModel LossModel::drift(const DriftVariant& variant, double l2_ridge) {
  variant.validate();
  return LossModel(LossKind::Drift, 1, l2_ridge, variant);
}

LossModel LossModel::from_name(const std::string& name, int classes,
                               double l2_ridge, double drift_scale,
                               int drift_power) {
  if (name == "mse") return mse(l2_ridge);
  if (name == "bce") return bce(l2_ridge);
  if (name == "cce") return cce(classes, l2_ridge);
  if (name == "charbonnier") return charbonnier(l2_ridge);
  DriftVariant variant;
  variant.scale = drift_scale;
  variant.power = drift_power;
  if (name == "logbarrier") {
    variant.family = DriftFamily::LogBarrier;
  } else if (name == "power") {
    variant.family = DriftFamily::PowerFamily;
  } else if (name == "arctan") {
    variant.family = DriftFamily::ArcTan;
  } else if (name == "drift-charbonnier") {
    variant.family = DriftFamily::Charbonnier;
  } else {
    throw InvalidArgument("unknown loss '" + name + "'");
  }
  return drift(variant, l2_ridge);
}

std::string LossModel::name() const {
  switch (kind_) {
    case LossKind::MSE:
      return "mse";
    case LossKind::BCE:
      return "bce";
    case LossKind::CCE:
      return "cce";
    case LossKind::Charbonnier:
      return "charbonnier";
    case LossKind::Drift:
      switch (drift_.family) {
        case DriftFamily::LogBarrier:
          return "logbarrier";
        case DriftFamily::Charbonnier:
          return "drift-charbonnier";
        case DriftFamily::PowerFamily:
          return "power";
        case DriftFamily::ArcTan:
          return "arctan";
      }
  }
  return "unknown";
}

RegularityConstants LossModel::regularity() const {
  RegularityConstants out;
  const double r = l2_ridge_;
  out.strong_convexity = r;
  switch (kind_) {
    case LossKind::MSE:
      out.lipschitz_hessian = 0.0;
      out.smoothness = 1.0 + r;
      out.strong_convexity = 1.0 + r;
      break;
    case LossKind::BCE:
      // |sigma''| = s(1-s)|1-2s| peaks at s = (3 +- sqrt 3)/6 with value
      // 1/(6 sqrt 3); M is half of that.
      out.lipschitz_hessian = 1.0 / (12.0 * std::sqrt(3.0));
      out.smoothness = 0.25 + r;
      out.dominance = 1.0;
      break;
    case LossKind::CCE:
      // Third derivative of log-sum-exp along a unit v is E_p[(v - E_p v)^3],
      // bounded by range(v) * Var_p(v) <= range^3 / 4 <= 2 sqrt 2 / 4.
      // Valid for every K; tight only up to a constant.
      out.lipschitz_hessian = 1.0 / (2.0 * std::sqrt(2.0));
      out.smoothness = 0.5 + r;
      out.dominance = 1.0;
      break;
    case LossKind::Charbonnier:
    case LossKind::Drift: {
      out.lipschitz_hessian = drift_lipschitz_constant(drift_);
      // sup L'' is attained at the origin.
      out.smoothness = drift_loss(drift_, 0.0).second + r;
      break;
    }
  }
  return out;
}

void LossModel::validate_target(std::span<const double> target) const {
  if (target.size() != static_cast<std::size_t>(output_dim_)) {
    throw InvalidArgument("target has length " + std::to_string(target.size()) +
                          ", expected " + std::to_string(output_dim_));
  }
  for (double t : target) {
    if (!std::isfinite(t)) throw InvalidArgument("target is not finite");
  }
  if (kind_ == LossKind::BCE && target[0] != 0.0 && target[0] != 1.0) {
    throw InvalidArgument("bce target must be 0 or 1");
  }
  if (kind_ == LossKind::CCE) {
    int ones = 0;
    for (double t : target) {
      if (t == 1.0) {
        ++ones;
      } else if (t != 0.0) {
        throw InvalidArgument("cce target must be one-hot");
      }
    }
    if (ones != 1) throw InvalidArgument("cce target must be one-hot");
  }
}

double LossModel::evaluate(std::span<const double> prediction,
                           std::span<const double> target,
                           std::span<double> gradient,
                           std::span<double> hessian) const {
  const int k = output_dim_;
  double value = 0.0;
  switch (kind_) {
    case LossKind::MSE: {
      const double residual = prediction[0] - target[0];
      value = 0.5 * residual * residual;
      gradient[0] = residual;
      hessian[0] = 1.0;
      break;
    }
    case LossKind::BCE: {
      const double u = prediction[0];
      const double p = sigmoid(u);
      // softplus(u) - y u, without cancellation for large |u|
      value = (1.0 - target[0]) * softplus(u) + target[0] * softplus(-u);
      gradient[0] = target[0] == 1.0 ? -sigmoid(-u) : p - target[0];
      // sigma(u) sigma(-u), written so it does not cancel to 0 for large |u|
      const double e = std::exp(-std::abs(u));
      hessian[0] = e / ((1.0 + e) * (1.0 + e));
      break;
    }
    case LossKind::CCE: {
      // 1 - p_j is summed from the other classes so that it keeps full
      // precision when one class dominates.
      int arg_top = 0;
      for (int j = 1; j < k; ++j) {
        if (prediction[j] > prediction[arg_top]) arg_top = j;
      }
      const double top = prediction[arg_top];
      for (int j = 0; j < k; ++j) gradient[j] = std::exp(prediction[j] - top);
      double rest = 0.0;
      for (int j = 0; j < k; ++j) {
        if (j != arg_top) rest += gradient[j];
      }
      const double total = 1.0 + rest;
      const double log_rest = std::log1p(rest);
      auto complement = [&](int i) {
        double others = 0.0;
        for (int j = 0; j < k; ++j) {
          if (j != i) others += gradient[j];
        }
        return others / total;
      };
      int hot = -1;
      for (int i = 0; i < k; ++i) {
        if (target[i] != 0.0) value += target[i] * ((top - prediction[i]) + log_rest);
        if (target[i] == 1.0) hot = i;
        const double p = gradient[i] / total;
        for (int j = 0; j < k; ++j) {
          hessian[static_cast<std::size_t>(i) * k + j] =
              i == j ? p * complement(i) : -p * (gradient[j] / total);
        }
      }
      const double hot_gradient = hot >= 0 ? -complement(hot) : 0.0;
      for (int j = 0; j < k; ++j) gradient[j] = gradient[j] / total - target[j];
      if (hot >= 0) gradient[hot] = hot_gradient;
      break;
    }
    case LossKind::Charbonnier:
    case LossKind::Drift: {
      const ScalarDerivatives d = drift_loss(drift_, prediction[0] - target[0]);
      value = d.value;
      gradient[0] = d.first;
      hessian[0] = d.second;
      break;
    }
  }
  if (l2_ridge_ > 0.0) {
    for (int j = 0; j < k; ++j) {
      value += 0.5 * l2_ridge_ * prediction[j] * prediction[j];
      gradient[j] += l2_ridge_ * prediction[j];
      hessian[static_cast<std::size_t>(j) * k + j] += l2_ridge_;
    }
  }
  return value;
}

double LossModel::value(std::span<const double> prediction,
                        std::span<const double> target) const {
  double grad[16];
  std::vector<double> scratch;
  std::span<double> g(grad, static_cast<std::size_t>(output_dim_));
  if (output_dim_ > 16) {
    scratch.resize(output_dim_);
    g = scratch;
  }
  std::vector<double> hess(static_cast<std::size_t>(output_dim_) * output_dim_);
  return evaluate(prediction, target, g, hess);
}

LossEvaluation eval(const LossModel& loss, std::span<const double> prediction,
                    std::span<const double> target) {
  const auto k = static_cast<std::size_t>(loss.output_dim());
  if (prediction.size() != k) {
    throw InvalidArgument("prediction has length " +
                          std::to_string(prediction.size()) + ", expected " +
                          std::to_string(k));
  }
  for (double u : prediction) {
    if (!std::isfinite(u)) throw InvalidArgument("prediction is not finite");
  }
  loss.validate_target(target);
  LossEvaluation out;
  out.gradient.resize(k);
  out.hessian.resize(k * k);
  out.value = loss.evaluate(prediction, target, out.gradient, out.hessian);
  return out;
}

RegularityConstants regularity_constants(const LossModel& loss) {
  return loss.regularity();
}

double boosting_space_constant(const LossModel& loss, int n_samples) {
  if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  return loss.regularity().lipschitz_hessian *
         std::sqrt(static_cast<double>(n_samples));
}

}  // namespace grnboost
