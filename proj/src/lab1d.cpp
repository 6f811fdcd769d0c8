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

#include "grnboost/lab1d.hpp"

#include <algorithm>
#include <cmath>

#include "grnboost/common.hpp"

namespace grnboost {

LabScheme parse_lab_scheme(const std::string& name) {
  if (name == "newton") return LabScheme::Newton;
  if (name == "damped" || name == "damped-newton") return LabScheme::DampedNewton;
  if (name == "grn") return LabScheme::GRN;
  throw InvalidArgument("unknown lab scheme '" + name + "'");
}

std::string lab_scheme_name(LabScheme scheme) {
  switch (scheme) {
    case LabScheme::Newton:
      return "newton";
    case LabScheme::DampedNewton:
      return "damped";
    case LabScheme::GRN:
      return "grn";
  }
  return "unknown";
}

LabResult newton_1d_lab(const DriftVariant& variant, double x0, double eta,
                        LabScheme scheme, double M, int n_steps) {
  variant.validate();
  if (!std::isfinite(x0)) throw InvalidArgument("x0 must be finite");
  if (scheme != LabScheme::Newton && !(eta > 0.0 && eta <= 1.0)) {
    throw InvalidArgument("eta must lie in (0, 1]");
  }
  if (!(M >= 0.0) || !std::isfinite(M)) {
    throw InvalidArgument("M must be finite and >= 0");
  }
  if (n_steps < 0) throw InvalidArgument("steps must be >= 0");

  LabResult out;
  auto record = [&](int k, double x) {
    LabStep step{k, x, drift_loss(variant, x).value, 0.0};
    if (scheme == LabScheme::GRN) {
      step.lambda = std::sqrt(M * std::abs(drift_loss(variant, x).first));
    }
    out.steps.push_back(step);
  };

  double x = x0;
  record(0, x);
  for (int k = 1; k <= n_steps; ++k) {
    switch (scheme) {
      case LabScheme::Newton:
        x = -newton_drift_excess(variant, x);
        break;
      case LabScheme::DampedNewton:
        x = (1.0 - eta) * x - eta * newton_drift_excess(variant, x);
        break;
      case LabScheme::GRN: {
        const ScalarDerivatives d = drift_loss(variant, x);
        x -= eta * d.first / (d.second + std::sqrt(M * std::abs(d.first)));
        break;
      }
    }
    record(k, x);
    if (!std::isfinite(x) || std::abs(x) > kLabDivergence) {
      out.diverged = true;
      break;
    }
  }
  return out;
}

double damped_escape_radius(double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be > 0");
  return std::sqrt(std::max(0.0, 3.0 / eta - 1.0));
}

}  // namespace grnboost
