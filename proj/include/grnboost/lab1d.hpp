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

// Scalar Newton dynamics on the drift losses.

#pragma once

#include <string>
#include <vector>

#include "grnboost/losses.hpp"

namespace grnboost {

enum class LabScheme { Newton, DampedNewton, GRN };

LabScheme parse_lab_scheme(const std::string& name);
std::string lab_scheme_name(LabScheme scheme);

struct LabStep {
  int k = 0;
  double x = 0.0;
  double loss = 0.0;
  double lambda = 0.0;  // sqrt(M |L'(x)|) for GRN, 0 otherwise
};

struct LabResult {
  std::vector<LabStep> steps;  // includes k = 0
  bool diverged = false;
};

inline constexpr double kLabDivergence = 1e100;

/// Iterates
///   Newton:  x - d~(x)
///   damped:  x - eta d~(x)
///   GRN:     x - eta L'(x) / (L''(x) + sqrt(M |L'(x)|))
/// for n_steps steps, stopping early once |x| > 1e100 or x is not finite.
LabResult newton_1d_lab(const DriftVariant& variant, double x0, double eta,
                        LabScheme scheme, double M, int n_steps);

/// Damped Newton escape radius sqrt(max(0, 3/eta - 1)) for the Charbonnier
/// drift: beyond it every damped step at least doubles |x|.
double damped_escape_radius(double eta);

}  // namespace grnboost
