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

// Hand-rolled random generators for property tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "grnboost/common.hpp"
#include "grnboost/hilbert.hpp"
#include "grnboost/losses.hpp"
#include "grnboost/matrix.hpp"

namespace grnboost::testing {

inline std::vector<double> random_vector(Rng& rng, int n, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline PredictionField random_field(Rng& rng, int n, int k, double lo = -1.0,
                                    double hi = 1.0) {
  return PredictionField(n, k, random_vector(rng, n * k, lo, hi));
}

/// B B^T + floor I with B uniform in [-1, 1]; row-major K x K.
inline std::vector<double> random_psd_block(Rng& rng, int k, double floor = 0.1) {
  const std::vector<double> b = random_vector(rng, k * k);
  std::vector<double> a(static_cast<std::size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += b[i * k + t] * b[j * k + t];
      a[i * k + j] = s + (i == j ? floor : 0.0);
    }
  }
  return a;
}

inline BlockHessian random_hessian(Rng& rng, int n, int k, double floor = 0.1) {
  BlockHessian h(n, k);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> block = random_psd_block(rng, k, floor);
    std::copy(block.begin(), block.end(), h.block(i).begin());
  }
  return h;
}

inline FeatureMatrix random_features(Rng& rng, int n, int q) {
  return FeatureMatrix(n, q, random_vector(rng, n * q, -3.0, 3.0));
}

/// A valid target encoding for `loss`.
inline std::vector<double> random_target(Rng& rng, const LossModel& loss) {
  std::vector<double> y(static_cast<std::size_t>(loss.output_dim()), 0.0);
  switch (loss.kind()) {
    case LossKind::BCE:
      y[0] = static_cast<double>(rng.below(2));
      break;
    case LossKind::CCE:
      y[rng.below(static_cast<std::uint64_t>(loss.output_dim()))] = 1.0;
      break;
    default:
      y[0] = rng.uniform(-10.0, 10.0);
  }
  return y;
}

inline std::vector<LossModel> all_losses() {
  return {LossModel::mse(),
          LossModel::bce(),
          LossModel::cce(2),
          LossModel::cce(3),
          LossModel::cce(5),
          LossModel::charbonnier(),
          LossModel::bce(0.1),
          LossModel::cce(3, 0.5),
          LossModel::drift({DriftFamily::LogBarrier, 1.0, 3}),
          LossModel::drift({DriftFamily::PowerFamily, 2.0, 5}),
          LossModel::drift({DriftFamily::ArcTan, 0.5, 3})};
}

inline std::vector<DriftVariant> all_drift_variants() {
  return {{DriftFamily::LogBarrier, 1.0, 3},  {DriftFamily::Charbonnier, 1.0, 3},
          {DriftFamily::Charbonnier, 3.0, 3}, {DriftFamily::PowerFamily, 1.0, 3},
          {DriftFamily::PowerFamily, 1.0, 8}, {DriftFamily::ArcTan, 1.0, 3},
          {DriftFamily::ArcTan, 0.25, 3}};
}

}  // namespace grnboost::testing
