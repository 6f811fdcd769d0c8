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

#pragma once

#include <span>

namespace grnboost::linalg {

/// How to treat the constant direction of a K x K block.
///
/// ZeroSum restricts the solve to V = {v : sum(v) = 0} by writing
/// v = z - mean(z) 1 with z_K = 0 and solving the (K-1)-dimensional reduced
/// system. This is the gauge fix for softmax Hessians, whose null space is
/// span{1}. The right-hand side is assumed to lie in V.
enum class Gauge { None, ZeroSum };

/// Blocks whose smallest/largest pivot ratio falls below this are treated as
/// singular.
inline constexpr double kSingularRatio = 1e-12;

enum class SolveStatus { Solved, Jittered, Singular };

/// Solves (a + shift I) x = rhs for a symmetric PSD row-major k x k block.
/// Returns false (leaving x unspecified) when the system is singular.
bool solve_psd(std::span<const double> a, int k, double shift,
               std::span<const double> rhs, std::span<double> x,
               Gauge gauge = Gauge::None);

/// solve_psd, retrying once with shift + 1e-12 * trace(a) / k when the
/// first attempt is singular.
SolveStatus solve_psd_with_jitter(std::span<const double> a, int k,
                                  double shift, std::span<const double> rhs,
                                  std::span<double> x,
                                  Gauge gauge = Gauge::None);

/// u^T (a + shift I) v for a row-major k x k block.
double quadratic_form(std::span<const double> a, int k, double shift,
                      std::span<const double> u, std::span<const double> v);

/// Smallest eigenvalue of a symmetric row-major k x k block.
double min_eigenvalue(std::span<const double> a, int k);

}  // namespace grnboost::linalg
