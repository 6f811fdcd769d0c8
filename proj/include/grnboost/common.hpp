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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace grnboost {

inline constexpr const char* kVersion = "1.0.0";

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape, range or encoding violations in caller-supplied arguments.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A linear system that must be solved is singular (e.g. an unregularized
/// leaf with a rank-deficient Hessian aggregate).
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable input data (CSV parse errors, missing values).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Sums a sequence with fixed-shape pairwise recursion. The result depends
/// only on the values and their order, never on how callers were scheduled.
double pairwise_sum(std::span<const double> values);

/// Runs body(begin, end) over [0, n) split into at most `threads` contiguous
/// chunks. Bodies must write disjoint outputs; results are then independent
/// of the thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Thread count from GRNBOOST_THREADS, falling back to 1.
int default_thread_count();

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Strict decimal parser: the whole string must be consumed.
double parse_double(const std::string& text);

/// Deterministic 64-bit generator (splitmix64). Used instead of <random>
/// distributions so that synthetic data is identical across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace grnboost
