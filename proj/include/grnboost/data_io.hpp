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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grnboost/matrix.hpp"

namespace grnboost {

enum class Task { Regression, Binary, Multiclass };

/// Features plus one target per sample (a class index for multiclass).
struct Dataset {
  FeatureMatrix features;
  std::vector<double> targets;
  std::vector<std::string> feature_names;
  std::string target_name = "y";

  int n_samples() const { return features.rows(); }
  int n_features() const { return features.cols(); }

  bool operator==(const Dataset&) const = default;
};

/// Throws DataError unless every target is valid for `task`
/// (binary: {0, 1}; multiclass: integers in [0, classes)).
void check_targets(const Dataset& data, Task task, int classes = 0);

struct CsvOptions {
  bool has_header = true;
  /// Column name, or a zero-based index written as digits. Empty selects
  /// the last column.
  std::string target_column;
  Task task = Task::Regression;
  int classes = 0;  // multiclass only; 0 means "do not check the range"
};

Dataset load_csv(const std::string& path, const CsvOptions& options = {});
Dataset parse_csv(std::istream& in, const CsvOptions& options = {},
                  const std::string& source = "<stream>");

/// Writes features then the target as the last column, with a header and
/// 17 significant digits.
void write_csv(const Dataset& data, const std::string& path);
void write_csv(const Dataset& data, std::ostream& out);

enum class SynthKind {
  RegressionSmooth,
  BinaryBlobs,
  MulticlassBlobs,
  CharbonnierWide,
};

SynthKind parse_synth_kind(const std::string& name);
std::string synth_kind_name(SynthKind kind);

/// Deterministic synthetic data. `classes` is used by MulticlassBlobs only.
Dataset synthesize(SynthKind kind, int n, int q, std::uint64_t seed,
                   int classes = 3);

Dataset subset(const Dataset& data, std::span<const int> rows);

/// Seeded permutation split into (train, valid) with
/// |valid| = floor(N * valid_fraction).
std::pair<Dataset, Dataset> split(const Dataset& data, double valid_fraction,
                                  std::uint64_t seed);

/// FNV-1a over the shape, names and the bit patterns of every value.
std::uint64_t fingerprint(const Dataset& data);
std::string fingerprint_hex(const Dataset& data);

}  // namespace grnboost
