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

// Depth-wise greedy regression trees fitted to a second-order model of the
// loss. A leaf j holding samples I_j gets
//     w_j = -(H_j + |I_j| lambda I)^{-1} G_j,
// and a split is scored by the change in G^T (H + |I| lambda I)^{-1} G.

#pragma once

#include <span>
#include <vector>

#include "grnboost/hilbert.hpp"
#include "grnboost/linalg.hpp"
#include "grnboost/matrix.hpp"

namespace grnboost {

enum class LeafRegularization {
  PerLeafCount,  // |I_j| * lambda
  FixedScalar,   // lambda, the XGBoost convention
};

struct TreeParams {
  double lambda = 0.0;
  int max_depth = 4;
  int min_samples_leaf = 1;
  double gain_epsilon = 1e-12;
  LeafRegularization regularization = LeafRegularization::PerLeafCount;
  /// Drop off-diagonal Hessian entries (K > 1 only).
  bool diagonal_hessian = false;
  /// Gauge for leaf and split solves; ZeroSum for softmax Hessians at
  /// lambda = 0.
  linalg::Gauge gauge = linalg::Gauge::None;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int depth = 0;
  int n_samples = 0;  // training samples routed here
  double gain = 0.0;  // internal nodes only
  std::vector<double> weight;  // leaves only, length K

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::vector<double> left_gradient;
  std::vector<double> left_hessian;
  int left_count = 0;
  std::vector<double> right_gradient;
  std::vector<double> right_hessian;
  int right_count = 0;
};

/// Axis-aligned tree; samples with x[feature] <= threshold go left.
class Tree {
 public:
  Tree() = default;
  Tree(int output_dim, int n_features, int max_depth,
       std::vector<TreeNode> nodes);

  /// Single leaf predicting `weight` everywhere.
  static Tree constant(int n_features, std::vector<double> weight);

  int output_dim() const { return output_dim_; }
  int n_features() const { return n_features_; }
  int max_depth() const { return max_depth_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  int leaf_count() const;
  int depth() const;

  /// Index of the leaf node `x` routes to.
  int leaf_index(std::span<const double> x) const;
  std::span<const double> predict_row(std::span<const double> x) const;

  /// Throws InvalidArgument when the feature count differs from training.
  PredictionField predict(const FeatureMatrix& features) const;

  Tree scaled(double alpha) const;

  bool operator==(const Tree&) const = default;

 private:
  int output_dim_ = 1;
  int n_features_ = 0;
  int max_depth_ = 0;
  std::vector<TreeNode> nodes_;
};

/// Fits one tree to per-sample gradients and Hessian blocks (the block
/// shift, if any, is treated as part of every h_(i)). Split search runs in
/// parallel over features and is independent of `threads`.
/// Throws SingularSystem when a leaf system cannot be solved.
Tree fit_tree(const FeatureMatrix& features, const PredictionField& gradients,
              const BlockHessian& hessians, const TreeParams& params,
              int threads = 1);

Tree scale(const Tree& tree, double alpha);

}  // namespace grnboost
