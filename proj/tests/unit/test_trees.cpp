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

#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "grnboost/hilbert.hpp"
#include "grnboost/oracles.hpp"
#include "grnboost/trees.hpp"

using namespace grnboost;
using grnboost::testing::random_features;
using grnboost::testing::random_field;
using grnboost::testing::random_hessian;

namespace {

BlockHessian unit_hessian(int n) {
  BlockHessian h(n, 1);
  for (int i = 0; i < n; ++i) h.block(i)[0] = 1.0;
  return h;
}

Tree stump() {
  TreeNode root;
  root.feature = 0;
  root.threshold = 0.0;
  root.left = 1;
  root.right = 2;
  TreeNode left;
  left.depth = 1;
  left.weight = {-1.0};
  TreeNode right = left;
  right.weight = {1.0};
  return Tree(1, 3, 1, {root, left, right});
}

// Samples routed to each leaf node, by leaf index.
std::map<int, std::vector<int>> leaf_members(const Tree& tree, const FeatureMatrix& x) {
  std::map<int, std::vector<int>> out;
  for (int i = 0; i < x.rows(); ++i) out[tree.leaf_index(x.row(i))].push_back(i);
  return out;
}

}  // namespace

TEST_CASE("single leaf examples") {
  const FeatureMatrix x(2, 1, std::vector{0.0, 1.0});
  const PredictionField g(2, 1, std::vector{1.0, 2.0});
  TreeParams params;
  params.max_depth = 0;
  const Tree plain = fit_tree(x, g, unit_hessian(2), params);
  REQUIRE(plain.leaf_count() == 1);
  CHECK(plain.nodes()[0].weight[0] == doctest::Approx(-1.5));

  params.lambda = 1.0;
  const Tree ridge = fit_tree(x, g, unit_hessian(2), params);
  CHECK(ridge.nodes()[0].weight[0] == doctest::Approx(-0.75));

  params.regularization = LeafRegularization::FixedScalar;
  const Tree fixed = fit_tree(x, g, unit_hessian(2), params);
  CHECK(fixed.nodes()[0].weight[0] == doctest::Approx(-1.0));

  const std::vector<int> members{0, 1};
  const std::vector<double> hessians{1.0, 1.0};
  CHECK(numeric_leaf_minimizer(g.values(), hessians, 1, 1.0, members)[0] ==
        doctest::Approx(-0.75));
}

TEST_CASE("zero gradients give a single zero leaf") {
  Rng rng(31);
  const FeatureMatrix x = random_features(rng, 50, 4);
  const Tree tree = fit_tree(x, PredictionField(50, 1), unit_hessian(50), TreeParams{});
  CHECK(tree.leaf_count() == 1);
  CHECK(tree.nodes()[0].weight[0] == 0.0);
}

TEST_CASE("a step in the gradient is split at the midpoint") {
  const FeatureMatrix x(4, 2, std::vector{0.0, 5.0, 1.0, 5.0, 2.0, 5.0, 3.0, 5.0});
  const PredictionField g(4, 1, std::vector{1.0, 1.0, -1.0, -1.0});
  TreeParams params;
  params.max_depth = 3;
  const Tree tree = fit_tree(x, g, unit_hessian(4), params);
  REQUIRE(tree.leaf_count() == 2);
  const TreeNode& root = tree.nodes()[0];
  CHECK(root.feature == 0);
  CHECK(root.threshold == 1.5);
  // score_L + score_R - score_P = 1 + 1 - 0 for G = +-2, H = 2.
  CHECK(root.gain == doctest::Approx(0.5 * (2.0 + 2.0 - 0.0)));
  CHECK(tree.predict_row(std::vector{1.5, 0.0})[0] == -1.0);
  CHECK(tree.predict_row(std::vector{1.6, 0.0})[0] == 1.0);
}

TEST_CASE("ties prefer the lowest feature") {
  // Features 0 and 1 are identical, so every split ties.
  const FeatureMatrix x(4, 2, std::vector{0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0});
  const PredictionField g(4, 1, std::vector{1.0, 1.0, -1.0, -1.0});
  const Tree tree = fit_tree(x, g, unit_hessian(4), TreeParams{});
  CHECK(tree.nodes()[0].feature == 0);
}

TEST_CASE("singular leaf without regularization throws") {
  const FeatureMatrix x(2, 1, std::vector{0.0, 1.0});
  const PredictionField g(2, 1, std::vector{1.0, 2.0});
  CHECK_THROWS_AS(fit_tree(x, g, BlockHessian(2, 1), TreeParams{}), SingularSystem);
  TreeParams ridge;
  ridge.lambda = 1.0;
  CHECK_NOTHROW(fit_tree(x, g, BlockHessian(2, 1), ridge));
}

TEST_CASE("fit_tree rejects bad inputs") {
  const FeatureMatrix x(2, 1, std::vector{0.0, 1.0});
  const PredictionField g(2, 1, std::vector{1.0, 2.0});
  TreeParams params;
  params.lambda = -1.0;
  CHECK_THROWS_AS(fit_tree(x, g, unit_hessian(2), params), InvalidArgument);
  CHECK_THROWS_AS(fit_tree(x, PredictionField(3, 1), unit_hessian(3), TreeParams{}),
                  InvalidArgument);
  CHECK_THROWS_AS(fit_tree(FeatureMatrix(0, 1), PredictionField(0, 1), BlockHessian(0, 1),
                           TreeParams{}),
                  InvalidArgument);
}

TEST_CASE("prediction examples") {
  const Tree s = stump();
  CHECK(s.predict_row(std::vector{-5.0, 0.0, 0.0})[0] == -1.0);
  CHECK(s.predict_row(std::vector{0.0, 0.0, 0.0})[0] == -1.0);
  CHECK(s.predict_row(std::vector{0.1, 0.0, 0.0})[0] == 1.0);
  CHECK_THROWS_AS(s.predict(FeatureMatrix(2, 2)), InvalidArgument);

  const Tree constant = Tree::constant(3, {4.0, -1.0});
  const PredictionField p = constant.predict(FeatureMatrix(5, 3));
  for (int i = 0; i < 5; ++i) {
    CHECK(p(i, 0) == 4.0);
    CHECK(p(i, 1) == -1.0);
  }
}

TEST_CASE("scaling examples") {
  const Tree s = stump();
  CHECK(scale(s, 1.0) == s);
  const Tree zero = scale(s, 0.0);
  for (const TreeNode& n : zero.nodes()) {
    if (n.is_leaf()) CHECK(n.weight[0] == 0.0);
  }
  const Tree three = Tree::constant(1, {3.0});
  CHECK(scale(three, -2.0).nodes()[0].weight[0] == -6.0);
}

TEST_CASE("property: partition, depth bound and in-sample consistency") {
  Rng rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + static_cast<int>(rng.below(150));
    const int k = trial % 3 == 0 ? 3 : 1;
    const FeatureMatrix x = random_features(rng, n, 4);
    const PredictionField g = random_field(rng, n, k);
    const BlockHessian h = random_hessian(rng, n, k);
    TreeParams params;
    params.max_depth = static_cast<int>(rng.below(6));
    params.min_samples_leaf = 1 + static_cast<int>(rng.below(5));
    params.lambda = rng.uniform(0.0, 2.0);
    const Tree tree = fit_tree(x, g, h, params);

    CHECK(tree.depth() <= params.max_depth);
    int routed = 0;
    for (const TreeNode& node : tree.nodes()) {
      if (node.is_leaf()) {
        routed += node.n_samples;
        CHECK(node.n_samples >= params.min_samples_leaf);
        for (double w : node.weight) CHECK(std::isfinite(w));
      } else {
        CHECK(node.gain >= -1e-12);
        CHECK(tree.nodes()[node.left].n_samples + tree.nodes()[node.right].n_samples ==
              node.n_samples);
      }
    }
    CHECK(routed == n);

    // Each training sample predicts exactly its leaf's weight, and leaves
    // match the independent minimizer on their own members.
    const PredictionField pred = tree.predict(x);
    for (const auto& [leaf, members] : leaf_members(tree, x)) {
      const TreeNode& node = tree.nodes()[leaf];
      CHECK(static_cast<int>(members.size()) == node.n_samples);
      std::vector<double> blocks;
      for (int i = 0; i < n; ++i) {
        const auto b = h.block(i);
        blocks.insert(blocks.end(), b.begin(), b.end());
      }
      const std::vector<double> oracle =
          numeric_leaf_minimizer(g.values(), blocks, k, params.lambda, members);
      for (int j = 0; j < k; ++j) {
        CHECK(std::abs(oracle[j] - node.weight[j]) <= 1e-8);
        for (int i : members) CHECK(pred(i, j) == node.weight[j]);
      }
    }
  }
}

TEST_CASE("property: scalability identity for the fitted tree") {
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 20 + static_cast<int>(rng.below(200));
    const int k = trial % 2 ? 2 : 1;
    const FeatureMatrix x = random_features(rng, n, 3);
    const PredictionField g = random_field(rng, n, k);
    BlockHessian h = random_hessian(rng, n, k);
    TreeParams params;
    params.lambda = trial % 3 == 0 ? 0.0 : rng.uniform(0.1, 3.0);
    const Tree tree = fit_tree(x, g, h, params);
    const PredictionField f = tree.predict(x);
    // Per-leaf-count lambda in the leaf solve is a plain lambda shift in the
    // boosting space.
    const double k_norm = hessian_inner(f, f, h, params.lambda);
    CHECK(std::abs(hilbert_inner(g, f) + k_norm) <= 1e-8 * std::max(k_norm, 1e-300));
  }
}

TEST_CASE("property: fitting is independent of the thread count") {
  Rng rng(34);
  const FeatureMatrix x = random_features(rng, 800, 6);
  const PredictionField g = random_field(rng, 800, 3);
  const BlockHessian h = random_hessian(rng, 800, 3);
  TreeParams params;
  params.max_depth = 5;
  params.lambda = 0.5;
  const Tree serial = fit_tree(x, g, h, params, 1);
  for (int threads : {2, 4, 8}) CHECK(fit_tree(x, g, h, params, threads) == serial);
}

TEST_CASE("diagonal Hessian flag drops cross terms") {
  Rng rng(35);
  const FeatureMatrix x = random_features(rng, 30, 2);
  const PredictionField g = random_field(rng, 30, 2);
  const BlockHessian h = random_hessian(rng, 30, 2);
  TreeParams params;
  params.max_depth = 0;
  params.diagonal_hessian = true;
  const Tree tree = fit_tree(x, g, h, params);
  for (int j = 0; j < 2; ++j) {
    double gs = 0.0, hs = 0.0;
    for (int i = 0; i < 30; ++i) {
      gs += g(i, j);
      hs += h.block(i)[j * 2 + j];
    }
    CHECK(tree.nodes()[0].weight[j] == doctest::Approx(-gs / hs).epsilon(1e-12));
  }
}
