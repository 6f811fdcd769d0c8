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

#include "grnboost/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "grnboost/common.hpp"

namespace grnboost {

namespace {

struct Aggregate {
  std::vector<double> gradient;
  std::vector<double> hessian;
  int count = 0;

  explicit Aggregate(int k)
      : gradient(static_cast<std::size_t>(k), 0.0),
        hessian(static_cast<std::size_t>(k) * k, 0.0) {}
};

// Per-sample quantities after folding in the block shift and the diagonal
// option, laid out contiguously for the split scan.
struct Problem {
  const FeatureMatrix& features;
  int k;
  std::vector<double> grad;  // N x K
  std::vector<double> hess;  // N x K x K
  TreeParams params;
};

void add_sample(const Problem& p, int i, Aggregate& agg) {
  const std::size_t kk = static_cast<std::size_t>(p.k) * p.k;
  const double* g = p.grad.data() + static_cast<std::size_t>(i) * p.k;
  const double* h = p.hess.data() + static_cast<std::size_t>(i) * kk;
  for (int j = 0; j < p.k; ++j) agg.gradient[j] += g[j];
  for (std::size_t j = 0; j < kk; ++j) agg.hessian[j] += h[j];
  agg.count += 1;
}

Aggregate aggregate(const Problem& p, std::span<const int> members) {
  Aggregate agg(p.k);
  for (int i : members) add_sample(p, i, agg);
  return agg;
}

double leaf_shift(const TreeParams& params, int count) {
  return params.regularization == LeafRegularization::PerLeafCount
             ? params.lambda * count
             : params.lambda;
}

// G^T (H + shift I)^{-1} G, or empty when the system is singular.
std::optional<double> score(const Problem& p, std::span<const double> g,
                            std::span<const double> h, int count,
                            std::vector<double>& scratch) {
  const double shift = leaf_shift(p.params, count);
  if (p.k == 1) {
    const double denom = h[0] + shift;
    if (!(denom > 0.0) || !std::isfinite(denom)) return std::nullopt;
    return g[0] * g[0] / denom;
  }
  scratch.resize(static_cast<std::size_t>(p.k));
  if (!linalg::solve_psd(h, p.k, shift, g, scratch, p.params.gauge)) {
    return std::nullopt;
  }
  double total = 0.0;
  for (int j = 0; j < p.k; ++j) total += g[j] * scratch[j];
  return total;
}

double midpoint(double lo, double hi) {
  const double mid = 0.5 * lo + 0.5 * hi;
  return (mid >= lo && mid < hi) ? mid : lo;
}

std::optional<SplitCandidate> best_split_for_feature(
    const Problem& p, int feature, std::span<const int> members,
    const Aggregate& parent, double parent_score) {
  const int n = static_cast<int>(members.size());
  const int min_leaf = p.params.min_samples_leaf;
  std::vector<int> order(members.begin(), members.end());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p.features(a, feature) < p.features(b, feature);
  });

  Aggregate left(p.k);
  std::vector<double> right_g(parent.gradient.size());
  std::vector<double> right_h(parent.hessian.size());
  std::vector<double> scratch;
  std::optional<SplitCandidate> best;
  double best_gain = -std::numeric_limits<double>::infinity();

  for (int t = 0; t + 1 < n; ++t) {
    add_sample(p, order[t], left);
    const double here = p.features(order[t], feature);
    const double next = p.features(order[t + 1], feature);
    if (!(here < next)) continue;
    const int left_count = t + 1;
    const int right_count = n - left_count;
    if (left_count < min_leaf || right_count < min_leaf) continue;
    for (std::size_t j = 0; j < right_g.size(); ++j) {
      right_g[j] = parent.gradient[j] - left.gradient[j];
    }
    for (std::size_t j = 0; j < right_h.size(); ++j) {
      right_h[j] = parent.hessian[j] - left.hessian[j];
    }
    const auto left_score =
        score(p, left.gradient, left.hessian, left_count, scratch);
    if (!left_score) continue;
    const auto right_score = score(p, right_g, right_h, right_count, scratch);
    if (!right_score) continue;
    const double gain = 0.5 * (*left_score + *right_score - parent_score);
    if (gain > best_gain) {
      best_gain = gain;
      SplitCandidate c;
      c.feature = feature;
      c.threshold = midpoint(here, next);
      c.gain = gain;
      c.left_gradient = left.gradient;
      c.left_hessian = left.hessian;
      c.left_count = left_count;
      c.right_gradient = right_g;
      c.right_hessian = right_h;
      c.right_count = right_count;
      best = std::move(c);
    }
  }
  return best;
}

std::vector<double> leaf_weight(const Problem& p, const Aggregate& agg) {
  std::vector<double> rhs(agg.gradient.size());
  for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = -agg.gradient[j];
  std::vector<double> w(rhs.size());
  if (!linalg::solve_psd(agg.hessian, p.k, leaf_shift(p.params, agg.count),
                         rhs, w, p.params.gauge)) {
    throw SingularSystem("leaf solve singular: Hessian aggregate over " +
                         std::to_string(agg.count) +
                         " samples is not invertible");
  }
  return w;
}

void validate(const FeatureMatrix& features, const PredictionField& gradients,
              const BlockHessian& hessians, const TreeParams& params) {
  if (features.rows() < 1) throw InvalidArgument("fit_tree: empty dataset");
  if (gradients.n_samples() != features.rows() ||
      hessians.n_samples() != features.rows() ||
      hessians.output_dim() != gradients.output_dim()) {
    throw InvalidArgument("fit_tree: features, gradients and Hessians disagree");
  }
  if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda)) {
    throw InvalidArgument("fit_tree: lambda must be finite and >= 0");
  }
  if (params.max_depth < 0) throw InvalidArgument("fit_tree: max_depth < 0");
  if (params.min_samples_leaf < 1) {
    throw InvalidArgument("fit_tree: min_samples_leaf < 1");
  }
}

}  // namespace

Tree::Tree(int output_dim, int n_features, int max_depth,
           std::vector<TreeNode> nodes)
    : output_dim_(output_dim),
      n_features_(n_features),
      max_depth_(max_depth),
      nodes_(std::move(nodes)) {
  if (output_dim < 1 || n_features < 0 || nodes_.empty()) {
    throw InvalidArgument("Tree: invalid shape");
  }
  const int count = static_cast<int>(nodes_.size());
  for (const TreeNode& node : nodes_) {
    if (node.is_leaf()) {
      if (static_cast<int>(node.weight.size()) != output_dim) {
        throw InvalidArgument("Tree: leaf weight has wrong length");
      }
    } else if (node.feature >= n_features || node.left <= 0 ||
               node.right <= 0 || node.left >= count || node.right >= count) {
      throw InvalidArgument("Tree: malformed internal node");
    }
  }
}

Tree Tree::constant(int n_features, std::vector<double> weight) {
  TreeNode leaf;
  const int k = static_cast<int>(weight.size());
  leaf.weight = std::move(weight);
  return Tree(k, n_features, 0, {leaf});
}

int Tree::leaf_count() const {
  return static_cast<int>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  int d = 0;
  for (const TreeNode& n : nodes_) d = std::max(d, n.depth);
  return d;
}

int Tree::leaf_index(std::span<const double> x) const {
  int at = 0;
  while (!nodes_[at].is_leaf()) {
    const TreeNode& n = nodes_[at];
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return at;
}

std::span<const double> Tree::predict_row(std::span<const double> x) const {
  return nodes_[leaf_index(x)].weight;
}

PredictionField Tree::predict(const FeatureMatrix& features) const {
  if (features.cols() != n_features_) {
    throw InvalidArgument("predict: tree expects " +
                          std::to_string(n_features_) + " features, got " +
                          std::to_string(features.cols()));
  }
  PredictionField out(features.rows(), output_dim_);
  for (int i = 0; i < features.rows(); ++i) {
    const auto w = predict_row(features.row(i));
    std::copy(w.begin(), w.end(), out.row(i).begin());
  }
  return out;
}

Tree Tree::scaled(double alpha) const {
  Tree out = *this;
  for (TreeNode& n : out.nodes_) {
    for (double& w : n.weight) w *= alpha;
  }
  return out;
}

Tree scale(const Tree& tree, double alpha) { return tree.scaled(alpha); }

Tree fit_tree(const FeatureMatrix& features, const PredictionField& gradients,
              const BlockHessian& hessians, const TreeParams& params,
              int threads) {
  validate(features, gradients, hessians, params);
  const int n = features.rows();
  const int k = gradients.output_dim();
  const int q = features.cols();
  const std::size_t kk = static_cast<std::size_t>(k) * k;

  Problem p{features, k,
            std::vector<double>(gradients.values().begin(),
                                gradients.values().end()),
            std::vector<double>(static_cast<std::size_t>(n) * kk), params};
  for (int i = 0; i < n; ++i) {
    const auto block = hessians.block(i);
    double* dst = p.hess.data() + static_cast<std::size_t>(i) * kk;
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const std::size_t at = static_cast<std::size_t>(a) * k + b;
        if (a == b) {
          dst[at] = block[at] + hessians.shift();
        } else {
          dst[at] = params.diagonal_hessian ? 0.0 : block[at];
        }
      }
    }
  }

  struct Pending {
    int node;
    std::vector<int> members;
  };
  std::vector<TreeNode> nodes(1);
  std::vector<Pending> frontier;
  frontier.push_back({0, std::vector<int>(static_cast<std::size_t>(n))});
  for (int i = 0; i < n; ++i) frontier[0].members[i] = i;

  std::vector<double> scratch;
  while (!frontier.empty()) {
    std::vector<Pending> next_level;
    for (Pending& work : frontier) {
      const Aggregate agg = aggregate(p, work.members);
      TreeNode& node = nodes[work.node];
      node.n_samples = agg.count;

      std::optional<SplitCandidate> chosen;
      const bool can_split = node.depth < params.max_depth &&
                             agg.count >= 2 * params.min_samples_leaf;
      const auto parent_score =
          can_split ? score(p, agg.gradient, agg.hessian, agg.count, scratch)
                    : std::nullopt;
      if (parent_score) {
        std::vector<std::optional<SplitCandidate>> per_feature(
            static_cast<std::size_t>(q));
        parallel_for(static_cast<std::size_t>(q), threads,
                     [&](std::size_t begin, std::size_t end) {
                       for (std::size_t f = begin; f < end; ++f) {
                         per_feature[f] = best_split_for_feature(
                             p, static_cast<int>(f), work.members, agg,
                             *parent_score);
                       }
                     });
        // Ascending feature order with a strict comparison keeps the lowest
        // feature (and, within it, the lowest threshold) among equal gains.
        for (auto& c : per_feature) {
          if (c && c->gain > params.gain_epsilon &&
              (!chosen || c->gain > chosen->gain)) {
            chosen = std::move(c);
          }
        }
      }

      if (!chosen) {
        node.weight = leaf_weight(p, agg);
        continue;
      }

      node.feature = chosen->feature;
      node.threshold = chosen->threshold;
      node.gain = chosen->gain;
      const int depth = node.depth;
      const int left_id = static_cast<int>(nodes.size());
      node.left = left_id;
      node.right = left_id + 1;
      // `node` may dangle after this resize.
      nodes.resize(nodes.size() + 2);
      nodes[left_id].depth = depth + 1;
      nodes[left_id + 1].depth = depth + 1;

      Pending left{left_id, {}};
      Pending right{left_id + 1, {}};
      left.members.reserve(static_cast<std::size_t>(chosen->left_count));
      right.members.reserve(static_cast<std::size_t>(chosen->right_count));
      for (int i : work.members) {
        if (features(i, chosen->feature) <= chosen->threshold) {
          left.members.push_back(i);
        } else {
          right.members.push_back(i);
        }
      }
      next_level.push_back(std::move(left));
      next_level.push_back(std::move(right));
    }
    frontier = std::move(next_level);
  }
  return Tree(k, q, params.max_depth, std::move(nodes));
}

}  // namespace grnboost
