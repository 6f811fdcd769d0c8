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
#include <sstream>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "grnboost/boosting.hpp"
#include "grnboost/serialization.hpp"

using namespace grnboost;
using grnboost::testing::random_features;

namespace {

Dataset make_dataset(FeatureMatrix x, std::vector<double> y) {
  Dataset d;
  d.features = std::move(x);
  d.targets = std::move(y);
  for (int j = 0; j < d.n_features(); ++j) d.feature_names.push_back("x" + std::to_string(j));
  return d;
}

std::string metrics_text(const TrainResult& r) {
  std::ostringstream out;
  write_metrics_jsonl(r.records, out);
  return out.str();
}

BoostConfig quick_config(Scheme scheme, int rounds = 20) {
  BoostConfig c;
  c.scheme = scheme;
  c.n_rounds = rounds;
  c.max_depth = 3;
  return c;
}

}  // namespace

TEST_CASE("single Newton step on MSE") {
  const Dataset data = make_dataset(FeatureMatrix(2, 1, std::vector{0.0, 1.0}), {1.0, 3.0});
  BoostConfig c = quick_config(Scheme::Newton, 1);
  c.max_depth = 0;
  c.init = InitMode::Zero;
  const TrainResult r = train(data, LossModel::mse(), c);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].loss_before == doctest::Approx(2.5));
  CHECK(r.records[0].train_loss == doctest::Approx(0.5));
  CHECK(r.ensemble.trees[0].nodes()[0].weight[0] == doctest::Approx(2.0));
}

TEST_CASE("GRN with M = 0 reproduces Newton") {
  Rng rng(41);
  const Dataset data = synthesize(SynthKind::BinaryBlobs, 200, 4, 3);
  BoostConfig grn = quick_config(Scheme::GRN);
  grn.M = 0.0;
  grn.lambda_base = 0.5;
  BoostConfig newton = grn;
  newton.scheme = Scheme::Newton;
  const TrainResult a = train(data, LossModel::bce(), grn);
  const TrainResult b = train(data, LossModel::bce(), newton);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].lambda_k == 0.5);
    CHECK(a.records[i].train_loss == b.records[i].train_loss);
  }
  for (std::size_t t = 0; t < a.ensemble.trees.size(); ++t) {
    CHECK(a.ensemble.trees[t] == b.ensemble.trees[t]);
  }
}

TEST_CASE("stationary start yields zero trees") {
  Rng rng(42);
  const Dataset data = make_dataset(random_features(rng, 30, 3), std::vector<double>(30, 1.5));
  const TrainResult r = train(data, LossModel::mse(), quick_config(Scheme::GRN, 5));
  for (const IterationRecord& rec : r.records) CHECK(rec.train_loss == 0.0);
  for (const Tree& t : r.ensemble.trees) {
    CHECK(t.leaf_count() == 1);
    CHECK(t.nodes()[0].weight[0] == 0.0);
  }
}

TEST_CASE("ensemble prediction examples") {
  Ensemble e;
  e.loss = LossModel::mse();
  e.n_features = 1;
  e.initial_prediction = {0.25};
  const FeatureMatrix x(3, 1, std::vector{-1.0, 0.0, 2.0});
  const PredictionField empty = predict_ensemble(e, x);
  for (int i = 0; i < 3; ++i) CHECK(empty(i, 0) == 0.25);

  e.trees.push_back(Tree::constant(1, {2.0}));
  e.etas.push_back(0.5);
  CHECK(predict_ensemble(e, x)(1, 0) == 1.25);

  TreeNode root;
  root.feature = 0;
  root.left = 1;
  root.right = 2;
  TreeNode left;
  left.depth = 1;
  left.weight = {-1.0};
  TreeNode right = left;
  right.weight = {3.0};
  const Tree stump(1, 1, 1, {root, left, right});
  Ensemble copies = e;
  copies.trees.assign(4, stump);
  copies.etas.assign(4, 0.5);
  const PredictionField p = predict_ensemble(copies, x);
  CHECK(p(0, 0) == 0.25 + 4 * 0.5 * -1.0);
  CHECK(p(2, 0) == 0.25 + 4 * 0.5 * 3.0);
  CHECK_THROWS_AS(predict_ensemble(copies, FeatureMatrix(1, 2)), InvalidArgument);
}

TEST_CASE("initial prediction examples") {
  const Dataset reg = make_dataset(FeatureMatrix(2, 1), {1.0, 3.0});
  CHECK(initial_prediction(reg, LossModel::mse())[0] == 2.0);
  CHECK(initial_prediction(reg, LossModel::charbonnier())[0] == 2.0);
  CHECK(initial_prediction(reg, LossModel::mse(), InitMode::Zero)[0] == 0.0);

  const Dataset positive = make_dataset(FeatureMatrix(3, 1), {1.0, 1.0, 1.0});
  const double rate = 1.0 - 1e-6;
  CHECK(initial_prediction(positive, LossModel::bce())[0] ==
        doctest::Approx(std::log(rate / (1.0 - rate))));

  const Dataset classes = make_dataset(FeatureMatrix(4, 1), {0.0, 0.0, 1.0, 2.0});
  const std::vector<double> f0 = initial_prediction(classes, LossModel::cce(3));
  CHECK(f0[0] + f0[1] + f0[2] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f0[0] - f0[1] == doctest::Approx(std::log(2.0)));
  CHECK(f0[1] == doctest::Approx(f0[2]));
}

TEST_CASE("config validation") {
  BoostConfig c;
  c.eta = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.eta = 2.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.eta = 1.5;
  CHECK(c.validate().size() == 1);
  c.scheme = Scheme::Newton;
  CHECK(c.validate().empty());
  c = BoostConfig{};
  c.M = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = BoostConfig{};
  c.C = 0.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK(parse_scheme("first-order") == Scheme::FirstOrder);
  CHECK(scheme_name(parse_scheme("grn")) == "grn");
  CHECK_THROWS_AS(parse_scheme("adam"), InvalidArgument);
  CHECK_THROWS_AS(parse_diagnostics("loud"), InvalidArgument);
}

TEST_CASE("resolved M") {
  BoostConfig c;
  const LossModel bce = LossModel::bce();
  CHECK(resolved_M(c, bce, 400) == doctest::Approx(20.0 * regularity_constants(bce).lipschitz_hessian));
  c.M = 1.0;
  CHECK(resolved_M(c, bce, 400) == 1.0);
}

TEST_CASE("property: GRN is monotone and respects its lambda bounds") {
  const std::vector<std::pair<LossModel, SynthKind>> cases = {
      {LossModel::mse(), SynthKind::RegressionSmooth},
      {LossModel::charbonnier(), SynthKind::CharbonnierWide},
      {LossModel::bce(), SynthKind::BinaryBlobs},
      {LossModel::cce(3), SynthKind::MulticlassBlobs},
      {LossModel::drift({DriftFamily::ArcTan, 1.0, 3}), SynthKind::CharbonnierWide},
  };
  std::uint64_t seed = 50;
  for (const auto& [loss, kind] : cases) {
    CAPTURE(loss.name());
    for (double eta : {0.3, 1.0}) {
      const Dataset data = synthesize(kind, 150, 3, seed++);
      BoostConfig c = quick_config(Scheme::GRN, 25);
      c.eta = eta;
      const TrainResult r = train(data, loss, c);
      CHECK(r.status == TrainStatus::Completed);
      double previous = r.records.front().loss_before;
      for (const IterationRecord& rec : r.records) {
        CHECK(rec.train_loss <= previous + 1e-10);
        previous = rec.train_loss;
        CHECK(rec.lambda_k >= c.C * std::sqrt(r.M_used * rec.grad_norm) + c.lambda_base - 1e-12);
        for (const AuditResult& a : audit_iteration(rec, c, loss)) {
          CAPTURE(a.name);
          CHECK(a.holds);
        }
      }
    }
  }
}

TEST_CASE("first-order and Newton agree on MSE") {
  const Dataset data = synthesize(SynthKind::RegressionSmooth, 300, 4, 9);
  const TrainResult a = train(data, LossModel::mse(), quick_config(Scheme::FirstOrder));
  const TrainResult b = train(data, LossModel::mse(), quick_config(Scheme::Newton));
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(std::abs(a.records[i].train_loss - b.records[i].train_loss) <= 1e-12);
  }
}

TEST_CASE("training is reproducible and independent of threads") {
  const Dataset data = synthesize(SynthKind::MulticlassBlobs, 400, 5, 10);
  BoostConfig c = quick_config(Scheme::GRN, 10);
  const std::string once = metrics_text(train(data, LossModel::cce(3), c));
  CHECK(once == metrics_text(train(data, LossModel::cce(3), c)));
  c.threads = 4;
  CHECK(once == metrics_text(train(data, LossModel::cce(3), c)));
}

TEST_CASE("interpolating Newton trees recover the exact Newton direction") {
  const Dataset data = make_dataset(
      FeatureMatrix(6, 1, std::vector{0.0, 1.0, 2.0, 3.0, 4.0, 5.0}),
      {0.6, -0.4, 0.1, 0.8, -0.2, 0.5});
  // Two rounds: Newton converges quickly and later directions are round-off.
  BoostConfig c = quick_config(Scheme::Newton, 2);
  c.max_depth = 6;
  c.init = InitMode::Zero;
  const TrainResult r = train(data, LossModel::charbonnier(), c);
  REQUIRE(r.status == TrainStatus::Completed);
  for (const IterationRecord& rec : r.records) {
    CAPTURE(rec.k);
    CHECK(*rec.theta_k == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(*rec.gamma_k == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("interpolating GRN trees have unit edge") {
  const Dataset data = make_dataset(
      FeatureMatrix(6, 1, std::vector{0.0, 1.0, 2.0, 3.0, 4.0, 5.0}),
      {3.0, -2.0, 0.5, 4.0, -1.0, 2.5});
  BoostConfig c = quick_config(Scheme::GRN, 8);
  c.max_depth = 6;
  c.M = 1.0;
  c.init = InitMode::Zero;
  const LossModel loss = LossModel::charbonnier();
  const TrainResult r = train(data, loss, c);
  for (const IterationRecord& rec : r.records) {
    if (!rec.theta_k) continue;
        CHECK(*rec.gamma_k == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(*rec.decrement_slack() >= 0.0);
    // With gamma = 1 the growth bound is (1 + eta^2) ||g_k||.
    CHECK(*rec.growth_rhs == doctest::Approx(2.0 * rec.grad_norm));
  }
}

TEST_CASE("GRN on Charbonnier keeps a nonnegative decrement slack") {
  const Dataset data = synthesize(SynthKind::CharbonnierWide, 300, 4, 12);
  BoostConfig c = quick_config(Scheme::GRN, 40);
  c.M = 1.0;
  const TrainResult r = train(data, LossModel::charbonnier(), c);
  for (const IterationRecord& rec : r.records) CHECK(*rec.decrement_slack() >= 0.0);
}

TEST_CASE("Newton on Charbonnier diverges and halts with a flag") {
  const Dataset data = synthesize(SynthKind::CharbonnierWide, 300, 4, 13);
  BoostConfig c = quick_config(Scheme::Newton, 50);
  c.max_depth = 4;
  const TrainResult r = train(data, LossModel::charbonnier(), c);
  CHECK(r.status == TrainStatus::Diverged);
  CHECK(r.records.size() < 50);
  CHECK_FALSE(std::isfinite(r.records.back().train_loss));
  CHECK(r.records.back().warnings.back() == "diverged");
}

TEST_CASE("separable Newton dynamics cube the prediction") {
  PredictionField start(4, 1, std::vector{1.5, -2.0, 1.1, -1.3});
  const PredictionField targets(4, 1);
  const auto path = unrestricted_newton(start, targets, LossModel::charbonnier(), 1.0, 3);
  REQUIRE(path.size() >= 3);
  for (std::size_t t = 1; t < path.size(); ++t) {
    for (int i = 0; i < 4; ++i) {
      const double prev = path[t - 1](i, 0);
      CHECK(path[t](i, 0) == doctest::Approx(-prev * prev * prev).epsilon(1e-12));
    }
  }
}

TEST_CASE("audits need full diagnostics") {
  const Dataset data = synthesize(SynthKind::BinaryBlobs, 100, 3, 14);
  BoostConfig c = quick_config(Scheme::GRN, 2);
  c.diagnostics = DiagnosticsLevel::Cheap;
  const TrainResult r = train(data, LossModel::bce(), c);
  CHECK(r.records[0].gamma_k.has_value());
  CHECK_FALSE(r.records[0].theta_k.has_value());
  CHECK_THROWS_AS(audit_iteration(r.records[0], c, LossModel::bce()), InvalidArgument);

  c.diagnostics = DiagnosticsLevel::Off;
  const TrainResult off = train(data, LossModel::bce(), c);
  CHECK_FALSE(off.records[0].gamma_k.has_value());
}

TEST_CASE("Newton theta identity and decrease theorem on ridge BCE") {
  const Dataset data = synthesize(SynthKind::BinaryBlobs, 300, 4, 15);
  BoostConfig c = quick_config(Scheme::Newton, 30);
  c.eta = 0.25;
  const LossModel loss = LossModel::bce(0.1);
  const TrainResult r = train(data, loss, c);
  int theorem = 0;
  for (const IterationRecord& rec : r.records) {
    for (const AuditResult& a : audit_iteration(rec, c, loss)) {
      CAPTURE(a.name);
      CHECK(a.holds);
      if (a.name == "theorem_decrease") ++theorem;
    }
  }
  CHECK(theorem == 30);
}

TEST_CASE("rolling mean") {
  const std::vector<std::optional<double>> series{1.0, 2.0, 3.0, std::nullopt, 5.0, 6.0};
  const auto same = rolling_mean(series, 1);
  for (std::size_t i = 0; i < series.size(); ++i) CHECK(same[i] == series[i]);
  const auto pairs = rolling_mean(series, 2);
  CHECK_FALSE(pairs[0].has_value());
  CHECK(pairs[1].value() == 1.5);
  CHECK(pairs[2].value() == 2.5);
  CHECK_FALSE(pairs[3].has_value());
  CHECK_FALSE(pairs[4].has_value());
  CHECK(pairs[5].value() == 5.5);
  CHECK_THROWS_AS(rolling_mean(series, 0), InvalidArgument);
}

TEST_CASE("validation loss is tracked but not used") {
  const Dataset data = synthesize(SynthKind::RegressionSmooth, 200, 3, 16);
  const auto [tr, va] = split(data, 0.25, 16);
  const BoostConfig c = quick_config(Scheme::GRN, 5);
  const TrainResult with = train(tr, LossModel::mse(), c, &va);
  const TrainResult without = train(tr, LossModel::mse(), c);
  for (std::size_t i = 0; i < with.records.size(); ++i) {
    CHECK(with.records[i].valid_loss.has_value());
    CHECK(with.records[i].train_loss == without.records[i].train_loss);
  }
}
