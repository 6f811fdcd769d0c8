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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = grnboost::cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("grnboost_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> column(const std::string& csv, int index) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i <= index; ++i) std::getline(row, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

}  // namespace

TEST_CASE("train writes all artifacts") {
  const fs::path dir = scratch("train");
  const Outcome o = run({"train", "--synth", "binary_blobs", "--n", "200", "--q", "3",
                         "--loss", "bce", "--rounds", "5", "--valid-fraction", "0.2",
                         "--out", dir.string()});
  CHECK(o.code == 0);
  for (const char* name : {"model.json", "metrics.csv", "metrics.jsonl", "manifest.json"}) {
    CHECK(fs::exists(dir / name));
  }
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest["status"] == "completed");
  CHECK(manifest["config"]["rounds"] == 5);
  CHECK(manifest["config"]["valid_fraction"] == 0.2);
  CHECK(manifest["dataset_fingerprint"].get<std::string>().size() == 16);
  CHECK(column(read_file(dir / "metrics.csv"), 2).size() == 5);
}

TEST_CASE("GRN is monotone and Newton diverges on the wide Charbonnier data") {
  const fs::path grn = scratch("grn");
  const Outcome a = run({"train", "--synth", "charbonnier_wide", "--n", "300", "--loss",
                         "charbonnier", "--scheme", "grn", "--eta", "1", "--M", "1",
                         "--rounds", "30", "--out", grn.string()});
  CHECK(a.code == 0);
  const std::vector<double> losses = column(read_file(grn / "metrics.csv"), 1);
  for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] <= losses[i - 1]);

  const fs::path newton = scratch("newton");
  const Outcome b = run({"train", "--synth", "charbonnier_wide", "--n", "300", "--loss",
                         "charbonnier", "--scheme", "newton", "--eta", "1", "--rounds",
                         "30", "--out", newton.string()});
  CHECK(b.code == 3);
  const auto manifest = nlohmann::json::parse(read_file(newton / "manifest.json"));
  CHECK(manifest["status"] == "diverged");
  CHECK(manifest["exit_status"] == 3);
}

TEST_CASE("zero rounds give an initial-prediction model and an empty metrics body") {
  const fs::path dir = scratch("zero");
  CHECK(run({"train", "--synth", "regression_smooth", "--n", "20", "--rounds", "0", "--out",
             dir.string()})
            .code == 0);
  CHECK(read_file(dir / "metrics.csv") ==
        "k,train_loss,valid_loss,grad_norm,lambda_k,theta_k,gamma_k,edge_violated,"
        "decrement_slack,growth_slack\n");
  const auto model = nlohmann::json::parse(read_file(dir / "model.json"));
  CHECK(model["trees"].empty());
}

TEST_CASE("config file values are overridden by flags") {
  const fs::path dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"synth": "regression_smooth", "n": 60, "rounds": 7, "eta": 0.5,
               "diagonal_hessian": false, "lambda_base": 0.25})";
  }
  const Outcome o = run({"train", "--config", (dir / "run.json").string(), "--rounds", "3",
                         "--out", (dir / "out").string()});
  CHECK(o.code == 0);
  const auto manifest = nlohmann::json::parse(read_file(dir / "out" / "manifest.json"));
  CHECK(manifest["config"]["rounds"] == 3);
  CHECK(manifest["config"]["eta"] == 0.5);
  CHECK(manifest["config"]["lambda_base"] == 0.25);

  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"learning_rate": 0.1})";
  }
  CHECK(run({"train", "--config", (dir / "bad.json").string(), "--out", dir.string()}).code == 2);
}

TEST_CASE("predict reproduces training predictions") {
  const fs::path dir = scratch("predict");
  CHECK(run({"synth", "--kind", "regression_smooth", "--n", "80", "--q", "3", "--out",
             (dir / "data.csv").string()})
            .code == 0);
  CHECK(run({"train", "--data", (dir / "data.csv").string(), "--rounds", "4", "--out",
             (dir / "run").string()})
            .code == 0);
  const Outcome o = run({"predict", "--model", (dir / "run" / "model.json").string(), "--data",
                         (dir / "data.csv").string(), "--out", (dir / "pred.csv").string()});
  CHECK(o.code == 0);
  const std::string pred = read_file(dir / "pred.csv");
  CHECK(pred.rfind("pred_0\n", 0) == 0);
  CHECK(column(pred, 0).size() == 80);
}

TEST_CASE("diagnose prints the series and the audit table") {
  const fs::path dir = scratch("diagnose");
  const Outcome o = run({"diagnose", "--synth", "binary_blobs", "--n", "200", "--loss", "bce",
                         "--rounds", "12", "--window", "1", "--out", dir.string()});
  CHECK(o.code == 0);
  CHECK(o.out.find("k,theta_k,gamma_k,theta_mean,gamma_mean") != std::string::npos);
  CHECK(o.out.find("inequality,checked,held,min_slack") != std::string::npos);
  const std::string series = read_file(dir / "diagnostics.csv");
  // window 1: rolling means equal the raw series.
  CHECK(column(series, 1) == column(series, 3));
  CHECK(column(series, 2) == column(series, 4));
  CHECK(fs::exists(dir / "audit.csv"));
  CHECK(run({"diagnose", "--synth", "binary_blobs", "--loss", "bce", "--diagnostics", "off"})
            .code == 2);
}

TEST_CASE("lab1d prints the Newton trajectory") {
  const Outcome o = run({"lab1d", "--variant", "charbonnier", "--x0", "2", "--scheme",
                         "newton", "--steps", "3"});
  CHECK(o.code == 0);
  CHECK(o.out.rfind("k,x,loss,lambda\n0,2,", 0) == 0);
  CHECK(o.out.find("\n1,-8,") != std::string::npos);
  CHECK(o.out.find("\n2,512,") != std::string::npos);
  CHECK(run({"lab1d", "--x0", "1", "--variant", "hyperbolic"}).code == 2);
}

TEST_CASE("verify exit codes") {
  CHECK(run({"verify", "--only", "dominance"}).code == 0);
  CHECK(run({"verify", "--only", "fd", "--tolerance", "0"}).code == 1);
}

TEST_CASE("usage and data errors are one machine-readable line") {
  const Outcome bad_loss = run({"train", "--loss", "nonsense", "--synth", "binary_blobs",
                                "--out", scratch("bad").string()});
  CHECK(bad_loss.code == 2);
  CHECK(bad_loss.err.rfind("error kind=config message=\"", 0) == 0);
  CHECK(std::count(bad_loss.err.begin(), bad_loss.err.end(), '\n') == 1);

  const Outcome unknown = run({"train", "--frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.rfind("error kind=usage", 0) == 0);

  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);

  const Outcome missing = run({"train", "--data", "/nonexistent.csv", "--out",
                               scratch("missing").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.rfind("error kind=data", 0) == 0);
}
