// Copyright 2026 The dpvfc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dpvfc/experiment.h"
#include "dpvfc/metrics.h"
#include "dpvfc/run_config.h"
#include "dpvfc/status.h"
#include "test_util.h"

namespace dpvfc {
namespace {

TEST(NormalizedLossTest, HandExamples) {
  Matrix data(2, 1);
  data(0, 0) = 0.0;
  data(1, 0) = 2.0;
  Matrix one(1, 1);
  one(0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(NormalizedLoss(data, one), 1.0);
  Matrix two(2, 1);
  two(0, 0) = 0.0;
  two(1, 0) = 2.0;
  EXPECT_EQ(NormalizedLoss(data, two), 0.0);
  EXPECT_THROW(NormalizedLoss(data, Matrix(0, 1)), Error);
  EXPECT_THROW(NormalizedLoss(data, Matrix(1, 2)), Error);
}

TEST(NormalizedLossTest, MatchesBruteForce) {
  RandomStream rng(Seed{8});
  Matrix data(300, 3), centers(4, 3);
  for (double& v : data.data) v = rng.NextUniform() * 2 - 1;
  for (double& v : centers.data) v = rng.NextUniform() * 2 - 1;
  double sum = 0.0;
  for (size_t i = 0; i < data.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centers.rows; ++c) {
      double d = 0.0;
      for (size_t j = 0; j < 3; ++j) {
        d += (data(i, j) - centers(c, j)) * (data(i, j) - centers(c, j));
      }
      best = std::min(best, d);
    }
    sum += best;
  }
  EXPECT_NEAR(NormalizedLoss(data, centers), sum / 300.0, 1e-12);
}

TEST(RelIntersectionErrorTest, Examples) {
  WeightGrid truth = WeightGrid::Zeros({2, 2}, 10.0);
  truth.weights = {10, 0, 0, 0};
  EXPECT_EQ(RelIntersectionError(truth, truth), 0.0);
  WeightGrid moved = truth;
  moved.weights = {5, 5, 0, 0};
  EXPECT_DOUBLE_EQ(RelIntersectionError(moved, truth), 1.0);
  // A uniform guess against a point mass over K cells.
  for (size_t kp : {2, 3, 5}) {
    for (size_t s : {2, 3}) {
      const std::vector<size_t> dims(s, kp);
      WeightGrid t = WeightGrid::Zeros(dims, 100.0);
      t.weights[0] = 100.0;
      WeightGrid u = WeightGrid::Zeros(dims, 100.0);
      const double cells = static_cast<double>(u.size());
      for (double& w : u.weights) w = 100.0 / cells;
      EXPECT_NEAR(RelIntersectionError(u, t), 2.0 * (1.0 - 1.0 / cells), 1e-12);
    }
  }
  EXPECT_THROW(RelIntersectionError(WeightGrid::Zeros({2, 3}, 1.0), truth),
               Error);
}

TEST(RunConfigTest, SetValidateAndTextRoundTrip) {
  RunConfig c;
  c.SetFromText(
      "# comment\n"
      "estimator = ldp-agg-2p\n"
      "epsilon = 0.5\n"
      "k_prime = 3\n"
      "parties = 3\n"
      "split = ratio:2,3,3\n"
      "schedule.sweeps = 7\n"
      "csv.columns = a,b\n"
      "seed = 12\n");
  EXPECT_EQ(c.estimator, Estimator::kLdpAgg2P);
  EXPECT_TRUE(c.seed_set);
  c.Validate();
  RunConfig d;
  d.SetFromText(c.ToText());
  EXPECT_EQ(d.Entries(), c.Entries());
  EXPECT_EQ(d.ToText(), c.ToText());
}

TEST(RunConfigTest, RejectsBadInput) {
  RunConfig c;
  EXPECT_THROW(c.Set("no_such_key", "1"), Error);
  EXPECT_THROW(c.Set("epsilon", "abc"), Error);
  EXPECT_THROW(c.Set("estimator", "FOO"), Error);
  auto invalid = [](const std::string& key, const std::string& value) {
    RunConfig r;
    r.Set(key, value);
    try {
      r.Validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::kConfigInvalid;
    }
    return false;
  };
  EXPECT_TRUE(invalid("epsilon", "0"));
  EXPECT_TRUE(invalid("k_prime", "1"));
  EXPECT_TRUE(invalid("parties", "1"));
  EXPECT_TRUE(invalid("split", "bogus"));
  EXPECT_TRUE(invalid("local_clustering", "kmeans"));
  EXPECT_TRUE(invalid("dataset", "csv"));
}

ExperimentSpec SmallSpec() {
  return ExperimentSpec::Parse(
      "name = small\n"
      "methods = CENTRAL, DPFMPS-2P, ind-lap\n"
      "epsilons = 1, 4\n"
      "parties = 2\n"
      "kprimes = 3\n"
      "seeds = 1, 2\n"
      "data.n = 800\n"
      "sketches = 64\n");
}

TEST(ExperimentTest, ExpansionCollapsesAxes) {
  const auto cells = ExpandCells(SmallSpec());
  // CENTRAL: 2 seeds; each federated method: 2 eps x 2 seeds.
  ASSERT_EQ(cells.size(), 2u + 4u + 4u);
  EXPECT_EQ(cells[0].method, "CENTRAL");
  EXPECT_EQ(cells[0].parties, 0u);
  EXPECT_TRUE(std::isinf(cells[0].epsilon));
  EXPECT_EQ(cells[2].method, "DPFMPS-2P");
  EXPECT_EQ(cells.back().method, "IND-LAP");
}

TEST(ExperimentTest, MatrixIsDeterministicAcrossWorkers) {
  const ExperimentSpec spec = SmallSpec();
  const MatrixResult serial = RunMatrix(spec, 1);
  const MatrixResult pooled = RunMatrix(spec, 3);
  EXPECT_FALSE(serial.AnyFailed());
  EXPECT_EQ(serial.RowsCsv(), pooled.RowsCsv());
  EXPECT_EQ(serial.SummaryCsv(), pooled.SummaryCsv());
  EXPECT_EQ(serial.Json(), pooled.Json());
}

std::vector<std::vector<std::string>> ParseCsvRows(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    out.push_back(f);
  }
  return out;
}

TEST(ExperimentTest, SummaryRecomputesFromRows) {
  const MatrixResult r = RunMatrix(SmallSpec(), 1);
  const auto rows = ParseCsvRows(r.RowsCsv());
  const auto summary = ParseCsvRows(r.SummaryCsv());
  ASSERT_GT(rows.size(), 1u);
  size_t loss_col = 0, method_col = 0, eps_col = 0;
  for (size_t i = 0; i < rows[0].size(); ++i) {
    if (rows[0][i] == "normalized_loss") loss_col = i;
    if (rows[0][i] == "method") method_col = i;
    if (rows[0][i] == "epsilon") eps_col = i;
  }
  std::map<std::string, std::vector<double>> groups;
  for (size_t i = 1; i < rows.size(); ++i) {
    groups[rows[i][method_col] + "|" + rows[i][eps_col]].push_back(
        std::stod(rows[i][loss_col]));
  }
  size_t med_col = 0;
  for (size_t i = 0; i < summary[0].size(); ++i) {
    if (summary[0][i] == "median_loss") med_col = i;
  }
  ASSERT_GT(med_col, 0u);
  ASSERT_EQ(summary.size(), groups.size() + 1);
  for (size_t i = 1; i < summary.size(); ++i) {
    const auto& v = groups.at(summary[i][method_col] + "|" + summary[i][eps_col]);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NEAR(std::stod(summary[i][med_col]), (v[0] + v[1]) / 2, 1e-9);
  }
}

TEST(ExperimentTest, FailingCellsAreIsolated) {
  const ExperimentSpec spec = ExperimentSpec::Parse(
      "methods = LDP-AGG-2P, DPFMPS-2P\n"
      "epsilons = 1\n"
      "kprimes = auto\n"
      "seeds = 3\n"
      "data.n = 500\n"
      "sketches = 64\n");
  const MatrixResult r = RunMatrix(spec, 1);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[0].ok);
  EXPECT_NE(r.rows[0].error.find("k'"), std::string::npos);
  EXPECT_TRUE(r.rows[1].ok);
  EXPECT_TRUE(r.AnyFailed());
}

TEST(ExperimentTest, PresetShape) {
  const ExperimentSpec p = ExperimentSpec::Preset("mixed-gaussian-table", 3);
  EXPECT_EQ(p.seeds, (std::vector<uint64_t>{1, 2, 3}));
  EXPECT_EQ(p.parties, (std::vector<size_t>{2, 4}));
  EXPECT_THROW(ExperimentSpec::Preset("nope"), Error);
  EXPECT_THROW(ExperimentSpec::Parse("methods = CENTRAL\nseeds =\n"), Error);
}

TEST(ExperimentTest, SpecFileMatchesPreset) {
  const ExperimentSpec file = ExperimentSpec::FromFile(
      std::string(DPVFC_GOLDEN_DIR) + "/../../experiments/mixed-gaussian-table.txt");
  const ExperimentSpec preset = ExperimentSpec::Preset("mixed-gaussian-table");
  const auto a = ExpandCells(file), b = ExpandCells(preset);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].method, b[i].method);
    EXPECT_EQ(a[i].epsilon, b[i].epsilon);
    EXPECT_EQ(a[i].parties, b[i].parties);
    EXPECT_EQ(a[i].k_prime, b[i].k_prime);
    EXPECT_EQ(a[i].seed, b[i].seed);
  }
  EXPECT_EQ(file.base.ToText(), preset.base.ToText());
}

TEST(PipelineTest, ReportIsDeterministicAndComplete) {
  RunConfig c;
  c.SetFromText("data.n = 1000\nsketches = 128\nseed = 5\nk_prime = 4\n");
  const PipelineResult a = RunPipeline(c);
  const PipelineResult b = RunPipeline(c);
  EXPECT_EQ(a.report.ToJson(), b.report.ToJson());
  EXPECT_EQ(a.centers, b.centers);
  EXPECT_EQ(a.centers.cols, 8u);
  EXPECT_TRUE(a.report.within_budget);
  EXPECT_TRUE(a.report.vscore.has_value());
  EXPECT_TRUE(a.report.refinement_residual.has_value());
  EXPECT_EQ(a.report.ToJson().find("wall_time_sec"), std::string::npos);
  RunConfig unseeded;
  try {
    RunPipeline(unseeded);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigInvalid);
  }
}

int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(DPVFC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / "dpvfc_cli_test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "d.csv").string();
  EXPECT_EQ(RunCli("--help"), 0);
  EXPECT_EQ(RunCli("run --data.n 500"), 2);
  EXPECT_EQ(RunCli("run --seed 1 --epsilon -1"), 2);
  EXPECT_EQ(RunCli("run --seed 1 --set bogus=1"), 2);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("gen-data --n 300 --m 4 --k 3 --seed 2 --out " + csv), 0);
  EXPECT_EQ(RunCli("run --seed 1 --dataset csv --csv.path " + csv +
                   " --csv.id_column id --sketches 64 --k 3"),
            0);
  EXPECT_EQ(RunCli("run --seed 1 --dataset csv --csv.path " + csv +
                   " --csv.columns nope"),
            3);
  EXPECT_EQ(RunCli("calibrate --M 64"), 0);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dpvfc
