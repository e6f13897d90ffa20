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

// Command-line front end: gen-data, run, matrix, eval and calibrate.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpvfc/dataset.h"
#include "dpvfc/experiment.h"
#include "dpvfc/metrics.h"
#include "dpvfc/run_config.h"
#include "dpvfc/sketch.h"
#include "dpvfc/status.h"
#include "dpvfc/vscore.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCellFailures = 4;

int ExitCodeFor(dpvfc::ErrorCode code) {
  using dpvfc::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidParameter:
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kSpecInvalid:
    case ErrorCode::kSingularTransition:
      return kExitConfig;
    default:
      return kExitData;
  }
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw dpvfc::Error(dpvfc::ErrorCode::kIoError, "cannot write " + path);
  }
  out << text;
}

std::string Format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string MatrixCsv(const dpvfc::Matrix& m) {
  std::string s;
  for (size_t i = 0; i < m.rows; ++i) {
    for (size_t j = 0; j < m.cols; ++j) {
      if (j) s += ',';
      s += Format(m(i, j));
    }
    s += '\n';
  }
  return s;
}

dpvfc::Matrix ReadMatrixCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dpvfc::Error(dpvfc::ErrorCode::kIoError, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw dpvfc::Error(dpvfc::ErrorCode::kParseError,
                           path + ":" + std::to_string(line_no) +
                               ": not a number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw dpvfc::Error(dpvfc::ErrorCode::kParseError,
                         path + ":" + std::to_string(line_no) +
                             ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw dpvfc::Error(dpvfc::ErrorCode::kParseError, path + ": no rows");
  }
  dpvfc::Matrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < m.rows; ++i) {
    for (size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

// Shared handling of --config, --set and the per-key flags.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> keyed;
  std::optional<uint64_t> seed;

  void Register(CLI::App* app, bool seed_required) {
    app->add_option("--config", config_path, "RunConfig file (key = value)");
    app->add_option("--set", sets, "Override one key, as key=value");
    auto* seed_opt = app->add_option("--seed", seed, "Run seed");
    if (seed_required) seed_opt->required();
    for (const auto& [key, value] : dpvfc::RunConfig().Entries()) {
      if (key == "seed") continue;
      app->add_option("--" + key, keyed[key], "Config key " + key);
    }
    // Run-control keys, which never appear in reports.
    for (const char* key : {"output", "threads", "concurrent", "timing"}) {
      app->add_option(std::string("--") + key, keyed[key],
                      std::string("Config key ") + key);
    }
  }

  dpvfc::RunConfig Build() const {
    dpvfc::RunConfig config;
    if (!config_path.empty()) config = dpvfc::RunConfig::FromFile(config_path);
    for (const auto& [key, value] : keyed) {
      if (!value.empty()) config.Set(key, value);
    }
    for (const std::string& s : sets) {
      const size_t eq = s.find('=');
      if (eq == std::string::npos) {
        throw dpvfc::Error(dpvfc::ErrorCode::kConfigInvalid,
                           "--set expects key=value, got '" + s + "'");
      }
      config.Set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) config.Set("seed", std::to_string(*seed));
    return config;
  }
};

int GenData(size_t n, size_t m, size_t k, double spread, uint64_t seed,
            const std::string& out) {
  const dpvfc::FullDataset data =
      dpvfc::GenMixedGaussian(n, m, k, spread, dpvfc::Seed{seed});
  std::string s = "id";
  for (const auto& a : data.attributes) s += "," + a;
  s += ",label\n";
  for (size_t i = 0; i < data.ids.size(); ++i) {
    s += data.ids[i];
    for (size_t j = 0; j < data.matrix.cols; ++j) {
      s += "," + Format(data.matrix(i, j));
    }
    s += "," + std::to_string(data.labels[i]) + "\n";
  }
  if (out.empty() || out == "-") {
    std::cout << s;
  } else {
    WriteFile(out, s);
  }
  return kExitOk;
}

int Run(const dpvfc::RunConfig& config, const std::string& centers_path) {
  const dpvfc::PipelineResult result = dpvfc::RunPipeline(config);
  const std::string json = result.report.ToJson(2) + "\n";
  if (config.output.empty() || config.output == "-") {
    std::cout << json;
  } else {
    WriteFile(config.output, json);
  }
  if (!centers_path.empty()) WriteFile(centers_path, MatrixCsv(result.centers));
  return kExitOk;
}

int RunMatrixVerb(const std::string& spec_path, const std::string& preset,
                  const std::vector<std::string>& sets, uint64_t seed,
                  std::optional<size_t> seed_count, size_t workers,
                  const std::string& out_dir) {
  dpvfc::ExperimentSpec spec;
  if (!spec_path.empty()) {
    spec = dpvfc::ExperimentSpec::FromFile(spec_path);
  } else if (!preset.empty()) {
    spec = dpvfc::ExperimentSpec::Preset(preset);
  } else {
    throw dpvfc::Error(dpvfc::ErrorCode::kConfigInvalid,
                       "matrix needs --spec or --preset");
  }
  for (const std::string& s : sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw dpvfc::Error(dpvfc::ErrorCode::kConfigInvalid,
                         "--set expects key=value, got '" + s + "'");
    }
    spec.base.Set(s.substr(0, eq), s.substr(eq + 1));
  }
  // --seed is the first seed of the run; the spec's seed count is kept.
  const size_t count = seed_count.value_or(spec.seeds.size());
  spec.seeds.clear();
  for (size_t i = 0; i < count; ++i) spec.seeds.push_back(seed + i);

  const dpvfc::MatrixResult result = dpvfc::RunMatrix(spec, workers);
  if (out_dir.empty()) {
    std::cout << result.SummaryCsv();
  } else {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    WriteFile((dir / "rows.csv").string(), result.RowsCsv());
    WriteFile((dir / "summary.csv").string(), result.SummaryCsv());
    WriteFile((dir / "results.json").string(), result.Json() + "\n");
    std::cout << result.SummaryCsv();
  }
  for (const auto& row : result.rows) {
    if (!row.ok) {
      std::cerr << "cell failed: " << row.cell.method << " eps="
                << row.cell.epsilon << " S=" << row.cell.parties
                << " seed=" << row.cell.seed << ": " << row.error << "\n";
    }
  }
  return result.AnyFailed() ? kExitCellFailures : kExitOk;
}

int Eval(const dpvfc::RunConfig& config, const std::string& centers_path) {
  const dpvfc::FullDataset data = dpvfc::LoadDataset(config);
  const dpvfc::Matrix centers = ReadMatrixCsv(centers_path);
  if (centers.cols != data.matrix.cols) {
    throw dpvfc::Error(dpvfc::ErrorCode::kDimMismatch,
                       "centers have " + std::to_string(centers.cols) +
                           " columns, data has " +
                           std::to_string(data.matrix.cols));
  }
  std::cout << "{\"normalized_loss\": "
            << Format(dpvfc::NormalizedLoss(data.matrix, centers));
  if (!data.labels.empty()) {
    const dpvfc::Partition p = dpvfc::AssignNearest(data.matrix, centers);
    std::cout << ", \"vscore\": "
              << Format(dpvfc::VScore(data.labels, p.labels));
  }
  std::cout << "}\n";
  return kExitOk;
}

int Calibrate(double gamma, const std::vector<size_t>& sizes) {
  std::cout << "gamma,M,bucket,xi\n";
  for (size_t M : sizes) {
    std::cout << Format(gamma) << "," << M << "," << dpvfc::XiBucket(M) << ","
              << Format(dpvfc::CalibrateXi(gamma, M)) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private vertical federated k-means"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Write a Mixed Gaussian CSV");
  size_t gen_n = 20000, gen_m = 8, gen_k = 5;
  double gen_spread = dpvfc::kDefaultSpread;
  uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--n", gen_n, "Users");
  gen->add_option("--m", gen_m, "Attributes");
  gen->add_option("--k", gen_k, "Generating centers");
  gen->add_option("--spread", gen_spread, "Gaussian standard deviation");
  gen->add_option("--seed", gen_seed, "Data seed")->required();
  gen->add_option("--out", gen_out, "Output path, '-' for stdout");

  auto* run = app.add_subcommand("run", "One end-to-end federated run");
  ConfigFlags run_flags;
  run_flags.Register(run, /*seed_required=*/true);
  std::string run_centers;
  run->add_option("--centers", run_centers, "Write final centers as CSV");

  auto* matrix = app.add_subcommand("matrix", "Run an experiment grid");
  std::string matrix_spec, matrix_preset, matrix_out;
  std::vector<std::string> matrix_sets;
  uint64_t matrix_seed = 0;
  std::optional<size_t> matrix_seed_count;
  size_t matrix_workers = 0;
  matrix->add_option("--spec", matrix_spec, "Experiment file");
  matrix->add_option("--preset", matrix_preset, "Named experiment preset");
  matrix->add_option("--set", matrix_sets, "Override a base config key");
  matrix->add_option("--seed", matrix_seed, "First seed")->required();
  matrix->add_option("--seeds", matrix_seed_count, "Number of seeds");
  matrix->add_option("--workers", matrix_workers, "Worker threads, 0 = auto");
  matrix->add_option("--out", matrix_out,
                     "Directory for rows.csv, summary.csv, results.json");

  auto* eval = app.add_subcommand("eval", "Score centers against a dataset");
  ConfigFlags eval_flags;
  eval_flags.Register(eval, /*seed_required=*/false);
  std::string eval_centers;
  eval->add_option("--centers", eval_centers, "Centers CSV")->required();

  auto* calibrate = app.add_subcommand("calibrate", "Print the xi table");
  double cal_gamma = dpvfc::kDefaultGamma;
  std::vector<size_t> cal_sizes = {256, 1024, 4096, 16384};
  calibrate->add_option("--gamma", cal_gamma, "Geometric ratio");
  calibrate->add_option("--M", cal_sizes, "Sketch counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      return GenData(gen_n, gen_m, gen_k, gen_spread, gen_seed, gen_out);
    }
    if (*run) return Run(run_flags.Build(), run_centers);
    if (*matrix) {
      return RunMatrixVerb(matrix_spec, matrix_preset, matrix_sets, matrix_seed,
                           matrix_seed_count, matrix_workers, matrix_out);
    }
    if (*eval) return Eval(eval_flags.Build(), eval_centers);
    if (*calibrate) return Calibrate(cal_gamma, cal_sizes);
  } catch (const dpvfc::Error& e) {
    std::cerr << "error (" << dpvfc::ErrorCodeName(e.code()) << "): "
              << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
