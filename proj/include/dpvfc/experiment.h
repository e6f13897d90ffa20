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

#ifndef DPVFC_EXPERIMENT_H_
#define DPVFC_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpvfc/matrix.h"
#include "dpvfc/protocol.h"
#include "dpvfc/run_config.h"

namespace dpvfc {

struct RunReport {
  std::string method;
  double normalized_loss = 0.0;
  std::optional<double> vscore;
  std::optional<double> rel_intersection_error;
  std::vector<size_t> bytes_per_party;
  std::vector<size_t> encoding_bytes_per_party;
  double nhat = 0.0;
  size_t k_prime = 0;
  double epsilon_spent = 0.0;
  double delta_spent = 0.0;
  bool within_budget = true;
  std::optional<double> refinement_residual;
  size_t refinement_sweeps = 0;
  // Only filled when timing is enabled; excluded otherwise so that reports
  // are reproducible byte for byte.
  std::optional<double> wall_time_sec;
  std::vector<std::pair<std::string, std::string>> config;
  uint64_t seed = 0;

  // Canonical JSON with a fixed key order.
  std::string ToJson(int indent = -1) const;
};

struct PipelineResult {
  // Final centers in the dataset's original column order.
  Matrix centers;
  RunReport report;
  ProtocolResult protocol;
};

// Loads the dataset, splits it, runs the protocol and scores the result
// against the full data. Requires config.seed_set.
PipelineResult RunPipeline(const RunConfig& config, MessageTap* tap = nullptr);
// Same, on an already loaded dataset.
PipelineResult RunPipeline(const RunConfig& config, const FullDataset& data,
                           MessageTap* tap = nullptr);

// Pseudo-methods that bypass federation: central non-private k-means and
// central DPLSF with the whole budget.
inline constexpr const char* kCentralMethod = "CENTRAL";
inline constexpr const char* kCentralDplsfMethod = "CENTRAL-DPLSF";
RunReport RunCentral(const RunConfig& config, const FullDataset& data,
                     bool private_dplsf);

// Grid of runs: every method x epsilon x parties x k' x seed. Text form is
// key = value lines. Axis keys take comma lists: methods, epsilons, parties,
// kprimes, seeds (explicit list) or seed_count with seed_base. Any other
// key is applied to the base RunConfig of every cell.
struct ExperimentSpec {
  std::string name = "experiment";
  std::vector<std::string> methods;
  std::vector<double> epsilons;
  std::vector<size_t> parties;
  std::vector<std::optional<size_t>> kprimes;
  std::vector<uint64_t> seeds;
  RunConfig base;

  static ExperimentSpec Parse(const std::string& text);
  static ExperimentSpec FromFile(const std::string& path);
  // Named presets; currently "mixed-gaussian-table".
  static ExperimentSpec Preset(const std::string& name, size_t seed_count = 10);
};

struct Cell {
  std::string method;
  double epsilon = 0.0;
  size_t parties = 0;
  std::optional<size_t> k_prime;
  uint64_t seed = 0;
};

struct CellResult {
  Cell cell;
  bool ok = false;
  std::string error;
  RunReport report;
};

struct MatrixResult {
  std::vector<CellResult> rows;

  std::string RowsCsv() const;
  std::string SummaryCsv() const;
  std::string Json() const;
  bool AnyFailed() const;
};

// Expands the axes. Non-private methods collapse the epsilon axis and
// central methods the parties axis.
std::vector<Cell> ExpandCells(const ExperimentSpec& spec);
RunConfig CellConfig(const ExperimentSpec& spec, const Cell& cell);

// Runs every cell on a worker pool; failures are recorded per cell.
MatrixResult RunMatrix(const ExperimentSpec& spec, size_t workers = 0);

double Median(std::vector<double> values);
double Mean(const std::vector<double>& values);

}  // namespace dpvfc

#endif  // DPVFC_EXPERIMENT_H_
