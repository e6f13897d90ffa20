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

#include "dpvfc/run_config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dpvfc/privacy.h"
#include "dpvfc/status.h"

namespace dpvfc {
namespace {

std::string Upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void Invalid(const std::string& key, const std::string& value,
                          const std::string& why) {
  throw Error(ErrorCode::kConfigInvalid,
              "'" + key + "' = '" + value + "': " + why);
}

double ToDouble(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    if (Lower(value) == "inf") return std::numeric_limits<double>::infinity();
    Invalid(key, value, "expected a number");
  }
  return v;
}

uint64_t ToU64(const std::string& key, const std::string& value) {
  uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    Invalid(key, value, "expected a nonnegative integer");
  }
  return v;
}

bool ToBool(const std::string& key, const std::string& value) {
  const std::string v = Lower(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  Invalid(key, value, "expected true or false");
}

std::string Num(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string JoinList(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += v[i];
  }
  return s;
}

}  // namespace

Estimator ParseEstimator(const std::string& name) {
  std::string n = Upper(Trim(name));
  if (n.size() > 3 && n.ends_with("EST")) n = n.substr(0, n.size() - 3);
  if (n == "DPFMPS-BASIC") return Estimator::kDpfmpsBasic;
  if (n == "DPFMPS-2P") return Estimator::kDpfmpsTwoPhase;
  if (n == "IND-LAP") return Estimator::kIndLap;
  if (n == "LDP-AGG") return Estimator::kLdpAgg;
  if (n == "LDP-AGG-2P") return Estimator::kLdpAgg2P;
  if (n == "NON-PRIVATE") return Estimator::kNonPrivate;
  throw Error(ErrorCode::kConfigInvalid, "unknown estimator '" + name + "'");
}

std::string EstimatorName(Estimator e) {
  switch (e) {
    case Estimator::kDpfmpsBasic:
      return "DPFMPS-BASIC";
    case Estimator::kDpfmpsTwoPhase:
      return "DPFMPS-2P";
    case Estimator::kIndLap:
      return "IND-LAP";
    case Estimator::kLdpAgg:
      return "LDP-AGG";
    case Estimator::kLdpAgg2P:
      return "LDP-AGG-2P";
    case Estimator::kNonPrivate:
      return "NON-PRIVATE";
  }
  return "";
}

bool IsLdp(Estimator e) {
  return e == Estimator::kLdpAgg || e == Estimator::kLdpAgg2P;
}

LocalClustering ParseLocalClustering(const std::string& name) {
  const std::string n = Lower(Trim(name));
  if (n == "auto") return LocalClustering::kAuto;
  if (n == "dplsf") return LocalClustering::kDplsf;
  if (n == "dplloyd") return LocalClustering::kDplloyd;
  if (n == "kmeans") return LocalClustering::kKMeans;
  throw Error(ErrorCode::kConfigInvalid,
              "unknown local clustering '" + name + "'");
}

std::string LocalClusteringName(LocalClustering c) {
  switch (c) {
    case LocalClustering::kAuto:
      return "auto";
    case LocalClustering::kDplsf:
      return "dplsf";
    case LocalClustering::kDplloyd:
      return "dplloyd";
    case LocalClustering::kKMeans:
      return "kmeans";
  }
  return "";
}

void RunConfig::Set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = Trim(raw_key);
  const std::string value = Trim(raw_value);
  const std::string lower = Lower(value);
  if (key == "estimator") {
    estimator = ParseEstimator(value);
  } else if (key == "local_clustering") {
    local_clustering = ParseLocalClustering(value);
  } else if (key == "k") {
    k = ToU64(key, value);
  } else if (key == "k_prime") {
    k_prime = lower == "auto" ? std::nullopt
                              : std::optional<size_t>(ToU64(key, value));
  } else if (key == "k_max") {
    k_max = ToU64(key, value);
  } else if (key == "epsilon") {
    epsilon = ToDouble(key, value);
  } else if (key == "delta") {
    delta = lower == "auto" ? std::nullopt
                            : std::optional<double>(ToDouble(key, value));
  } else if (key == "b") {
    b = lower == "auto" ? std::nullopt
                        : std::optional<double>(ToDouble(key, value));
  } else if (key == "sketches") {
    sketches = ToU64(key, value);
  } else if (key == "gamma") {
    gamma = ToDouble(key, value);
  } else if (key == "rho") {
    rho = ToDouble(key, value);
  } else if (key == "schedule.sweeps") {
    schedule.sweeps = lower == "auto" ? 0 : ToU64(key, value);
  } else if (key == "schedule.eta_first") {
    schedule.eta_first = ToDouble(key, value);
  } else if (key == "schedule.eta_second") {
    schedule.eta_second = ToDouble(key, value);
  } else if (key == "schedule.tolerance") {
    schedule.tolerance = ToDouble(key, value);
  } else if (key == "schedule.random_pairs") {
    schedule.random_pairs = ToBool(key, value);
  } else if (key == "parties") {
    parties = ToU64(key, value);
  } else if (key == "split") {
    split = value;
  } else if (key == "dataset") {
    dataset = lower;
  } else if (key == "data.n") {
    data_n = ToU64(key, value);
  } else if (key == "data.m") {
    data_m = ToU64(key, value);
  } else if (key == "data.k") {
    data_k = ToU64(key, value);
  } else if (key == "data.spread") {
    data_spread = ToDouble(key, value);
  } else if (key == "data.seed") {
    data_seed = lower == "run" || lower == "auto"
                    ? std::nullopt
                    : std::optional<uint64_t>(ToU64(key, value));
  } else if (key == "csv.path") {
    csv_path = value;
  } else if (key == "csv.columns") {
    csv_columns = SplitList(value);
  } else if (key == "csv.clip_quantile") {
    csv_clip_quantile = lower == "none" || value.empty()
                            ? std::nullopt
                            : std::optional<double>(ToDouble(key, value));
  } else if (key == "csv.id_column") {
    csv_id_column = value;
  } else if (key == "csv.label_column") {
    csv_label_column = value;
  } else if (key == "kmeans.iters") {
    kmeans_iters = ToU64(key, value);
  } else if (key == "kmeans.restarts") {
    kmeans_restarts = ToU64(key, value);
  } else if (key == "dplloyd.iters") {
    dplloyd_iters = ToU64(key, value);
  } else if (key == "dplsf.depth") {
    dplsf_depth = ToU64(key, value);
  } else if (key == "dplsf.count_fraction") {
    dplsf_count_fraction = ToDouble(key, value);
  } else if (key == "seed") {
    seed = ToU64(key, value);
    seed_set = true;
  } else if (key == "output") {
    output = value;
  } else if (key == "threads") {
    threads = ToU64(key, value);
  } else if (key == "concurrent") {
    concurrent = ToBool(key, value);
  } else if (key == "timing") {
    timing = ToBool(key, value);
  } else {
    throw Error(ErrorCode::kConfigInvalid, "unknown key '" + key + "'");
  }
}

void RunConfig::SetFromText(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (Trim(line).empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfigInvalid,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    Set(line.substr(0, eq), line.substr(eq + 1));
  }
}

RunConfig RunConfig::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigInvalid, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig c;
  c.SetFromText(buf.str());
  return c;
}

void RunConfig::Validate() const {
  auto require = [](bool ok, const std::string& why) {
    if (!ok) throw Error(ErrorCode::kConfigInvalid, why);
  };
  require(epsilon > 0.0, "epsilon must be positive");
  require(!delta || (*delta > 0.0 && *delta < 1.0), "delta must lie in (0, 1)");
  require(!b || (*b > 0.0 && *b <= 1.0), "b must lie in (0, 1]");
  require(!(IsLdp(estimator) && b && *b != 1.0),
          "LDP estimators spend nothing on the count query; b must be 1");
  require(!(IsLdp(estimator) && !k_prime),
          "automatic k' needs a noisy count, which LDP estimators skip");
  require(k >= 1, "k must be at least 1");
  require(k_max >= 2, "k_max must be at least 2");
  require(!k_prime || (*k_prime >= 2 && *k_prime <= k_max),
          "k' must lie in [2, k_max]");
  require(parties >= 2, "at least two parties are required");
  require(sketches >= 1, "sketches must be at least 1");
  require(gamma > 0.0, "gamma must be positive");
  require(rho > 0.0, "rho must be positive");
  require(schedule.eta_first > 0.0 && schedule.eta_second > 0.0,
          "schedule step sizes must be positive");
  require(schedule.tolerance > 0.0, "schedule tolerance must be positive");
  require(!(estimator != Estimator::kNonPrivate &&
            local_clustering == LocalClustering::kKMeans),
          "non-private local k-means is only allowed with NON-PRIVATE");
  require(dataset == "mixed-gaussian" || dataset == "csv",
          "dataset must be mixed-gaussian or csv");
  require(dataset != "csv" || !csv_path.empty(), "csv.path is required");
  require(data_n >= 1 && data_m >= 1 && data_k >= 1,
          "data.n, data.m and data.k must be positive");
  require(data_spread >= 0.0, "data.spread must be nonnegative");
  require(!csv_clip_quantile ||
              (*csv_clip_quantile > 0.0 && *csv_clip_quantile <= 1.0),
          "csv.clip_quantile must lie in (0, 1]");
  require(kmeans_iters >= 1 && kmeans_restarts >= 1,
          "k-means needs at least one iteration and one restart");
  require(dplloyd_iters >= 1, "dplloyd.iters must be at least 1");
  require(dplsf_depth >= 1, "dplsf.depth must be at least 1");
  require(dplsf_count_fraction > 0.0 && dplsf_count_fraction < 1.0,
          "dplsf.count_fraction must lie in (0, 1)");
  try {
    SplitSpec::Parse(split, parties);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
}

double RunConfig::ResolvedB() const {
  if (b) return *b;
  return IsLdp(estimator) ? 1.0 : kDefaultBudgetFraction;
}

double RunConfig::ResolvedDelta(size_t n) const {
  if (delta) return *delta;
  return 1.0 / static_cast<double>(std::max<size_t>(n, 2));
}

LocalClustering RunConfig::ResolvedLocalClustering() const {
  if (local_clustering != LocalClustering::kAuto) return local_clustering;
  return estimator == Estimator::kNonPrivate ? LocalClustering::kKMeans
                                             : LocalClustering::kDplsf;
}

std::vector<std::pair<std::string, std::string>> RunConfig::Entries() const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("estimator", EstimatorName(estimator));
  e.emplace_back("local_clustering", LocalClusteringName(local_clustering));
  e.emplace_back("k", std::to_string(k));
  e.emplace_back("k_prime", k_prime ? std::to_string(*k_prime) : "auto");
  e.emplace_back("k_max", std::to_string(k_max));
  e.emplace_back("epsilon", Num(epsilon));
  e.emplace_back("delta", delta ? Num(*delta) : "auto");
  e.emplace_back("b", b ? Num(*b) : "auto");
  e.emplace_back("sketches", std::to_string(sketches));
  e.emplace_back("gamma", Num(gamma));
  e.emplace_back("rho", Num(rho));
  e.emplace_back("schedule.sweeps",
                 schedule.sweeps ? std::to_string(schedule.sweeps) : "auto");
  e.emplace_back("schedule.eta_first", Num(schedule.eta_first));
  e.emplace_back("schedule.eta_second", Num(schedule.eta_second));
  e.emplace_back("schedule.tolerance", Num(schedule.tolerance));
  e.emplace_back("schedule.random_pairs",
                 schedule.random_pairs ? "true" : "false");
  e.emplace_back("parties", std::to_string(parties));
  e.emplace_back("split", split);
  e.emplace_back("dataset", dataset);
  e.emplace_back("data.n", std::to_string(data_n));
  e.emplace_back("data.m", std::to_string(data_m));
  e.emplace_back("data.k", std::to_string(data_k));
  e.emplace_back("data.spread", Num(data_spread));
  e.emplace_back("data.seed", data_seed ? std::to_string(*data_seed) : "run");
  e.emplace_back("csv.path", csv_path);
  e.emplace_back("csv.columns", JoinList(csv_columns));
  e.emplace_back("csv.clip_quantile",
                 csv_clip_quantile ? Num(*csv_clip_quantile) : "none");
  e.emplace_back("csv.id_column", csv_id_column);
  e.emplace_back("csv.label_column", csv_label_column);
  e.emplace_back("kmeans.iters", std::to_string(kmeans_iters));
  e.emplace_back("kmeans.restarts", std::to_string(kmeans_restarts));
  e.emplace_back("dplloyd.iters", std::to_string(dplloyd_iters));
  e.emplace_back("dplsf.depth", std::to_string(dplsf_depth));
  e.emplace_back("dplsf.count_fraction", Num(dplsf_count_fraction));
  e.emplace_back("seed", std::to_string(seed));
  return e;
}

std::string RunConfig::ToText() const {
  std::string s;
  for (const auto& [k, v] : Entries()) s += k + " = " + v + "\n";
  return s;
}

FullDataset LoadDataset(const RunConfig& config) {
  if (config.dataset == "csv") {
    CsvOptions opts;
    opts.columns = config.csv_columns;
    opts.clip_quantile = config.csv_clip_quantile;
    if (!config.csv_id_column.empty()) opts.id_column = config.csv_id_column;
    if (!config.csv_label_column.empty()) {
      opts.label_column = config.csv_label_column;
    }
    return IngestCsv(config.csv_path, opts).data;
  }
  return GenMixedGaussian(config.data_n, config.data_m, config.data_k,
                          config.data_spread,
                          Seed{config.ResolvedDataSeed()});
}

}  // namespace dpvfc
