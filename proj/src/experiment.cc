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

#include "dpvfc/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dpvfc/local_clustering.h"
#include "dpvfc/metrics.h"
#include "dpvfc/parallel.h"
#include "dpvfc/status.h"
#include "dpvfc/vscore.h"

namespace dpvfc {
namespace {

using OrderedJson = nlohmann::ordered_json;

std::string Fmt(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
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

bool IsCentral(const std::string& method) {
  return method == kCentralMethod || method == kCentralDplsfMethod;
}

bool IsNonPrivateMethod(const std::string& method) {
  return method == kCentralMethod || method == "NON-PRIVATE";
}

std::optional<double> VScoreOf(const FullDataset& data, const Matrix& centers) {
  if (data.labels.empty()) return std::nullopt;
  const Partition p = AssignNearest(data.matrix, centers);
  return VScore(data.labels, p.labels);
}

}  // namespace

std::string RunReport::ToJson(int indent) const {
  OrderedJson j;
  j["method"] = method;
  j["seed"] = seed;
  j["normalized_loss"] = normalized_loss;
  j["vscore"] = vscore ? OrderedJson(*vscore) : OrderedJson(nullptr);
  j["rel_intersection_error"] = rel_intersection_error
                                    ? OrderedJson(*rel_intersection_error)
                                    : OrderedJson(nullptr);
  j["bytes_per_party"] = bytes_per_party;
  j["encoding_bytes_per_party"] = encoding_bytes_per_party;
  j["nhat"] = nhat;
  j["k_prime"] = k_prime;
  j["epsilon_spent"] = epsilon_spent;
  j["delta_spent"] = delta_spent;
  j["within_budget"] = within_budget;
  j["refinement_residual"] = refinement_residual
                                 ? OrderedJson(*refinement_residual)
                                 : OrderedJson(nullptr);
  j["refinement_sweeps"] = refinement_sweeps;
  if (wall_time_sec) j["wall_time_sec"] = *wall_time_sec;
  OrderedJson cfg = OrderedJson::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = cfg;
  return j.dump(indent);
}

PipelineResult RunPipeline(const RunConfig& config, MessageTap* tap) {
  config.Validate();
  if (!config.seed_set) {
    throw Error(ErrorCode::kConfigInvalid, "a seed is required");
  }
  const FullDataset data = LoadDataset(config);
  return RunPipeline(config, data, tap);
}

PipelineResult RunPipeline(const RunConfig& config, const FullDataset& data,
                           MessageTap* tap) {
  config.Validate();
  if (!config.seed_set) {
    throw Error(ErrorCode::kConfigInvalid, "a seed is required");
  }
  const auto start = std::chrono::steady_clock::now();
  const SplitSpec spec = SplitSpec::Parse(config.split, config.parties);
  const std::vector<DatasetView> views =
      VSplit(data, spec, Seed{config.ResolvedDataSeed()});

  PipelineResult out;
  out.protocol = RunProtocol(config, views, tap);
  const ProtocolResult& p = out.protocol;

  // Undo the party-order concatenation of center coordinates.
  out.centers = Matrix(p.centers.rows, data.matrix.cols);
  size_t col = 0;
  for (const DatasetView& v : views) {
    for (size_t c : v.columns) {
      for (size_t i = 0; i < p.centers.rows; ++i) {
        out.centers(i, c) = p.centers(i, col);
      }
      ++col;
    }
  }

  RunReport& r = out.report;
  r.method = EstimatorName(config.estimator);
  r.seed = config.seed;
  r.normalized_loss = NormalizedLoss(data.matrix, out.centers);
  r.vscore = VScoreOf(data, out.centers);
  std::vector<std::vector<uint32_t>> labels;
  for (const LocalModel& m : p.local_models) labels.push_back(m.partition.labels);
  const WeightGrid truth = TruthGrid(labels, p.grid.dims);
  r.rel_intersection_error = RelIntersectionError(p.grid, truth);
  r.bytes_per_party = p.bytes_per_party;
  r.encoding_bytes_per_party = p.encoding_bytes_per_party;
  r.nhat = p.nhat;
  r.k_prime = p.k_prime;
  r.epsilon_spent = p.ledger.TotalEpsilon();
  r.delta_spent = p.ledger.TotalDelta();
  r.within_budget = p.ledger.WithinBudget(
      {config.epsilon, config.ResolvedDelta(data.matrix.rows)});
  if (config.estimator == Estimator::kDpfmpsTwoPhase ||
      config.estimator == Estimator::kLdpAgg2P) {
    r.refinement_residual = p.refinement.max_residual;
    r.refinement_sweeps = p.refinement.sweeps_run;
  }
  r.config = config.Entries();
  if (config.timing) {
    r.wall_time_sec = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  }
  return out;
}

RunReport RunCentral(const RunConfig& config, const FullDataset& data,
                     bool private_dplsf) {
  const auto start = std::chrono::steady_clock::now();
  RandomStream root = RandomStream(Seed{config.seed}).Fork("central");
  KMeansOptions km;
  km.iters = config.kmeans_iters;
  km.restarts = config.kmeans_restarts;
  RunReport r;
  r.seed = config.seed;
  LocalModel model;
  if (private_dplsf) {
    r.method = kCentralDplsfMethod;
    DplsfOptions opts;
    opts.depth = config.dplsf_depth;
    opts.count_fraction = config.dplsf_count_fraction;
    opts.kmeans = km;
    PrivacyLedger ledger;
    model = Dplsf(data.matrix, config.k, config.epsilon, root.NextSeed(), opts,
                  &ledger, 0);
    r.epsilon_spent = ledger.TotalEpsilon();
    r.within_budget = ledger.WithinBudget(
        {config.epsilon, config.ResolvedDelta(data.matrix.rows)});
  } else {
    r.method = kCentralMethod;
    model = NonPrivateLocal(data.matrix, config.k, root.NextSeed(), km);
  }
  r.normalized_loss = NormalizedLoss(data.matrix, model.centers);
  r.vscore = VScoreOf(data, model.centers);
  r.k_prime = config.k;
  r.nhat = static_cast<double>(data.matrix.rows);
  r.config = config.Entries();
  if (config.timing) {
    r.wall_time_sec = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  }
  return r;
}

ExperimentSpec ExperimentSpec::Parse(const std::string& text) {
  ExperimentSpec spec;
  std::optional<size_t> seed_count;
  uint64_t seed_base = 1;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kConfigInvalid,
                "line " + std::to_string(line_no) + ": " + why);
  };
  auto to_u64 = [&](const std::string& s) -> uint64_t {
    try {
      size_t pos = 0;
      const unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size()) fail("bad integer '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad integer '" + s + "'");
    }
    return 0;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (Trim(line).empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key == "preset") {
      const RunConfig base = spec.base;
      spec = Preset(value);
      spec.base = base;
    } else if (key == "name") {
      spec.name = value;
    } else if (key == "methods" || key == "estimators") {
      spec.methods.clear();
      for (const auto& m : SplitList(value)) {
        if (IsCentral(m)) {
          spec.methods.push_back(m);
        } else {
          spec.methods.push_back(EstimatorName(ParseEstimator(m)));
        }
      }
    } else if (key == "epsilons") {
      spec.epsilons.clear();
      for (const auto& e : SplitList(value)) {
        try {
          spec.epsilons.push_back(std::stod(e));
        } catch (const std::logic_error&) {
          fail("bad epsilon '" + e + "'");
        }
      }
    } else if (key == "parties") {
      spec.parties.clear();
      for (const auto& p : SplitList(value)) spec.parties.push_back(to_u64(p));
    } else if (key == "kprimes") {
      spec.kprimes.clear();
      for (const auto& k : SplitList(value)) {
        spec.kprimes.push_back(k == "auto" ? std::nullopt
                                           : std::optional<size_t>(to_u64(k)));
      }
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& s : SplitList(value)) spec.seeds.push_back(to_u64(s));
    } else if (key == "seed_count") {
      seed_count = to_u64(value);
    } else if (key == "seed_base") {
      seed_base = to_u64(value);
    } else {
      spec.base.Set(key, value);
    }
  }
  if (seed_count) {
    spec.seeds.clear();
    for (size_t i = 0; i < *seed_count; ++i) spec.seeds.push_back(seed_base + i);
  }
  if (spec.methods.empty()) {
    spec.methods.push_back(EstimatorName(spec.base.estimator));
  }
  if (spec.epsilons.empty()) spec.epsilons.push_back(spec.base.epsilon);
  if (spec.parties.empty()) spec.parties.push_back(spec.base.parties);
  if (spec.kprimes.empty()) spec.kprimes.push_back(spec.base.k_prime);
  if (spec.seeds.empty()) fail("no seeds given");
  return spec;
}

ExperimentSpec ExperimentSpec::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigInvalid, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

ExperimentSpec ExperimentSpec::Preset(const std::string& name,
                                      size_t seed_count) {
  if (name != "mixed-gaussian-table") {
    throw Error(ErrorCode::kConfigInvalid, "unknown preset '" + name + "'");
  }
  ExperimentSpec spec;
  spec.name = name;
  spec.methods = {kCentralMethod,  kCentralDplsfMethod, "NON-PRIVATE",
                  "DPFMPS-2P",     "DPFMPS-BASIC",      "IND-LAP",
                  "LDP-AGG-2P"};
  spec.epsilons = {1.0, 4.0};
  spec.parties = {2, 4};
  spec.kprimes = {5};
  for (size_t i = 0; i < seed_count; ++i) spec.seeds.push_back(i + 1);
  return spec;
}

std::vector<Cell> ExpandCells(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  const double inf = std::numeric_limits<double>::infinity();
  for (const std::string& method : spec.methods) {
    const std::vector<double> eps =
        IsNonPrivateMethod(method) ? std::vector<double>{inf} : spec.epsilons;
    const std::vector<size_t> parties =
        IsCentral(method) ? std::vector<size_t>{0} : spec.parties;
    const std::vector<std::optional<size_t>> kprimes =
        IsCentral(method) ? std::vector<std::optional<size_t>>{std::nullopt}
                          : spec.kprimes;
    for (double e : eps) {
      for (size_t s : parties) {
        for (const auto& kp : kprimes) {
          for (uint64_t seed : spec.seeds) {
            cells.push_back({method, e, s, kp, seed});
          }
        }
      }
    }
  }
  return cells;
}

RunConfig CellConfig(const ExperimentSpec& spec, const Cell& cell) {
  RunConfig c = spec.base;
  if (!IsCentral(cell.method)) c.estimator = ParseEstimator(cell.method);
  if (std::isfinite(cell.epsilon)) c.epsilon = cell.epsilon;
  if (cell.parties > 0) c.parties = cell.parties;
  if (!IsCentral(cell.method)) c.k_prime = cell.k_prime;
  c.seed = cell.seed;
  c.seed_set = true;
  return c;
}

namespace {

CellResult RunCell(const ExperimentSpec& spec, const Cell& cell) {
  CellResult out;
  out.cell = cell;
  try {
    const RunConfig config = CellConfig(spec, cell);
    config.Validate();
    if (IsCentral(cell.method)) {
      const FullDataset data = LoadDataset(config);
      out.report = RunCentral(config, data, cell.method == kCentralDplsfMethod);
    } else {
      out.report = RunPipeline(config).report;
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

std::string KPrimeText(const std::optional<size_t>& k) {
  return k ? std::to_string(*k) : "auto";
}

std::string CsvEscape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

MatrixResult RunMatrix(const ExperimentSpec& spec, size_t workers) {
  const std::vector<Cell> cells = ExpandCells(spec);
  MatrixResult result;
  result.rows.resize(cells.size());
  if (workers == 0) {
    workers = std::max<size_t>(1, std::thread::hardware_concurrency());
  }
  workers = std::min(workers, cells.size());
  if (workers <= 1) {
    for (size_t i = 0; i < cells.size(); ++i) result.rows[i] = RunCell(spec, cells[i]);
    return result;
  }
  // Cells are pulled from a shared counter; results land in their own slot,
  // so output order never depends on scheduling.
  std::atomic<size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        internal::in_parallel_region = true;
        for (size_t i = next++; i < cells.size(); i = next++) {
          result.rows[i] = RunCell(spec, cells[i]);
        }
      });
    }
  }
  return result;
}

bool MatrixResult::AnyFailed() const {
  return std::any_of(rows.begin(), rows.end(),
                     [](const CellResult& r) { return !r.ok; });
}

std::string MatrixResult::RowsCsv() const {
  std::string s =
      "method,epsilon,parties,k_prime,seed,status,normalized_loss,vscore,"
      "rel_intersection_error,nhat,k_prime_used,encoding_bytes_party0,"
      "epsilon_spent,error\n";
  for (const CellResult& r : rows) {
    const RunReport& rep = r.report;
    s += r.cell.method + "," + Fmt(r.cell.epsilon) + "," +
         (r.cell.parties ? std::to_string(r.cell.parties) : "") + "," +
         KPrimeText(r.cell.k_prime) + "," + std::to_string(r.cell.seed) + "," +
         (r.ok ? "ok" : "failed") + ",";
    if (r.ok) {
      s += Fmt(rep.normalized_loss) + "," +
           (rep.vscore ? Fmt(*rep.vscore) : "") + "," +
           (rep.rel_intersection_error ? Fmt(*rep.rel_intersection_error) : "") +
           "," + Fmt(rep.nhat) + "," + std::to_string(rep.k_prime) + "," +
           (rep.encoding_bytes_per_party.empty()
                ? ""
                : std::to_string(rep.encoding_bytes_per_party[0])) +
           "," + Fmt(rep.epsilon_spent) + ",";
    } else {
      s += ",,,,,,,";
    }
    s += CsvEscape(r.error) + "\n";
  }
  return s;
}

double Median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double Mean(const std::vector<double>& values) {
  if (values.empty()) return std::nan("");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::string MatrixResult::SummaryCsv() const {
  struct Group {
    std::string key;
    size_t ok = 0, failed = 0;
    std::vector<double> loss, vscore, rel;
  };
  std::vector<Group> groups;
  std::map<std::string, size_t> index;
  for (const CellResult& r : rows) {
    const std::string key =
        r.cell.method + "," + Fmt(r.cell.epsilon) + "," +
        (r.cell.parties ? std::to_string(r.cell.parties) : "") + "," +
        KPrimeText(r.cell.k_prime);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      groups.emplace_back();
      groups.back().key = key;
    }
    Group& g = groups[it->second];
    if (!r.ok) {
      ++g.failed;
      continue;
    }
    ++g.ok;
    g.loss.push_back(r.report.normalized_loss);
    if (r.report.vscore) g.vscore.push_back(*r.report.vscore);
    if (r.report.rel_intersection_error) {
      g.rel.push_back(*r.report.rel_intersection_error);
    }
  }
  std::string s =
      "method,epsilon,parties,k_prime,runs_ok,runs_failed,median_loss,"
      "mean_loss,median_vscore,mean_vscore,median_rel_intersection_error,"
      "mean_rel_intersection_error\n";
  for (const Group& g : groups) {
    s += g.key + "," + std::to_string(g.ok) + "," + std::to_string(g.failed) +
         "," + Fmt(Median(g.loss)) + "," + Fmt(Mean(g.loss)) + "," +
         Fmt(Median(g.vscore)) + "," + Fmt(Mean(g.vscore)) + "," +
         Fmt(Median(g.rel)) + "," + Fmt(Mean(g.rel)) + "\n";
  }
  return s;
}

std::string MatrixResult::Json() const {
  OrderedJson j = OrderedJson::array();
  for (const CellResult& r : rows) {
    OrderedJson row;
    row["method"] = r.cell.method;
    row["epsilon"] = Fmt(r.cell.epsilon);
    row["parties"] = r.cell.parties;
    row["k_prime"] = KPrimeText(r.cell.k_prime);
    row["seed"] = r.cell.seed;
    row["ok"] = r.ok;
    row["error"] = r.error;
    row["report"] = r.ok ? OrderedJson::parse(r.report.ToJson())
                         : OrderedJson(nullptr);
    j.push_back(row);
  }
  return j.dump(2);
}

}  // namespace dpvfc
