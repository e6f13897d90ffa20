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

// Python bindings for the dpvfc core. Matrices cross the boundary as 2-D
// float64 numpy arrays; sketch sets cross as their wire-format bytes.

#include <cstring>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpvfc/baselines.h"
#include "dpvfc/dataset.h"
#include "dpvfc/estimators.h"
#include "dpvfc/experiment.h"
#include "dpvfc/geometric_hash.h"
#include "dpvfc/kmeans.h"
#include "dpvfc/metrics.h"
#include "dpvfc/privacy.h"
#include "dpvfc/protocol.h"
#include "dpvfc/run_config.h"
#include "dpvfc/sketch.h"
#include "dpvfc/status.h"
#include "dpvfc/vscore.h"
#include "dpvfc/weight_grid.h"

namespace py = pybind11;

namespace dpvfc {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix ToMatrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  std::memcpy(m.data.data(), a.data(), m.data.size() * sizeof(double));
  return m;
}

Array FromMatrix(const Matrix& m) {
  Array a({m.rows, m.cols});
  std::memcpy(a.mutable_data(), m.data.data(), m.data.size() * sizeof(double));
  return a;
}

py::object Json(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

// Applies a dict of config keys; values are passed through str().
RunConfig MakeConfig(const py::dict& options) {
  RunConfig c;
  for (auto [key, value] : options) {
    std::string v;
    if (py::isinstance<py::bool_>(value)) {
      v = value.cast<bool>() ? "true" : "false";
    } else {
      v = py::str(value).cast<std::string>();
    }
    c.Set(key.cast<std::string>(), v);
  }
  return c;
}

py::dict GridDict(const WeightGrid& g) {
  py::dict d;
  d["dims"] = g.dims;
  d["total"] = g.total;
  d["weights"] = g.weights;
  return d;
}

SketchParams MakeParams(size_t M, double gamma, std::optional<double> eps2,
                        double delta2) {
  return eps2 ? SketchParams::Private(M, gamma, *eps2, delta2)
              : SketchParams::NonPrivate(M, gamma);
}

std::vector<SketchSet> LoadSketches(const std::vector<py::bytes>& blobs) {
  std::vector<SketchSet> out;
  for (const auto& b : blobs) {
    const std::string s = b;
    out.push_back(DeserializeSketchSet(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(s.data()), s.size())));
  }
  return out;
}

}  // namespace
}  // namespace dpvfc

PYBIND11_MODULE(_core, m) {
  using namespace dpvfc;
  m.doc() = "Differentially private vertical federated k-means";

  // Owned by the module for the life of the interpreter.
  static PyObject* error_type = PyErr_NewException(
      "dpvfc._core.DpvfcError", PyExc_RuntimeError, nullptr);
  m.attr("DpvfcError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string code(ErrorCodeName(e.code()));
      py::object exc = py::handle(error_type)(std::string(e.what()));
      exc.attr("code") = code;
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def(
      "gen_mixed_gaussian",
      [](size_t n, size_t dims, size_t k, double spread, uint64_t seed) {
        const FullDataset d = GenMixedGaussian(n, dims, k, spread, Seed{seed});
        py::dict out;
        out["ids"] = d.ids;
        out["data"] = FromMatrix(d.matrix);
        out["labels"] = d.labels;
        return out;
      },
      py::arg("n") = 20000, py::arg("m") = 8, py::arg("k") = 5,
      py::arg("spread") = kDefaultSpread, py::arg("seed") = 0,
      "Synthetic Mixed Gaussian data: dict with ids, data and labels.");

  m.def(
      "run",
      [](const py::dict& config) {
        const PipelineResult r = RunPipeline(MakeConfig(config));
        py::dict out = Json(r.report.ToJson());
        out["centers"] = FromMatrix(r.centers);
        out["grid"] = GridDict(r.protocol.grid);
        return out;
      },
      py::arg("config"),
      "One end-to-end federated run. `config` maps RunConfig keys to values "
      "and must contain 'seed'. Returns the report with centers and grid.");

  m.def(
      "run_matrix",
      [](const std::string& spec, const std::string& preset,
         size_t seed_count, size_t workers) {
        const ExperimentSpec s = preset.empty()
                                     ? ExperimentSpec::Parse(spec)
                                     : ExperimentSpec::Preset(preset, seed_count);
        const MatrixResult r = RunMatrix(s, workers);
        py::dict out;
        out["rows_csv"] = r.RowsCsv();
        out["summary_csv"] = r.SummaryCsv();
        out["results"] = Json(r.Json());
        out["any_failed"] = r.AnyFailed();
        return out;
      },
      py::arg("spec") = "", py::arg("preset") = "", py::arg("seed_count") = 10,
      py::arg("workers") = 0, "Runs an experiment grid given as spec text.");

  m.def(
      "normalized_loss",
      [](const Array& data, const Array& centers) {
        return NormalizedLoss(ToMatrix(data), ToMatrix(centers));
      },
      py::arg("data"), py::arg("centers"));

  m.def(
      "v_score",
      [](const std::vector<uint32_t>& truth, const std::vector<uint32_t>& pred) {
        return VScore(truth, pred);
      },
      py::arg("labels_true"), py::arg("labels_pred"));

  m.def(
      "assign_nearest",
      [](const Array& points, const Array& centers) {
        return AssignNearest(ToMatrix(points), ToMatrix(centers)).labels;
      },
      py::arg("points"), py::arg("centers"));

  m.def(
      "weighted_kmeans",
      [](const Array& points, std::optional<std::vector<double>> weights,
         size_t k, uint64_t seed) {
        WeightedPoints wp;
        wp.points = ToMatrix(points);
        wp.weights = weights ? *weights
                             : std::vector<double>(wp.points.rows, 1.0);
        const KMeansResult r = WeightedKMeans(wp, k, Seed{seed});
        return py::make_tuple(FromMatrix(r.centers), r.loss);
      },
      py::arg("points"), py::arg("weights") = py::none(), py::arg("k"),
      py::arg("seed") = 0, "Returns (centers, weighted loss).");

  m.def(
      "split_budget",
      [](double epsilon, double delta, int parties, double b) {
        const BudgetSplit s = SplitBudget({epsilon, delta}, parties, b);
        py::dict out;
        out["eps0"] = s.eps0;
        out["eps1"] = s.eps1;
        out["eps2"] = s.eps2;
        out["delta2"] = s.delta2;
        return out;
      },
      py::arg("epsilon"), py::arg("delta"), py::arg("parties"),
      py::arg("b") = kDefaultBudgetFraction);

  m.def(
      "estimate_n",
      [](size_t n, double eps0, uint64_t seed) {
        return EstimateN(n, eps0, Seed{seed});
      },
      py::arg("n"), py::arg("eps0"), py::arg("seed"));

  m.def("calibrate_xi", &CalibrateXi, py::arg("gamma"), py::arg("M"));

  m.def(
      "harmonic_decode",
      [](const std::vector<uint16_t>& column, double gamma) {
        return HarmonicDecode(column, gamma);
      },
      py::arg("column"), py::arg("gamma") = kDefaultGamma);

  m.def(
      "sketch_partition",
      [](const std::vector<std::string>& ids,
         const std::vector<uint32_t>& labels, size_t k, size_t M, double gamma,
         std::optional<double> eps2, double delta2, uint64_t key_seed,
         uint64_t seed, int party) {
        if (ids.size() != labels.size()) {
          throw Error(ErrorCode::kLengthMismatch, "ids and labels differ");
        }
        std::vector<uint64_t> fps;
        fps.reserve(ids.size());
        for (const auto& id : ids) fps.push_back(IdFingerprint(id));
        Partition p;
        p.k = k;
        p.labels = labels;
        const SketchParams params = MakeParams(M, gamma, eps2, delta2);
        const SketchSet s = SketchPartition(
            fps, p, params, DeriveKeys(Seed{key_seed}, M), Seed{seed}, party);
        const auto bytes = SerializeSketchSet(s);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()),
                         bytes.size());
      },
      py::arg("ids"), py::arg("labels"), py::arg("k"), py::arg("M") = 4096,
      py::arg("gamma") = kDefaultGamma, py::arg("eps2") = py::none(),
      py::arg("delta2") = 0.0, py::arg("key_seed") = 0, py::arg("seed") = 0,
      py::arg("party") = 0,
      "Partition sketch in wire format. Parties must share key_seed; omit "
      "eps2 for a non-private sketch.");

  m.def(
      "single_party_counts",
      [](const py::bytes& blob) {
        return SinglePartyCounts(LoadSketches({blob})[0]);
      },
      py::arg("sketch"));

  m.def(
      "basic_est",
      [](double nhat, const std::vector<py::bytes>& blobs) {
        return GridDict(BasicEst(nhat, LoadSketches(blobs)));
      },
      py::arg("nhat"), py::arg("sketches"));

  m.def(
      "two_phase_est",
      [](double nhat, const std::vector<py::bytes>& blobs) {
        RefinementStats stats;
        py::dict out =
            GridDict(TwoPhaseEst(nhat, LoadSketches(blobs), {}, &stats));
        out["sweeps"] = stats.sweeps_run;
        out["max_residual"] = stats.max_residual;
        out["converged"] = stats.converged;
        return out;
      },
      py::arg("nhat"), py::arg("sketches"));

  m.def(
      "truth_grid",
      [](const std::vector<std::vector<uint32_t>>& labels,
         const std::vector<size_t>& dims) {
        return GridDict(TruthGrid(labels, dims));
      },
      py::arg("labels"), py::arg("dims"));

  m.def(
      "rel_intersection_error",
      [](const py::dict& estimated, const py::dict& truth) {
        auto load = [](const py::dict& d) {
          WeightGrid g;
          g.dims = d["dims"].cast<std::vector<size_t>>();
          g.total = d["total"].cast<double>();
          g.weights = d["weights"].cast<std::vector<double>>();
          return g;
        };
        return RelIntersectionError(load(estimated), load(truth));
      },
      py::arg("estimated"), py::arg("truth"));

  m.def(
      "auto_k_prime",
      [](double nhat, size_t k, size_t parties, double eps2, double delta2,
         size_t M, double rho, size_t k_max) {
        SigmaModel model;
        model.rho = rho;
        model.M = M;
        model.eps2 = eps2;
        model.delta = delta2;
        model.parties = parties;
        return AutoKPrime(nhat, k, parties, model, k_max);
      },
      py::arg("nhat"), py::arg("k"), py::arg("parties"), py::arg("eps2"),
      py::arg("delta2"), py::arg("M") = 4096, py::arg("rho") = kDefaultRho,
      py::arg("k_max") = 16);

  m.attr("DEFAULT_SPREAD") = kDefaultSpread;
  m.attr("__version__") = "0.1.0";
}
