// Copyright 2026 The debias-bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Arrays cross the boundary as float64 numpy arrays and
// genders as "F" / "M" strings (None for an unknown gender).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "debias/error.hpp"
#include "debias/gradcheck.hpp"
#include "debias/harness.hpp"
#include "debias/metrics.hpp"
#include "debias/trainers.hpp"

namespace py = pybind11;
using namespace debias;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Bits = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  Tensor t(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), t.values().begin());
  return t;
}

Array to_array(const Tensor& t) {
  Array a({t.rows(), t.cols()});
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

BinaryMatrix to_bits(const Bits& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  BinaryMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = a.at(r, c) != 0;
  return m;
}

Bits from_bits(const BinaryMatrix& m) {
  Bits a({m.rows(), m.cols()});
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) a.mutable_at(r, c) = m(r, c);
  return a;
}

std::vector<Gender> to_genders(const std::vector<std::string>& g) {
  std::vector<Gender> out;
  out.reserve(g.size());
  for (const auto& s : g) out.push_back(parse_gender(s));
  return out;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["f1"] = r.f1;
  d["acc"] = r.acc;
  d["tpr_gap"] = r.tpr_gap;
  d["fpr_gap"] = r.fpr_gap;
  d["f1_gap"] = r.f1_gap;
  d["dp_gap"] = r.dp_gap;
  d["f1_per_class"] = r.f1_per_class;
  d["tpr_gap_per_class"] = r.tpr_gap_per_class;
  d["fpr_gap_per_class"] = r.fpr_gap_per_class;
  d["f1_gap_per_class"] = r.f1_gap_per_class;
  d["dp_gap_per_class"] = r.dp_gap_per_class;
  return d;
}

py::dict row_dict(const ReportRow& r) {
  py::dict d;
  d["method"] = std::string(method_name(r.method));
  d["ratio"] = r.ratio;
  d["seed"] = r.seed;
  if (r.error) {
    d["error"] = *r.error;
    return d;
  }
  d["f1"] = r.f1;
  d["acc"] = r.acc;
  d["tpr_gap"] = r.tpr_gap;
  d["fpr_gap"] = r.fpr_gap;
  d["f1_gap"] = r.f1_gap;
  d["dp_gap"] = r.dp_gap;
  return d;
}

// Accepts a JSON string or a Python mapping.
std::string as_json(const py::object& o) {
  if (py::isinstance<py::str>(o)) return o.cast<std::string>();
  return py::module_::import("json").attr("dumps")(o).cast<std::string>();
}

// Training settings go through the experiment parser so that keys and
// values are validated exactly as in config files.
ExperimentSpec settings(const py::object& train, const py::object& hyperparams) {
  py::dict j;
  if (!train.is_none()) j["train"] = train;
  if (!hyperparams.is_none()) j["hyperparams"] = hyperparams;
  return parse_experiment_spec(as_json(j));
}

struct Trained {
  TrainResult result;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bias-mitigation benchmark for multi-label emotion classifiers";

  static py::exception<Error> error(m, "DebiasError", PyExc_RuntimeError);
  static py::exception<InputError> input_error(m, "InputError", error.ptr());
  static py::exception<AccessError> access_error(m, "AccessError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      PyErr_SetString(input_error.ptr(), e.what());
    } catch (const AccessError& e) {
      PyErr_SetString(access_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  // ---- metrics -----------------------------------------------------------

  m.def("binarize", [](const Array& probs) { return from_bits(binarize(to_tensor(probs))); },
        py::arg("probs"), "1 where a probability exceeds 1/C");
  m.def("hamming_acc",
        [](const Bits& pred, const Bits& truth) { return hamming_acc(to_bits(pred), to_bits(truth)); },
        py::arg("pred"), py::arg("truth"));
  m.def("macro_f1",
        [](const Bits& pred, const Bits& truth) { return macro_f1(to_bits(pred), to_bits(truth)); },
        py::arg("pred"), py::arg("truth"));
  m.def(
      "eo_gaps",
      [](const Bits& pred, const Bits& truth, const std::vector<std::string>& genders) {
        const auto g = to_genders(genders);
        const EoGaps e = eo_gaps(to_bits(pred), to_bits(truth), g);
        py::dict d;
        d["tpr_gap"] = e.tpr_gap;
        d["fpr_gap"] = e.fpr_gap;
        d["f1_gap"] = e.f1_gap;
        return d;
      },
      py::arg("pred"), py::arg("truth"), py::arg("genders"));
  m.def(
      "dp_gap",
      [](const Bits& pred, const std::vector<std::string>& genders) {
        const auto g = to_genders(genders);
        return dp_gap(to_bits(pred), g);
      },
      py::arg("pred"), py::arg("genders"));
  m.def(
      "evaluate",
      [](const Array& probs, const Array& labels, const std::vector<std::string>& genders) {
        const auto g = to_genders(genders);
        return report_dict(evaluate(to_tensor(probs), to_tensor(labels), g));
      },
      py::arg("probs"), py::arg("labels"), py::arg("genders"));

  // ---- data ----------------------------------------------------------------

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("categories", &Dataset::categories)
      .def_property_readonly("layers", &Dataset::layers)
      .def_property_readonly("dims", &Dataset::dims)
      .def("__len__", &Dataset::size)
      .def("count", [](const Dataset& ds, const std::string& s) { return ds.count(parse_split(s)); },
           py::arg("split"))
      .def(
          "ids",
          [](const Dataset& ds, const std::string& s) {
            std::vector<std::string> out;
            for (auto i : ds.indices(parse_split(s))) out.push_back(ds[i].id);
            return out;
          },
          py::arg("split"))
      .def(
          "features",
          [](const Dataset& ds, const std::string& s) {
            const auto rows = ds.indices(parse_split(s));
            const std::size_t w = ds.layers() * ds.dims();
            Array a({rows.size(), w});
            for (std::size_t i = 0; i < rows.size(); ++i)
              for (std::size_t k = 0; k < w; ++k) a.mutable_at(i, k) = ds[rows[i]].features[k];
            return a;
          },
          py::arg("split"), "rows x (layers * dims), layer-major")
      .def(
          "labels",
          [](const Dataset& ds, const std::string& s) {
            const auto rows = ds.indices(parse_split(s));
            Array a({rows.size(), ds.num_categories()});
            for (std::size_t i = 0; i < rows.size(); ++i)
              for (std::size_t c = 0; c < ds.num_categories(); ++c) a.mutable_at(i, c) = ds[rows[i]].label[c];
            return a;
          },
          py::arg("split"))
      .def(
          "genders",
          [](const Dataset& ds, const std::string& s) {
            std::vector<std::optional<std::string>> out;
            for (auto i : ds.indices(parse_split(s))) {
              const auto& g = ds[i].gender;
              out.push_back(g ? std::optional<std::string>(std::string(to_string(*g))) : std::nullopt);
            }
            return out;
          },
          py::arg("split"))
      .def(
          "dominant_counts",
          [](const Dataset& ds, const std::string& s) {
            std::vector<std::pair<std::size_t, std::size_t>> out;
            for (const auto& c : ds.dominant_counts(parse_split(s))) out.emplace_back(c[0], c[1]);
            return out;
          },
          py::arg("split"), "(F, M) counts per dominant category")
      .def(
          "without_gender",
          [](const Dataset& ds, const std::string& s) { return ds.without_gender(parse_split(s)); },
          py::arg("split"));

  m.def(
      "synth_generate",
      [](std::size_t n, std::size_t classes, std::size_t dims, std::size_t layers, int ratio,
         double bias_strength, double label_noise, std::uint64_t seed) {
        SynthParams p;
        p.n = n;
        p.classes = classes;
        p.dims = dims;
        p.layers = layers;
        p.spec.ratio = ratio;
        p.bias_strength = bias_strength;
        p.label_noise = label_noise;
        return synth_generate(p, seed);
      },
      py::arg("n") = 4000, py::arg("classes") = 6, py::arg("dims") = 32, py::arg("layers") = 3,
      py::arg("ratio") = 1, py::arg("bias_strength") = 0.8, py::arg("label_noise") = 0.0,
      py::arg("seed") = 0);
  m.def("load_manifest",
        [](const std::string& manifest, const std::string& features) { return load_manifest(manifest, features); },
        py::arg("manifest"), py::arg("features"));
  m.def("save_manifest",
        [](const Dataset& ds, const std::string& manifest, const std::string& features) {
          save_manifest(ds, manifest, features);
        },
        py::arg("dataset"), py::arg("manifest"), py::arg("features"));
  m.def("dominant_filter", &dominant_filter, py::arg("dataset"));
  m.def(
      "amplify_bias",
      [](const Dataset& ds, int ratio, const std::string& directions, std::uint64_t seed) {
        return amplify_bias(ds, ratio_spec(directions, ratio, ds.num_categories()), seed);
      },
      py::arg("dataset"), py::arg("ratio"), py::arg("directions") = "alternating", py::arg("seed") = 0);
  m.def("downsample_balance", &downsample_balance, py::arg("dataset"), py::arg("seed") = 0);
  m.def(
      "compute_reweights",
      [](const Dataset& ds, const std::string& mode) {
        if (mode != "gender_category" && mode != "gender") {
          throw ConfigError("mode must be 'gender_category' or 'gender'");
        }
        return compute_reweights(ds, mode == "gender" ? ReweightMode::GenderOnly : ReweightMode::GenderCategory);
      },
      py::arg("dataset"), py::arg("mode") = "gender_category");

  // ---- training --------------------------------------------------------------

  m.attr("METHODS") = [] {
    std::vector<std::string> names;
    for (MethodKind k : kAllMethods) names.emplace_back(method_name(k));
    return names;
  }();
  m.def("uses_bias_supervision",
        [](const std::string& method) { return uses_bias_supervision(parse_method(method)); },
        py::arg("method"));

  py::class_<Trained>(m, "TrainResult")
      .def_property_readonly("best_epoch", [](const Trained& t) { return t.result.best_epoch; })
      .def_property_readonly("gender_reads", [](const Trained& t) { return t.result.gender_reads; })
      .def_property_readonly("log_csv", [](const Trained& t) { return training_log_csv(t.result.log); })
      .def(
          "predict",
          [](const Trained& t, const Dataset& ds, const std::string& s) {
            return to_array(t.result.model.predict(ds, ds.indices(parse_split(s))));
          },
          py::arg("dataset"), py::arg("split") = "test")
      .def(
          "evaluate",
          [](const Trained& t, const Dataset& ds, const std::string& s) {
            return report_dict(evaluate_split(t.result.model, ds, parse_split(s)));
          },
          py::arg("dataset"), py::arg("split") = "test")
      .def("checkpoint", [](const Trained& t) {
        const auto b = checkpoint_bytes(t.result.model);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      });

  m.def(
      "train",
      [](const Dataset& ds, const std::string& method, std::uint64_t seed, const py::object& train_cfg,
         const py::object& hyperparams) {
        const ExperimentSpec s = settings(train_cfg, hyperparams);
        MethodSpec ms{parse_method(method), s.hp};
        TrainConfig cfg = s.train;
        cfg.seed = seed;
        py::gil_scoped_release release;
        return Trained{debias::train(ms, cfg, ds)};
      },
      py::arg("dataset"), py::arg("method"), py::arg("seed") = 0, py::arg("train") = py::none(),
      py::arg("hyperparams") = py::none(),
      "Trains one method; `train` and `hyperparams` take the keys of the config file sections");

  // ---- sweeps ------------------------------------------------------------------

  m.def(
      "run_experiment",
      [](const py::object& config) {
        const ExperimentSpec spec = parse_experiment_spec(as_json(config));
        std::vector<ReportRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(spec);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config"), "Runs a sweep from a config (JSON text or dict) and returns one dict per run");
  m.def(
      "report",
      [](const std::string& dir, const std::string& format) {
        return emit_report(load_rows(dir), parse_report_format(format));
      },
      py::arg("directory"), py::arg("format") = "md");

  m.def(
      "gradcheck",
      [](std::uint64_t seed) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& list : {check_loss_gradients(seed), check_step_gradients(seed)})
          for (const auto& r : list) out.emplace_back(r.name, r.max_rel_error);
        return out;
      },
      py::arg("seed") = 7, "Max relative finite-difference error per loss and method");
  m.attr("GRADCHECK_TOLERANCE") = kGradCheckTolerance;
}
