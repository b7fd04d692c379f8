#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "decompal/cli.hpp"
#include "decompal/config_io.hpp"
#include "decompal/decomp.hpp"
#include "decompal/experiment.hpp"
#include "decompal/integral.hpp"
#include "decompal/metrics.hpp"
#include "decompal/records_io.hpp"

namespace py = pybind11;
using namespace decompal;

namespace {

using LabelArray = py::array_t<ClassId, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Prediction of one 2-D image from its label and max-probability planes.
PredictionField plane_prediction(const LabelArray& labels, const FloatArray* max_prob,
                                 int num_classes) {
  if (labels.ndim() != 2) throw ValidationError("labels must be a 2-D array");
  PredictionField p;
  p.shape = ImageShape::plane(static_cast<int>(labels.shape(0)), static_cast<int>(labels.shape(1)));
  p.num_classes = num_classes;
  p.pseudo_labels.assign(labels.data(), labels.data() + labels.size());
  if (max_prob) {
    if (max_prob->size() != labels.size()) throw ValidationError("max_prob does not match labels");
    p.max_prob.assign(max_prob->data(), max_prob->data() + max_prob->size());
  } else {
    p.max_prob.assign(p.pseudo_labels.size(), 1.0f);
  }
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Class-balanced region selection for active learning";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def(
      "run",
      [](const std::string& config_yaml, const std::vector<std::string>& overrides, int threads) {
        const auto config = parse_config(config_yaml, overrides);
        std::vector<RepeatResult> results;
        {
          py::gil_scoped_release release;
          results = run_experiment(config, threads);
        }
        std::ostringstream csv;
        write_cycles_csv(csv, results);
        return py::make_tuple(csv.str(), run_summary(config, results).dump());
      },
      py::arg("config_yaml"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("threads") = 1, "Runs an experiment; returns (cycles_csv, summary_json).");

  m.def(
      "class_confidence",
      [](const LabelArray& labels, const FloatArray& max_prob, int num_classes, double tau) {
        const auto p = plane_prediction(labels, &max_prob, num_classes);
        return class_confidence(std::span(&p, 1), tau).sigma;
      },
      py::arg("labels"), py::arg("max_prob"), py::arg("num_classes"), py::arg("tau") = kDefaultTau);

  m.def(
      "sampling_weights",
      [](const std::vector<double>& sigma) {
        ClassConfidence c;
        c.sigma = sigma;
        return sampling_weights(c).w;
      },
      py::arg("sigma"));

  m.def(
      "image_score",
      [](const LabelArray& labels, const std::vector<double>& weights, std::optional<double> cap) {
        const auto p = plane_prediction(labels, nullptr, static_cast<int>(weights.size()));
        return image_score(p, SamplingWeights{weights}, cap.value_or(default_frequency_cap(p.shape)));
      },
      py::arg("labels"), py::arg("weights"), py::arg("cap") = py::none());

  m.def(
      "decomp_select",
      [](const LabelArray& labels, const std::vector<double>& weights, int n_region, int side,
         std::uint64_t seed) {
        const auto p = plane_prediction(labels, nullptr, static_cast<int>(weights.size()));
        Rng rng(seed);
        py::list out;
        for (const auto& r : decomp_select(p, 0, SamplingWeights{weights}, n_region, side, {}, rng)) {
          const auto& s = r.sq();
          out.append(py::make_tuple(s.y, s.x, s.side));
        }
        return out;
      },
      py::arg("labels"), py::arg("weights"), py::arg("n_region"), py::arg("side"),
      py::arg("seed") = 0);

  m.def(
      "window_argmax",
      [](const DoubleArray& map, int side) -> py::object {
        if (map.ndim() != 2) throw ValidationError("map must be a 2-D array");
        const auto table = build_integral(std::span(map.data(), map.size()),
                                          static_cast<int>(map.shape(0)),
                                          static_cast<int>(map.shape(1)));
        const auto hit = window_argmax(table, side, {}, false);
        if (!hit) return py::none();
        return py::make_tuple(hit->y, hit->x, hit->value);
      },
      py::arg("map"), py::arg("side"));

  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) {
    return spearman(a, b);
  });

  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"decompal"};
        for (const auto& a : args) argv.push_back(a.c_str());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool; returns its exit code.");

}
