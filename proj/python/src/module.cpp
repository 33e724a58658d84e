#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "dpg/cli/commands.hpp"
#include "dpg/sardata/chip.hpp"
#include "dpg/tensor/errors.hpp"

namespace py = pybind11;
using namespace dpg;
using dpg::cli::RunConfig;

namespace {

RunConfig to_run_config(const py::object& config) {
  if (config.is_none()) return RunConfig{};
  const auto text = py::module_::import("json").attr("dumps")(config).cast<std::string>();
  return cli::parse_run_config(text);
}

py::object from_json_text(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

py::array_t<float> to_array(const sar::RealImage& img) {
  py::array_t<float> out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

std::vector<sar::Complex> plane(const py::array_t<std::complex<float>, py::array::c_style |
                                                                        py::array::forcecast>& a,
                                std::size_t h, std::size_t w, const char* name) {
  if (a.ndim() != 2 || std::size_t(a.shape(0)) != h || std::size_t(a.shape(1)) != w)
    throw ShapeError(std::string(name) + " must be a 2-D array matching the other plane");
  return {a.data(), a.data() + a.size()};
}

py::dict eval_dict(const EvalResult& r) {
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["percent"] = format_percent(r.accuracy);
  d["class_names"] = r.matrix.class_names();
  std::vector<std::vector<std::uint64_t>> counts;
  const auto k = r.matrix.class_names().size();
  for (std::size_t i = 0; i < k; ++i) {
    counts.emplace_back();
    for (std::size_t j = 0; j < k; ++j) counts.back().push_back(r.matrix.at(i, j));
  }
  d["counts"] = counts;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dpgnet, m) {
  m.doc() = "Dual-polarization SAR ship classifier";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  m.def("default_config", [] { return from_json_text(cli::dump_run_config(RunConfig{})); });
  m.def(
      "normalize_config",
      [](const py::object& config) {
        return from_json_text(cli::dump_run_config(to_run_config(config)));
      },
      py::arg("config"));

  m.def(
      "param_count", [](const py::object& config) { return cli::cmd_params(to_run_config(config)); },
      py::arg("config") = py::none());

  m.def(
      "parameter_budget",
      [](const py::object& config) {
        std::vector<std::pair<std::string, std::size_t>> out;
        for (const auto& l : parameter_budget(to_run_config(config).model))
          out.emplace_back(l.name, l.count);
        return out;
      },
      py::arg("config") = py::none());

  m.def(
      "guided_triple",
      [](const py::array_t<std::complex<float>, py::array::c_style | py::array::forcecast>& svh,
         const py::array_t<std::complex<float>, py::array::c_style | py::array::forcecast>& svv,
         std::size_t size) {
        if (svv.ndim() != 2) throw ShapeError("svv must be a 2-D array");
        sar::ComplexChipPair pair;
        pair.id = "array";
        pair.height = svv.shape(0);
        pair.width = svv.shape(1);
        pair.svv = plane(svv, pair.height, pair.width, "svv");
        pair.svh = plane(svh, pair.height, pair.width, "svh");
        pair.validate();
        const auto g = sar::make_guided_triple(pair, size);
        return py::make_tuple(to_array(g.i1), to_array(g.i2), to_array(g.i3));
      },
      py::arg("svh"), py::arg("svv"), py::arg("size"));

  m.def(
      "synth",
      [](const std::filesystem::path& out, int classes, std::size_t per_class,
         const py::object& config) {
        const auto s = cli::cmd_synth(classes, per_class, to_run_config(config), out);
        py::dict d;
        d["chips"] = s.chips;
        d["train"] = s.train;
        d["test"] = s.test;
        return d;
      },
      py::arg("out"), py::arg("classes") = 6, py::arg("per_class") = 8,
      py::arg("config") = py::none());

  m.def(
      "train",
      [](const std::filesystem::path& manifest, const std::filesystem::path& out,
         const py::object& config, const std::string& precision, std::size_t workers) {
        const auto cfg = to_run_config(config);
        const auto p = cli::parse_precision(precision);
        cli::TrainSummary s;
        {
          py::gil_scoped_release release;
          s = cli::cmd_train(manifest, cfg, out, p, workers);
        }
        py::list losses;
        for (const auto& st : s.log.steps) losses.append(st.loss);
        py::dict d;
        d["steps"] = s.log.steps.size();
        d["losses"] = losses;
        d["train_accuracy"] = s.train_accuracy;
        return d;
      },
      py::arg("manifest"), py::arg("out"), py::arg("config") = py::none(),
      py::arg("precision") = "f32", py::arg("workers") = 1);

  m.def(
      "evaluate",
      [](const std::optional<std::filesystem::path>& manifest, const std::filesystem::path& out,
         const std::optional<std::filesystem::path>& weights,
         const std::optional<std::filesystem::path>& predictions,
         const std::optional<std::filesystem::path>& classes, bool stub_perfect,
         const py::object& config, const std::string& precision, std::size_t workers) {
        cli::EvalSource src;
        src.weights = weights;
        src.predictions = predictions;
        src.classes = classes;
        src.stub_perfect = stub_perfect;
        const auto cfg = to_run_config(config);
        const auto p = cli::parse_precision(precision);
        std::optional<EvalResult> r;
        {
          py::gil_scoped_release release;
          r = cli::cmd_eval(manifest, src, cfg, out, p, workers);
        }
        return eval_dict(*r);
      },
      py::arg("manifest") = py::none(), py::arg("out") = "out", py::arg("weights") = py::none(),
      py::arg("predictions") = py::none(), py::arg("classes") = py::none(),
      py::arg("stub_perfect") = false, py::arg("config") = py::none(),
      py::arg("precision") = "f32", py::arg("workers") = 1);

  m.def(
      "ablate",
      [](const std::string& axis, const std::filesystem::path& out, const py::object& config,
         const std::optional<std::filesystem::path>& train_manifest,
         const std::optional<std::filesystem::path>& test_manifest, std::size_t workers) {
        const auto cfg = to_run_config(config);
        py::gil_scoped_release release;
        return cli::cmd_ablate(axis, cfg, {train_manifest, test_manifest}, out, workers);
      },
      py::arg("axis"), py::arg("out") = "out", py::arg("config") = py::none(),
      py::arg("train_manifest") = py::none(), py::arg("test_manifest") = py::none(),
      py::arg("workers") = 1);

  m.attr("ablation_axes") = ablation_axis_names();
}
