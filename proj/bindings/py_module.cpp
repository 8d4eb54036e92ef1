// python bindings for the core operations: synthetic generation, progress
// labeling, metrics, and model inference. training runs through the CLI.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scotti/dataset.hpp"
#include "scotti/labeler.hpp"
#include "scotti/losses.hpp"
#include "scotti/model.hpp"

namespace py = pybind11;
using namespace scotti;

namespace {

py::array_t<float> to_array(const std::vector<float>& data, std::vector<py::ssize_t> shape) {
  py::array_t<float> arr(shape);
  std::copy(data.begin(), data.end(), arr.mutable_data());
  return arr;
}

std::vector<double> flatten_f64(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

PoseSequence pose_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3)
    throw DimensionError("pose array must have shape [n, joints, 3]");
  PoseSequence pose;
  pose.n = a.shape(0);
  pose.j = int(a.shape(1));
  pose.keypoints.resize(size_t(a.size()));
  for (py::ssize_t i = 0; i < a.size(); ++i) pose.keypoints[size_t(i)] = float(a.data()[i]);
  return pose;
}

class PyModel {
 public:
  explicit PyModel(ScottiModel model) : model_(std::move(model)) {}

  static PyModel init(const std::string& config_json, uint64_t seed) {
    return PyModel(ScottiModel::init(ScottiConfig::from_json_string(config_json), seed));
  }
  static PyModel load(const std::string& path) { return PyModel(load_checkpoint<float>(path)); }
  void save(const std::string& path) const { save_checkpoint(model_, path); }
  std::string config_json() const { return model_.config.to_json_string(); }
  int64_t param_count() const { return model_.param_count(); }

  py::dict forward(const py::array_t<float, py::array::c_style | py::array::forcecast>& windows) {
    const ScottiConfig& c = model_.config;
    Shape shape;
    for (py::ssize_t d = 0; d < windows.ndim(); ++d) shape.push_back(windows.shape(d));
    Tensor input = Tensor::from(shape, std::vector<float>(windows.data(), windows.data() + windows.size()));
    ForwardResult<float> out = model_.forward(nullptr, input);
    const py::ssize_t b = out.pose.dim(0);
    py::dict result;
    result["pose"] = to_array(out.pose.values(), {b, py::ssize_t(c.joints), 3});
    result["logits"] = to_array(out.logits.values(), {b, py::ssize_t(c.n_classes)});
    result["progress"] = to_array(out.progress.values(), {b});
    result["shared"] = to_array(out.shared.values(), {b, py::ssize_t(c.embed_dim)});
    return result;
  }

 private:
  ScottiModel model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tactile multi-task inference core";
  m.attr("__version__") = "0.1.0";
  m.attr("actions") = [] {
    py::list names;
    for (ActionClass a : all_actions()) names.append(action_name(a));
    return names;
  }();

  // exceptions map onto ValueError-style types
  py::register_exception<DimensionError>(m, "DimensionError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<FormatError>(m, "FormatError");

  m.def(
      "generate",
      [](const std::string& action, int n_cycles, int frames_per_cycle, uint64_t seed,
         int subject_index, const std::string& subject_id) {
        const SubjectStyle style = SubjectStyle::sample(seed, subject_index);
        auto gen = generate_synthetic(action_from_name(action), n_cycles, frames_per_cycle, style,
                                      Rng::mix(seed, uint64_t(subject_index) * 131), subject_id);
        py::dict out;
        out["tactile"] = to_array(gen.tactile.frames, {py::ssize_t(gen.tactile.n),
                                                       py::ssize_t(gen.tactile.h),
                                                       py::ssize_t(gen.tactile.w2)});
        out["pose"] =
            to_array(gen.pose.keypoints, {py::ssize_t(gen.pose.n), py::ssize_t(gen.pose.j), 3});
        py::array_t<double> phase(py::ssize_t(gen.analytic_progress.size()));
        std::copy(gen.analytic_progress.begin(), gen.analytic_progress.end(), phase.mutable_data());
        out["progress"] = phase;
        return out;
      },
      py::arg("action"), py::arg("n_cycles") = 5, py::arg("frames_per_cycle") = 16,
      py::arg("seed") = 0, py::arg("subject_index") = 0, py::arg("subject_id") = "S00",
      "deterministic synthetic tactile/pose sequence with analytic progress");

  m.def(
      "label_progress",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pose,
         const std::string& action) {
        ProgressLabels labels = label_sequence(pose_from_array(pose), action_from_name(action));
        const py::ssize_t n = py::ssize_t(labels.size());
        py::array_t<double> progress(n);
        py::array_t<bool> valid(n);
        py::array_t<int> cycle(n);
        for (py::ssize_t i = 0; i < n; ++i) {
          progress.mutable_data()[i] = labels.progress[size_t(i)];
          valid.mutable_data()[i] = labels.valid[size_t(i)] != 0;
          cycle.mutable_data()[i] = labels.cycle_index[size_t(i)];
        }
        py::dict out;
        out["progress"] = progress;
        out["valid"] = valid;
        out["cycle_index"] = cycle;
        return out;
      },
      py::arg("pose"), py::arg("action"),
      "cycle detection plus two-branch progress labels for a pose sequence");

  m.def(
      "mpjpe",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& target) {
        if (pred.ndim() != 2 || pred.shape(1) != 3) throw DimensionError("expected [joints, 3]");
        return mpjpe(flatten_f64(pred), flatten_f64(target), int(pred.shape(0)));
      },
      py::arg("pred"), py::arg("target"));

  m.def(
      "mpjae_deg",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& target) {
        if (pred.ndim() != 2 || pred.shape(1) != 3) throw DimensionError("expected [joints, 3]");
        return mpjae_deg(flatten_f64(pred), flatten_f64(target), int(pred.shape(0)));
      },
      py::arg("pred"), py::arg("target"));

  m.def(
      "app",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& target, int grid) {
        PMCurve curve = app_curve(flatten_f64(pred), flatten_f64(target), grid);
        py::dict out;
        out["app"] = curve.app;
        py::array_t<double> margins(py::ssize_t(curve.margins.size()));
        py::array_t<double> precision(py::ssize_t(curve.precision.size()));
        std::copy(curve.margins.begin(), curve.margins.end(), margins.mutable_data());
        std::copy(curve.precision.begin(), curve.precision.end(), precision.mutable_data());
        out["margins"] = margins;
        out["precision"] = precision;
        return out;
      },
      py::arg("pred"), py::arg("target"), py::arg("grid") = 101,
      "precision-margin curve and its area");

  m.def("default_config", [] { return ScottiConfig{}.to_json_string(); });


  py::class_<PyModel>(m, "Model")
      .def_static("init", &PyModel::init, py::arg("config_json"), py::arg("seed") = 0)
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("save", &PyModel::save, py::arg("path"))
      .def("forward", &PyModel::forward, py::arg("windows"),
           "windows: [T,H,2W] or [B,T,H,2W] float array")
      .def_property_readonly("config_json", &PyModel::config_json)
      .def_property_readonly("param_count", &PyModel::param_count);
}
