#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wavecor/checkpoint.hpp"
#include "wavecor/cli.hpp"
#include "wavecor/errors.hpp"
#include "wavecor/metrics.hpp"
#include "wavecor/morphology.hpp"
#include "wavecor/phantom.hpp"
#include "wavecor/trainer.hpp"
#include "wavecor/volume_io.hpp"
#include "wavecor/wavelet.hpp"

namespace py = pybind11;
using namespace wavecor;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  std::vector<Real> data(a.data(), a.data() + a.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data(), t.data() + t.numel(), out.mutable_data());
  return out;
}

Dims3 dims_of(const py::buffer_info& info) {
  if (info.ndim != 3) throw DimensionError("expected a 3-D array, got " + std::to_string(info.ndim) + " dims");
  return {info.shape[0], info.shape[1], info.shape[2]};
}

BinaryMask3 to_mask(const ByteArray& a, const Spacing& spacing) {
  const Dims3 dims = dims_of(a.request());
  return BinaryMask3(dims, std::vector<std::uint8_t>(a.data(), a.data() + a.size()), spacing);
}

py::array_t<std::uint8_t> mask_array(const BinaryMask3& m) {
  py::array_t<std::uint8_t> out({m.depth(), m.height(), m.width()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

py::array_t<float> volume_array(const Tensor& t) {
  return to_array(t.reshaped({t.dim(2), t.dim(3), t.dim(4)}));
}

py::dict metrics_dict(const SegMetrics& m) {
  py::dict d;
  d["dsc"] = m.dsc;
  d["sensitivity"] = m.sensitivity;
  d["precision"] = m.precision;
  d["hd95_mm"] = m.hd95_mm ? py::cast(*m.hd95_mm) : py::none();
  d["tp"] = m.tp;
  d["fp"] = m.fp;
  d["fn"] = m.fn;
  return d;
}

}  // namespace

PYBIND11_MODULE(_wavecor, m) {
  m.doc() = "3D coronary segmentation toolkit";
  m.attr("__version__") = kVersion;

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("dwt3", [](const FloatArray& x) { return to_array(dwt3(to_tensor(x))); }, py::arg("x"),
        "Haar decomposition of a (B, C, D, H, W) array into (B, C, 8, D/2, H/2, W/2).");
  m.def("iwt3", [](const FloatArray& s) { return to_array(iwt3(to_tensor(s))); }, py::arg("subbands"));

  m.def(
      "generate_phantom",
      [](std::uint64_t seed, std::array<Index, 3> dims, double noise_sigma) {
        PhantomSpec spec = resize_spec(PhantomSpec{}, dims);
        spec.seed = seed;
        spec.noise_sigma = noise_sigma;
        const VolumeRecord r = generate_phantom(spec);
        return py::make_tuple(volume_array(r.intensity), mask_array(r.vessel), mask_array(r.myo));
      },
      py::arg("seed") = 0, py::arg("dims") = std::array<Index, 3>{48, 48, 48}, py::arg("noise_sigma") = 0.08,
      "Returns (intensity, vessel, myocardium) arrays.");

  m.def(
      "metrics",
      [](const ByteArray& pred, const ByteArray& truth, Spacing spacing) {
        return metrics_dict(compute_metrics(to_mask(pred, spacing), to_mask(truth, spacing)));
      },
      py::arg("pred"), py::arg("truth"), py::arg("spacing") = Spacing{1.0, 1.0, 1.0});

  m.def(
      "build_prior",
      [](const ByteArray& myo, int radius) { return mask_array(build_prior(to_mask(myo, {1.0, 1.0, 1.0}), radius)); },
      py::arg("myocardium"), py::arg("radius") = 2);

  m.def(
      "read_volume",
      [](const std::string& path) -> py::tuple {
        const VolumeFile v = read_volume(path);
        const std::vector<py::ssize_t> shape{v.dims[0], v.dims[1], v.dims[2]};
        py::tuple spacing = py::make_tuple(v.spacing[0], v.spacing[1], v.spacing[2]);
        if (v.dtype == DType::kFloat32) {
          py::array_t<float> a(shape);
          std::copy(v.f32.begin(), v.f32.end(), a.mutable_data());
          return py::make_tuple(a, spacing);
        }
        py::array_t<std::uint8_t> a(shape);
        std::copy(v.u8.begin(), v.u8.end(), a.mutable_data());
        return py::make_tuple(a, spacing);
      },
      py::arg("path"), "Returns (array, spacing).");

  m.def(
      "write_volume",
      [](const std::string& path, const py::array& data, std::array<float, 3> spacing) {
        VolumeFile v;
        v.spacing = spacing;
        if (data.dtype().is(py::dtype::of<std::uint8_t>()) || data.dtype().is(py::dtype::of<bool>())) {
          const ByteArray a(data);
          v.dtype = DType::kUInt8;
          v.dims = dims_of(a.request());
          v.u8.assign(a.data(), a.data() + a.size());
        } else {
          const FloatArray a(data);
          v.dims = dims_of(a.request());
          v.f32.assign(a.data(), a.data() + a.size());
        }
        write_volume(path, v);
      },
      py::arg("path"), py::arg("data"), py::arg("spacing") = std::array<float, 3>{1.0f, 1.0f, 1.0f});

  m.def("variant_names", &variant_names);
  m.def(
      "parameter_count",
      [](const std::string& variant, Index base_width, int scales) {
        NetworkConfig cfg = make_variant(variant);
        cfg.base_width = base_width;
        cfg.scales = scales;
        return Network(cfg, 0).parameter_count();
      },
      py::arg("variant") = "Full", py::arg("base_width") = 8, py::arg("scales") = 4);

  m.def(
      "predict",
      [](const std::string& checkpoint, const FloatArray& volume, const ByteArray& myocardium,
         std::array<Index, 3> patch, Index overlap) {
        const LoadedModel model = load_checkpoint(checkpoint);
        const Dims3 dims = dims_of(volume.request());
        Tensor x = to_tensor(volume).reshaped({1, 1, dims[0], dims[1], dims[2]});
        const int radius = model.metadata.value("prior_radius", 2);
        const BinaryMask3 myo = to_mask(myocardium, {1.0, 1.0, 1.0});
        const Case c = prepare_case("input", x, BinaryMask3(dims), myo, radius);
        PatchConfig pc;
        pc.size = patch;
        pc.overlap = overlap;
        py::gil_scoped_release release;
        const BinaryMask3 out = predict_mask(*model.network, c, pc);
        py::gil_scoped_acquire acquire;
        return mask_array(out);
      },
      py::arg("checkpoint"), py::arg("volume"), py::arg("myocardium"),
      py::arg("patch") = std::array<Index, 3>{32, 32, 32}, py::arg("overlap") = 8);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command in-process; returns (exit_code, stdout, stderr).");
}
