#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "omniflow/align.hpp"
#include "omniflow/backend.hpp"
#include "omniflow/error.hpp"
#include "omniflow/io.hpp"
#include "omniflow/metrics.hpp"
#include "omniflow/pipeline.hpp"
#include "omniflow/synth.hpp"
#include "omniflow/vis.hpp"

namespace py = pybind11;
using namespace omniflow;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const F32& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw DimensionError("image must be (H, W) or (H, W, C)");
  const int h = int(a.shape(0)), w = int(a.shape(1)), c = a.ndim() == 3 ? int(a.shape(2)) : 1;
  return Image(w, h, c, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> from_image(const Image& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() > 1) shape.push_back(img.channels());
  py::array_t<float> out(shape);
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

FlowGrid to_grid(const F64& a) {
  if (a.ndim() != 3 || a.shape(2) != 2) throw DimensionError("flow must be (H, W, 2)");
  FlowGrid g(int(a.shape(1)), int(a.shape(0)));
  const double* p = a.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.du[i] = p[2 * i];
    g.dv[i] = p[2 * i + 1];
  }
  return g;
}

FlowField to_field(const F64& a) { return FlowField(to_grid(a)); }

py::array_t<double> from_grid(const FlowGrid& g) {
  py::array_t<double> out({py::ssize_t(g.height), py::ssize_t(g.width), py::ssize_t(2)});
  double* p = out.mutable_data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    p[2 * i] = g.du[i];
    p[2 * i + 1] = g.dv[i];
  }
  return out;
}

Rotation to_rotation(const F64& a) {
  if (a.ndim() != 2 || a.shape(0) != 3 || a.shape(1) != 3) throw DimensionError("rotation must be 3x3");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = a.at(r, c);
  return Rotation(m);
}

py::array_t<double> from_rotation(const Rotation& r) {
  py::array_t<double> out({3, 3});
  const Mat3 m = r.matrix();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.mutable_at(i, j) = m(i, j);
  return out;
}

PipelineConfig to_config(const std::map<std::string, std::string>& kv) {
  PipelineConfig cfg;
  for (const auto& [k, v] : kv) cfg.apply(k, v);
  return cfg;
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  for (const auto& [k, v] : to_key_values(m)) d[py::str(k)] = std::stod(v);
  return d;
}

SceneSpec to_scene(const std::string& kind, std::uint64_t seed, const std::string& texture, double room) {
  SceneSpec s;
  if (kind == "box") s.kind = SceneKind::BoxRoom;
  else if (kind == "sphere") s.kind = SceneKind::SphereTexture;
  else throw ConfigError("unknown scene kind '" + kind + "' (expected box or sphere)");
  if (texture == "checker") s.texture = TextureKind::Checker;
  else if (texture == "noise") s.texture = TextureKind::ValueNoise;
  else if (texture == "mixed") s.texture = TextureKind::Mixed;
  else throw ConfigError("unknown texture '" + texture + "'");
  s.seed = seed;
  s.room_half_size = room;
  return s;
}

CameraPose to_pose(const F64& position, const F64& rotation) {
  if (position.size() != 3) throw DimensionError("position must have 3 entries");
  return {Vec3(position.data()[0], position.data()[1], position.data()[2]), to_rotation(rotation)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Omnidirectional optical flow on equirectangular panoramas";
  m.attr("__version__") = OMNIFLOW_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

  m.def(
      "estimate",
      [](const F32& src, const F32& dst, const std::map<std::string, std::string>& config) {
        const ErpImage a(to_image(src)), b(to_image(dst));
        const PipelineConfig cfg = to_config(config);
        const PipelineResult r = [&] {
          py::gil_scoped_release nogil;
          return run(a, b, cfg);
        }();
        py::dict rep;
        rep["r_bar"] = from_rotation(r.report.r_bar);
        rep["r_hat"] = from_rotation(r.report.r_hat);
        rep["total_seconds"] = r.report.total_seconds;
        py::list stages;
        for (const auto& s : r.report.stages) {
          py::dict d;
          d["name"] = s.name;
          d["ran"] = s.ran;
          d["seconds"] = s.seconds;
          d["residual"] = s.residual;
          stages.append(d);
        }
        rep["stages"] = stages;
        rep["config"] = r.report.config;
        return py::make_tuple(from_grid(r.flow), rep);
      },
      py::arg("src"), py::arg("dst"), py::arg("config") = std::map<std::string, std::string>{},
      "Full pipeline on an ERP pair. Returns (flow (H, W, 2), report dict).");

  m.def(
      "erp_direct_flow", [](const F32& src, const F32& dst) {
        return from_grid(erp_direct_flow(ErpImage(to_image(src)), ErpImage(to_image(dst))));
      },
      py::arg("src"), py::arg("dst"));

  m.def(
      "perspective_flow", [](const F32& a, const F32& b) { return from_grid(estimate_flow(to_image(a), to_image(b))); },
      py::arg("a"), py::arg("b"), "Built-in solver on a perspective pair.");

  m.def(
      "estimate_rotation",
      [](const F64& flow, int stride) {
        const RotationEstimate e = estimate_rotation(to_field(flow), stride);
        return py::make_tuple(from_rotation(e.rotation), e.residual);
      },
      py::arg("flow"), py::arg("stride") = 4);
  m.def(
      "rotation_flow", [](const F64& r, int width) { return from_grid(rotation_flow(to_rotation(r), width, width / 2)); },
      py::arg("rotation"), py::arg("width"));
  m.def(
      "rotate_image", [](const F32& img, const F64& r) {
        return from_image(rotate_image(ErpImage(to_image(img)), to_rotation(r)).image());
      },
      py::arg("image"), py::arg("rotation"));
  m.def(
      "unrotate_flow",
      [](const F64& flow, const F64& r_bar, const F64& r_hat) {
        return from_grid(unrotate_flow(to_field(flow), to_rotation(r_bar), to_rotation(r_hat)));
      },
      py::arg("flow"), py::arg("r_bar"), py::arg("r_hat"));

  m.def(
      "sepe", [](const F64& e, const F64& g) { return sepe(to_field(e), to_field(g)); }, py::arg("est"),
      py::arg("gt"));
  m.def(
      "saae", [](const F64& e, const F64& g) { return saae(to_field(e), to_field(g)); }, py::arg("est"),
      py::arg("gt"));
  m.def(
      "srms", [](const F64& e, const F64& g) { return srms(to_field(e), to_field(g)); }, py::arg("est"),
      py::arg("gt"));
  m.def(
      "evaluate",
      [](const F64& e, const F64& g, double polar) { return metrics_dict(evaluate(to_field(e), to_field(g), polar)); },
      py::arg("est"), py::arg("gt"), py::arg("polar_fraction") = 0.15);

  m.def(
      "camera_path",
      [](const std::string& kind, int n, std::uint64_t seed, const std::string& scene_kind) {
        PathKind k;
        if (kind == "circle") k = PathKind::Circle;
        else if (kind == "line") k = PathKind::Line;
        else if (kind == "random") k = PathKind::Random;
        else throw ConfigError("unknown path '" + kind + "'");
        py::list out;
        for (const auto& p : camera_path(k, to_scene(scene_kind, seed, "mixed", 2.0), n, seed)) {
          py::array_t<double> pos(3);
          for (int i = 0; i < 3; ++i) pos.mutable_at(i) = p.position[i];
          out.append(py::make_tuple(pos, from_rotation(p.orientation)));
        }
        return out;
      },
      py::arg("kind"), py::arg("n"), py::arg("seed") = 1, py::arg("scene") = "box",
      "List of (position, rotation) poses.");
  m.def(
      "render",
      [](const std::string& kind, const F64& position, const F64& rotation, int width, std::uint64_t seed,
         const std::string& texture, double room) {
        return from_image(render_erp(to_scene(kind, seed, texture, room), to_pose(position, rotation), width).image());
      },
      py::arg("kind"), py::arg("position"), py::arg("rotation"), py::arg("width"), py::arg("seed") = 1,
      py::arg("texture") = "mixed", py::arg("room_half_size") = 2.0);
  m.def(
      "gt_flow",
      [](const std::string& kind, const F64& pos0, const F64& rot0, const F64& pos1, const F64& rot1, int width,
         double room) {
        return from_grid(
            gt_flow(to_scene(kind, 1, "mixed", room), to_pose(pos0, rot0), to_pose(pos1, rot1), width));
      },
      py::arg("kind"), py::arg("position0"), py::arg("rotation0"), py::arg("position1"), py::arg("rotation1"),
      py::arg("width"), py::arg("room_half_size") = 2.0);

  m.def(
      "read_flo", [](const std::string& path) { return from_grid(io::read_flo(path)); }, py::arg("path"));
  m.def(
      "write_flo", [](const std::string& path, const F64& flow) { io::write_flo(path, to_grid(flow)); },
      py::arg("path"), py::arg("flow"));
  m.def(
      "read_png", [](const std::string& path) { return from_image(io::read_png(path)); }, py::arg("path"));
  m.def(
      "write_png", [](const std::string& path, const F32& img) { io::write_png(path, to_image(img)); },
      py::arg("path"), py::arg("image"));
  m.def(
      "flow_to_color", [](const F64& flow, double max_mag) { return from_image(flow_to_color(to_grid(flow), max_mag)); },
      py::arg("flow"), py::arg("max_magnitude") = 0.0);
}
