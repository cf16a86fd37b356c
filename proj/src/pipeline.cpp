#include "omniflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "omniflow/error.hpp"
#include "omniflow/stitch.hpp"

namespace omniflow {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(padding_cube >= 0.0 && padding_cube <= 1.0) || !(padding_ico >= 0.0 && padding_ico <= 1.0)) {
    throw ConfigError("paddings must lie in [0, 1]");
  }
  if ((res_cube != 0 && res_cube < 16) || (res_ico != 0 && res_ico < 16)) {
    throw ConfigError("tangent resolutions must be 0 (default) or >= 16");
  }
  if (rotation_stride < 1) throw ConfigError("rotation stride must be >= 1");
  backend.validate();
  if (external && external->cmd_template.empty()) throw ConfigError("external backend command is empty");
}

std::string PipelineConfig::stages() const {
  std::string s;
  const auto add = [&](bool on, const char* n) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += n;
  };
  add(erp_align, "erp");
  add(cube_align, "cube");
  add(ico_flow, "ico");
  return s;
}

void PipelineConfig::set_stages(const std::string& csv) {
  bool erp = false, cube = false, ico = false;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "erp") erp = true;
    else if (item == "cube") cube = true;
    else if (item == "ico") ico = true;
    else if (!item.empty()) throw ConfigError("unknown stage '" + item + "' (expected erp, cube, ico)");
  }
  if (!erp && !cube && !ico) throw ConfigError("stage list is empty");
  erp_align = erp;
  cube_align = cube;
  ico_flow = ico;
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::echo() const {
  return {{"stages", stages()},
          {"use_blend_weights", use_blend_weights ? "true" : "false"},
          {"padding_cube", fmt(padding_cube)},
          {"padding_ico", fmt(padding_ico)},
          {"res_cube", std::to_string(res_cube)},
          {"res_ico", std::to_string(res_ico)},
          {"rotation_stride", std::to_string(rotation_stride)},
          {"backend", external ? "external:" + external->cmd_template : "builtin"},
          {"backend.min_level_dim", std::to_string(backend.min_level_dim)},
          {"backend.patch_size", std::to_string(backend.patch_size)},
          {"backend.patch_stride", std::to_string(backend.patch_stride)},
          {"backend.max_iters_per_patch", std::to_string(backend.max_iters_per_patch)},
          {"backend.convergence_eps", fmt(backend.convergence_eps)},
          {"backend.densify_eps", fmt(backend.densify_eps)}};
}

void PipelineConfig::apply(const std::string& key, const std::string& value) {
  const auto to_double = [&] {
    try {
      std::size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("bad numeric value '" + value + "' for " + key);
  };
  const auto to_int = [&] {
    const double v = to_double();
    if (v != std::floor(v)) throw ConfigError("bad integer value '" + value + "' for " + key);
    return int(v);
  };
  if (key == "stages") set_stages(value);
  else if (key == "use_blend_weights") {
    if (value != "true" && value != "false") throw ConfigError("use_blend_weights must be true or false");
    use_blend_weights = value == "true";
  } else if (key == "padding_cube") padding_cube = to_double();
  else if (key == "padding_ico") padding_ico = to_double();
  else if (key == "res_cube") res_cube = to_int();
  else if (key == "res_ico") res_ico = to_int();
  else if (key == "rotation_stride") rotation_stride = to_int();
  else if (key == "backend") {
    if (value == "builtin") external.reset();
    else if (value.rfind("external:", 0) == 0) {
      ExternalOptions opt;
      opt.cmd_template = value.substr(9);
      external = opt;
    } else {
      throw ConfigError("backend must be 'builtin' or 'external:<cmd>'");
    }
  } else if (key == "backend.min_level_dim") backend.min_level_dim = to_int();
  else if (key == "backend.patch_size") backend.patch_size = to_int();
  else if (key == "backend.patch_stride") backend.patch_stride = to_int();
  else if (key == "backend.max_iters_per_patch") backend.max_iters_per_patch = to_int();
  else if (key == "backend.convergence_eps") backend.convergence_eps = to_double();
  else if (key == "backend.densify_eps") backend.densify_eps = to_double();
  else throw ConfigError("unknown config key '" + key + "'");
}

std::unique_ptr<FlowBackend> make_backend(const PipelineConfig& cfg) {
  if (cfg.external) return std::make_unique<ExternalBackend>(*cfg.external);
  return std::make_unique<BuiltinBackend>(cfg.backend);
}

FlowField raster_to_erp_flow(const PerspFlow& raw) {
  FlowField f(raw.width, raw.height);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const std::size_t i = f.index(x, y);
      f.du[i] = wrap_normalize(raw.du[i], f.width);
      f.dv[i] = std::clamp(raw.dv[i], -0.5 - y, f.height - 0.5 - y);
    }
  }
  return f;
}

FlowField erp_direct_flow(const ErpImage& src, const ErpImage& dst, const BackendConfig& cfg) {
  return raster_to_erp_flow(estimate_flow(src.image(), dst.image(), cfg));
}

PipelineResult run(const ErpImage& src, const ErpImage& dst, const PipelineConfig& cfg) {
  cfg.validate();
  if (!src.image().same_shape(dst.image())) throw DimensionError("source and target panoramas differ in shape");
  const auto t_start = std::chrono::steady_clock::now();
  const int w = src.width();
  const auto backend = make_backend(cfg);
  const StitchOptions stitch_opts{cfg.use_blend_weights};
  const int res_cube = cfg.res_cube ? cfg.res_cube : default_resolution(LayoutKind::Cube, cfg.padding_cube, w);
  const int res_ico = cfg.res_ico ? cfg.res_ico : default_resolution(LayoutKind::Icosahedron, cfg.padding_ico, w);

  PipelineResult out;
  PipelineReport& rep = out.report;
  rep.config = cfg.echo();

  // Stage 1: flow on the raw ERP pair seeds a coarse rotation.
  ErpImage aligned = dst;
  {
    StageReport st;
    st.name = "erp";
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.erp_align) {
      with_context("stage erp", [&] {
        const FlowField coarse = raster_to_erp_flow(backend->estimate(src.image(), dst.image(), {}));
        const RotationEstimate est = estimate_rotation(coarse, cfg.rotation_stride);
        rep.r_bar = est.rotation;
        st.rotation = est.rotation;
        st.residual = est.residual;
        st.n_samples = est.n_samples;
        aligned = align_target(dst, rep.r_bar);
      });
      st.ran = true;
    }
    st.seconds = seconds_since(t0);
    rep.stages.push_back(st);
  }

  // Stage 2: cubemap flow against the coarsely aligned target refines the rotation.
  {
    StageReport st;
    st.name = "cube";
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.cube_align) {
      with_context("stage cube", [&] {
        const TangentLayout cube = make_layout(LayoutKind::Cube, cfg.padding_cube, res_cube);
        const FlowField mid = stitch_layout(src, aligned, cube, *backend, stitch_opts);
        const RotationEstimate est = estimate_rotation(mid, cfg.rotation_stride);
        rep.r_hat = est.rotation;
        st.rotation = est.rotation;
        st.residual = est.residual;
        st.n_samples = est.n_samples;
        aligned = align_target(aligned, rep.r_hat);
      });
      st.ran = true;
    }
    st.seconds = seconds_since(t0);
    rep.stages.push_back(st);
  }

  // Stage 3: fine flow against the fully aligned target, then undo both rotations.
  {
    StageReport st;
    st.name = cfg.ico_flow ? "ico" : "cube-final";
    const auto t0 = std::chrono::steady_clock::now();
    out.flow = with_context("stage " + st.name, [&] {
      const TangentLayout layout = cfg.ico_flow ? make_layout(LayoutKind::Icosahedron, cfg.padding_ico, res_ico)
                                                : make_layout(LayoutKind::Cube, cfg.padding_cube, res_cube);
      const FlowField fine = stitch_layout(src, aligned, layout, *backend, stitch_opts);
      return unrotate_flow(fine, rep.r_bar, rep.r_hat);
    });
    st.ran = true;
    st.seconds = seconds_since(t0);
    rep.stages.push_back(st);
  }
  rep.total_seconds = seconds_since(t_start);
  return out;
}

std::vector<AblationArm> standard_arms(const PipelineConfig& base) {
  std::vector<AblationArm> arms;
  arms.push_back({"full", base});
  AblationArm no_weight{"w/o weight", base};
  no_weight.cfg.use_blend_weights = false;
  arms.push_back(no_weight);
  AblationArm no_erp{"w/o ERP", base};
  no_erp.cfg.erp_align = false;
  arms.push_back(no_erp);
  AblationArm no_cube{"w/o cubemap", base};
  no_cube.cfg.cube_align = false;
  arms.push_back(no_cube);
  AblationArm no_ico{"w/o ico", base};
  no_ico.cfg.ico_flow = false;
  arms.push_back(no_ico);
  return arms;
}

namespace {

void accumulate(MetricsReport& sum, const MetricsReport& m) {
  sum.epe += m.epe;
  sum.aae += m.aae;
  sum.rms += m.rms;
  sum.sepe += m.sepe;
  sum.saae += m.saae;
  sum.srms += m.srms;
  sum.polar_sepe += m.polar_sepe;
  sum.equatorial_sepe += m.equatorial_sepe;
  sum.n_pixels += m.n_pixels;
}

void divide(MetricsReport& sum, double n) {
  for (double* v : {&sum.epe, &sum.aae, &sum.rms, &sum.sepe, &sum.saae, &sum.srms, &sum.polar_sepe,
                    &sum.equatorial_sepe}) {
    *v /= n;
  }
}

}  // namespace

std::vector<AblationRow> run_ablation_suite(const std::vector<GtPair>& pairs, const std::vector<AblationArm>& arms) {
  std::vector<AblationRow> rows;
  for (const auto& arm : arms) {
    MetricsReport sum;
    for (const auto& pair : pairs) {
      const PipelineResult res = with_context("arm " + arm.name + ", pair " + pair.name,
                                              [&] { return run(pair.src, pair.dst, arm.cfg); });
      const MetricsReport m = evaluate(res.flow, pair.gt);
      rows.push_back({arm.name, pair.name, m});
      accumulate(sum, m);
    }
    if (!pairs.empty()) {
      divide(sum, double(pairs.size()));
      rows.push_back({arm.name, "all", sum});
    }
  }
  return rows;
}

std::vector<SweepRow> padding_sweep(const std::vector<GtPair>& pairs, const std::vector<double>& paddings,
                                    const PipelineConfig& base) {
  if (pairs.empty()) throw ConfigError("padding sweep needs at least one pair");
  std::vector<SweepRow> rows;
  for (const double p : paddings) {
    PipelineConfig cfg = base;
    cfg.padding_cube = p;
    cfg.padding_ico = p;
    cfg.validate();
    SweepRow row;
    row.padding = p;
    row.config = cfg.echo();
    for (const auto& pair : pairs) {
      const PipelineResult res =
          with_context("padding " + fmt(p) + ", pair " + pair.name, [&] { return run(pair.src, pair.dst, cfg); });
      accumulate(row.metrics, evaluate(res.flow, pair.gt));
    }
    row.n_pairs = int(pairs.size());
    divide(row.metrics, double(row.n_pairs));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace omniflow
