#include "omniflow/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "omniflow/backend.hpp"
#include "omniflow/error.hpp"
#include "omniflow/io.hpp"
#include "omniflow/metrics.hpp"
#include "omniflow/parallel.hpp"
#include "omniflow/pipeline.hpp"
#include "omniflow/synth.hpp"
#include "omniflow/vis.hpp"

#ifndef OMNIFLOW_VERSION
#define OMNIFLOW_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace omniflow::cli {
namespace {

constexpr const char* kFloNote =
    "du is wrap-normalized to [-W/2, W/2); generic .flo tools read seam-crossing vectors as large motions";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.png", i);
  return buf;
}

std::string gt_name(int i, int j) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "gt_%04d_%04d.flo", i, j);
  return buf;
}

ErpImage load_erp(const fs::path& p) {
  return with_context(p.string(), [&] { return ErpImage(io::read_png(p)); });
}

FlowField load_flow(const fs::path& p) {
  return with_context(p.string(), [&] { return FlowField(io::read_flo(p)); });
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> v;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list");
    }
  }
  if (v.empty()) throw ConfigError("empty value list");
  return v;
}

json rotation_json(const Rotation& r) {
  json a = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a.push_back(r.matrix()(i, j));
  return a;
}

json metrics_json(const MetricsReport& m) {
  json j = json::object();
  for (const auto& [k, v] : to_key_values(m)) j[k] = v;
  return j;
}

// Pipeline flags shared by estimate and sweep. Explicit flags override a
// configuration loaded from a prior manifest.
struct PipelineFlags {
  std::string config_file;
  double padding_cube = 0.25;
  double padding_ico = 0.5;
  std::string stages = "erp,cube,ico";
  bool no_blend_weights = false;
  std::string backend = "builtin";
  int stride = 4;
  int threads = 0;
  int timeout = 300;
  std::string scratch;

  CLI::Option* o_padding_cube = nullptr;
  CLI::Option* o_padding_ico = nullptr;
  CLI::Option* o_stages = nullptr;
  CLI::Option* o_no_blend = nullptr;
  CLI::Option* o_backend = nullptr;
  CLI::Option* o_stride = nullptr;

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "Reuse the config block of a run manifest");
    o_padding_cube = app->add_option("--padding-cube", padding_cube, "Cubemap padding p");
    o_padding_ico = app->add_option("--padding-ico", padding_ico, "Icosahedron padding p");
    o_stages = app->add_option("--stages", stages, "Subset of erp,cube,ico");
    o_no_blend = app->add_flag("--no-blend-weights", no_blend_weights, "Average faces with unit weights");
    o_backend = app->add_option("--backend", backend, "builtin or external:<cmd with {a} {b} {out}>");
    o_stride = app->add_option("--stride", stride, "Pixel stride of rotation samples");
    app->add_option("--threads", threads, "Worker thread cap (0 = runtime default)");
    app->add_option("--backend-timeout", timeout, "External backend timeout in seconds");
    app->add_option("--scratch", scratch, "Scratch root for the external backend");
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      if (!f) throw ConfigError("cannot read config " + config_file);
      json j;
      try {
        j = json::parse(f);
      } catch (const json::exception& e) {
        throw ConfigError(config_file + ": " + e.what());
      }
      const json& c = j.contains("config") ? j["config"] : j;
      if (!c.is_object()) throw ConfigError(config_file + ": config block is not an object");
      for (const auto& [k, v] : c.items()) cfg.apply(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
    if (config_file.empty() || o_padding_cube->count()) cfg.padding_cube = padding_cube;
    if (config_file.empty() || o_padding_ico->count()) cfg.padding_ico = padding_ico;
    if (config_file.empty() || o_stages->count()) cfg.set_stages(stages);
    if (config_file.empty() || o_no_blend->count()) cfg.use_blend_weights = !no_blend_weights;
    if (config_file.empty() || o_backend->count()) cfg.apply("backend", backend);
    if (config_file.empty() || o_stride->count()) cfg.rotation_stride = stride;
    if (cfg.external) {
      if (timeout < 1) throw ConfigError("backend timeout must be >= 1 s");
      cfg.external->timeout = std::chrono::seconds(timeout);
      cfg.external->scratch_root = scratch;
    }
    cfg.validate();
    return cfg;
  }
};

struct EstimateArgs {
  std::string src, dst, out, gt, manifest;
  PipelineFlags flags;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.flags.build();
  set_thread_limit(a.flags.threads);
  const ErpImage src = load_erp(a.src);
  const ErpImage dst = load_erp(a.dst);
  std::optional<FlowField> gt;
  if (!a.gt.empty()) gt = load_flow(a.gt);

  const PipelineResult res = run(src, dst, cfg);
  io::write_flo(a.out, res.flow);

  json m;
  m["tool"] = "omniflow";
  m["version"] = OMNIFLOW_VERSION;
  m["command"] = "estimate";
  m["inputs"] = {{"src", a.src}, {"dst", a.dst}};
  if (gt) m["inputs"]["gt"] = a.gt;
  m["outputs"] = {{"flow", a.out}};
  m["config"] = json::object();
  for (const auto& [k, v] : res.report.config) m["config"][k] = v;
  m["rotations"] = {{"r_bar", rotation_json(res.report.r_bar)}, {"r_hat", rotation_json(res.report.r_hat)}};
  json stages = json::array();
  for (const auto& s : res.report.stages) {
    stages.push_back({{"name", s.name},
                      {"ran", s.ran},
                      {"seconds", s.seconds},
                      {"residual", s.residual},
                      {"n_samples", s.n_samples}});
  }
  m["timings"] = {{"stages", stages}, {"total_seconds", res.report.total_seconds}};
  if (gt) {
    const MetricsReport rep = evaluate(res.flow, *gt);
    m["metrics"] = metrics_json(rep);
    out << "sepe " << fmt(rep.sepe) << "\n";
  }
  m["notes"] = kFloNote;
  const std::string manifest = a.manifest.empty() ? a.out + ".json" : a.manifest;
  write_text(manifest, m.dump(2) + "\n");
  out << "wrote " << a.out << " (" << res.flow.width << "x" << res.flow.height << ") in "
      << fmt(res.report.total_seconds) << " s\n";
  return kExitOk;
}

struct EvalArgs {
  std::string est, gt, report;
  double polar_fraction = 0.15;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const FlowField est = load_flow(a.est);
  const FlowField gt = load_flow(a.gt);
  const MetricsReport rep = evaluate(est, gt, a.polar_fraction);
  const auto kv = to_key_values(rep);
  for (const auto& [k, v] : kv) out << std::left << std::setw(16) << k << v << "\n";
  if (!a.report.empty()) {
    std::string text;
    for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
    write_text(a.report, text);
  }
  return kExitOk;
}

struct SynthArgs {
  std::string kind = "box";
  std::string path;
  std::string outdir;
  std::string texture = "mixed";
  int n = 2;
  int width = 512;
  std::uint64_t seed = 1;
  double room = 2.0;
  double yaw = 0.0, pitch = 0.0, roll = 0.0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SceneSpec scene;
  if (a.kind == "box") scene.kind = SceneKind::BoxRoom;
  else if (a.kind == "sphere") scene.kind = SceneKind::SphereTexture;
  else throw ConfigError("unknown scene kind '" + a.kind + "' (expected box or sphere)");
  if (a.texture == "checker") scene.texture = TextureKind::Checker;
  else if (a.texture == "noise") scene.texture = TextureKind::ValueNoise;
  else if (a.texture == "mixed") scene.texture = TextureKind::Mixed;
  else throw ConfigError("unknown texture '" + a.texture + "' (expected checker, noise or mixed)");
  scene.seed = a.seed;
  scene.room_half_size = a.room;
  check_erp_dims(a.width, a.width / 2);

  std::vector<CameraPose> poses;
  if (a.path.empty()) {
    // Two poses: identity, then the given rotation.
    constexpr double deg = kPi / 180.0;
    poses.push_back({});
    poses.push_back({Vec3::Zero(), Rotation::from_euler_zyx(a.roll * deg, a.yaw * deg, a.pitch * deg)});
  } else {
    PathKind kind;
    if (a.path == "circle") kind = PathKind::Circle;
    else if (a.path == "line") kind = PathKind::Line;
    else if (a.path == "random") kind = PathKind::Random;
    else throw ConfigError("unknown path '" + a.path + "' (expected circle, line or random)");
    poses = camera_path(kind, scene, a.n, a.seed);
  }

  const fs::path dir(a.outdir);
  fs::create_directories(dir);
  std::string pose_text;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const ErpImage img = render_erp(scene, poses[i], a.width);
    io::write_png(dir / frame_name(int(i)), img.image());
    const CameraPose& p = poses[i];
    pose_text += std::to_string(i);
    for (int k = 0; k < 3; ++k) pose_text += " " + fmt(p.position[k]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) pose_text += " " + fmt(p.orientation.matrix()(r, c));
    pose_text += "\n";
    if (i > 0) {
      io::write_flo(dir / gt_name(int(i - 1), int(i)), gt_flow(scene, poses[i - 1], poses[i], a.width));
    }
  }
  write_text(dir / "poses.txt", pose_text);

  json m;
  m["tool"] = "omniflow";
  m["version"] = OMNIFLOW_VERSION;
  m["command"] = "synth";
  m["scene"] = {{"kind", a.kind},     {"texture", a.texture},       {"seed", a.seed},
                {"room_half_size", a.room}, {"width", a.width}, {"path", a.path.empty() ? "rotation" : a.path}};
  if (a.path.empty()) m["rotation_deg"] = {{"yaw", a.yaw}, {"pitch", a.pitch}, {"roll", a.roll}};
  m["n_poses"] = poses.size();
  m["notes"] = kFloNote;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  out << "wrote " << poses.size() << " frames and " << poses.size() - 1 << " ground-truth flows to " << a.outdir
      << "\n";
  return kExitOk;
}

struct VisArgs {
  std::string in, gt, out;
  double max_value = 0.0;
};

int cmd_vis_flow(const VisArgs& a) {
  const FlowGrid f = with_context(a.in, [&] { return io::read_flo(a.in); });
  io::write_png(a.out, flow_to_color(f, a.max_value));
  return kExitOk;
}

int cmd_vis_heatmap(const VisArgs& a) {
  const FlowField est = load_flow(a.in);
  const FlowField gt = load_flow(a.gt);
  io::write_png(a.out, error_heatmap(endpoint_error_map(est, gt), est.width, est.height, a.max_value));
  return kExitOk;
}

struct SweepArgs {
  std::string data, report;
  std::string paddings = "0,0.1,0.2,0.3,0.4,0.5,0.6";
  int max_pairs = 0;
  PipelineFlags flags;
};

std::vector<GtPair> load_pairs(const fs::path& dir, int max_pairs) {
  std::vector<GtPair> pairs;
  for (int i = 0;; ++i) {
    if (max_pairs > 0 && int(pairs.size()) >= max_pairs) break;
    const fs::path gt = dir / gt_name(i, i + 1);
    if (!fs::exists(gt)) break;
    pairs.push_back({gt.stem().string(), load_erp(dir / frame_name(i)), load_erp(dir / frame_name(i + 1)),
                     load_flow(gt)});
  }
  if (pairs.empty()) throw ConfigError("no frame pairs with ground truth found in " + dir.string());
  return pairs;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const PipelineConfig base = a.flags.build();
  set_thread_limit(a.flags.threads);
  const std::vector<double> ps = parse_list(a.paddings);
  const std::vector<GtPair> pairs = load_pairs(a.data, a.max_pairs);
  const std::vector<SweepRow> rows = padding_sweep(pairs, ps, base);

  std::string table = "padding\tsepe\tsaae\tsrms\tpolar_sepe\tequatorial_sepe\tn_pairs\tconfig\n";
  for (const auto& r : rows) {
    std::string cfg;
    for (const auto& [k, v] : r.config) cfg += (cfg.empty() ? "" : ";") + k + "=" + v;
    table += fmt(r.padding) + "\t" + fmt(r.metrics.sepe) + "\t" + fmt(r.metrics.saae) + "\t" + fmt(r.metrics.srms) +
             "\t" + fmt(r.metrics.polar_sepe) + "\t" + fmt(r.metrics.equatorial_sepe) + "\t" +
             std::to_string(r.n_pairs) + "\t" + cfg + "\n";
  }
  if (a.report.empty()) out << table;
  else {
    write_text(a.report, table);
    for (const auto& r : rows) out << "p=" << fmt(r.padding) << " sepe=" << fmt(r.metrics.sepe) << "\n";
  }
  return kExitOk;
}

struct Flow2dArgs {
  std::string a, b, out;
  BackendConfig cfg;
};

int cmd_flow2d(const Flow2dArgs& a) {
  const Image ia = io::read_png(a.a);
  const Image ib = io::read_png(a.b);
  io::write_flo(a.out, estimate_flow(ia, ib, a.cfg));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"360-degree optical flow between equirectangular panoramas", "omniflow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", OMNIFLOW_VERSION);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Estimate flow between two ERP images");
  c_est->add_option("src", est.src, "Source panorama (PNG)")->required();
  c_est->add_option("dst", est.dst, "Target panorama (PNG)")->required();
  c_est->add_option("out", est.out, "Output .flo")->required();
  c_est->add_option("--gt", est.gt, "Ground-truth .flo; adds metrics to the manifest");
  c_est->add_option("--manifest", est.manifest, "Manifest path (default <out>.json)");
  est.flags.add(c_est);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Compare an estimated .flo with ground truth");
  c_eval->add_option("est", ev.est)->required();
  c_eval->add_option("gt", ev.gt)->required();
  c_eval->add_option("--report", ev.report, "Write key=value report here");
  c_eval->add_option("--polar-fraction", ev.polar_fraction, "Fraction of rows per pole in the polar band");

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Render synthetic ERP frames with exact ground-truth flow");
  c_synth->add_option("kind", sy.kind, "box or sphere")->required();
  c_synth->add_option("--path", sy.path, "circle, line or random (default: one rotated pair)");
  c_synth->add_option("--out", sy.outdir, "Output directory")->required();
  c_synth->add_option("--n", sy.n, "Number of poses on the path");
  c_synth->add_option("--width", sy.width, "ERP width");
  c_synth->add_option("--seed", sy.seed, "Texture and path seed");
  c_synth->add_option("--texture", sy.texture, "checker, noise or mixed");
  c_synth->add_option("--room", sy.room, "Room half-size in metres");
  c_synth->add_option("--rot-yaw", sy.yaw, "Second pose yaw, degrees");
  c_synth->add_option("--rot-pitch", sy.pitch, "Second pose pitch, degrees");
  c_synth->add_option("--rot-roll", sy.roll, "Second pose roll, degrees");

  VisArgs vf, vh;
  auto* c_vis = app.add_subcommand("vis", "Render flow or error images");
  c_vis->require_subcommand(1);
  auto* c_vis_flow = c_vis->add_subcommand("flow", "Colour-wheel rendering of a .flo");
  c_vis_flow->add_option("in", vf.in)->required();
  c_vis_flow->add_option("out", vf.out)->required();
  c_vis_flow->add_option("--max-mag", vf.max_value, "Saturation magnitude (default: 99th percentile)");
  auto* c_vis_heat = c_vis->add_subcommand("heatmap", "Geodesic endpoint-error map, lighter is better");
  c_vis_heat->add_option("est", vh.in)->required();
  c_vis_heat->add_option("gt", vh.gt)->required();
  c_vis_heat->add_option("out", vh.out)->required();
  c_vis_heat->add_option("--max-err", vh.max_value, "Error mapped to black, radians (default: 99th percentile)");

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "SEPE versus tangent padding over a synth directory");
  c_sweep->add_option("data", sw.data, "Directory written by synth")->required();
  c_sweep->add_option("--p", sw.paddings, "Comma-separated padding values");
  c_sweep->add_option("--max-pairs", sw.max_pairs, "Use at most this many pairs");
  c_sweep->add_option("--report", sw.report, "Write the TSV table here");
  sw.flags.add(c_sweep);

  Flow2dArgs fl;
  auto* c_flow2d = app.add_subcommand("flow2d", "Built-in planar solver on two PNGs (external backend wrapper)");
  c_flow2d->add_option("a", fl.a)->required();
  c_flow2d->add_option("b", fl.b)->required();
  c_flow2d->add_option("out", fl.out)->required();
  c_flow2d->add_option("--patch-size", fl.cfg.patch_size);
  c_flow2d->add_option("--patch-stride", fl.cfg.patch_stride);
  c_flow2d->add_option("--iters", fl.cfg.max_iters_per_patch);

  std::vector<const char*> argv;
  argv.push_back("omniflow");
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (c_est->parsed()) return cmd_estimate(est, out);
    if (c_eval->parsed()) return cmd_eval(ev, out);
    if (c_synth->parsed()) return cmd_synth(sy, out);
    if (c_vis_flow->parsed()) return cmd_vis_flow(vf);
    if (c_vis_heat->parsed()) return cmd_vis_heatmap(vh);
    if (c_sweep->parsed()) return cmd_sweep(sw, out);
    if (c_flow2d->parsed()) return cmd_flow2d(fl);
  } catch (const ExternalError& e) {
    err << "error: " << e.what() << "\n";
    if (!e.diagnostics().empty()) err << "backend output:\n" << e.diagnostics() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace omniflow::cli
