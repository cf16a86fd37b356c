#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "omniflow/align.hpp"
#include "omniflow/backend.hpp"
#include "omniflow/erp.hpp"
#include "omniflow/flow360.hpp"
#include "omniflow/metrics.hpp"
#include "omniflow/tangent.hpp"

namespace omniflow {

struct PipelineConfig {
  // Stage toggles. With ico_flow off, the final stage stitches a cubemap
  // against the fully aligned target instead of an icosahedron.
  bool erp_align = true;
  bool cube_align = true;
  bool ico_flow = true;

  bool use_blend_weights = true;
  double padding_cube = 0.25;
  double padding_ico = 0.5;
  int res_cube = 0;  // 0 = default_resolution
  int res_ico = 0;
  int rotation_stride = 4;

  BackendConfig backend;
  std::optional<ExternalOptions> external;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// Ordered key/value rendering of every field.
  std::vector<std::pair<std::string, std::string>> echo() const;
  /// Inverse of echo() for a single entry. Throws ConfigError on unknown keys
  /// or malformed values.
  void apply(const std::string& key, const std::string& value);
  /// Parses "erp,cube,ico" style stage lists. Throws ConfigError on unknown names.
  void set_stages(const std::string& csv);
  std::string stages() const;
};

struct StageReport {
  std::string name;
  bool ran = false;
  Rotation rotation;  // identity when the stage does not estimate one
  double residual = 0.0;
  int n_samples = 0;
  double seconds = 0.0;
};

struct PipelineReport {
  Rotation r_bar;
  Rotation r_hat;
  std::vector<StageReport> stages;
  double total_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> config;
};

struct PipelineResult {
  FlowField flow;
  PipelineReport report;
};

std::unique_ptr<FlowBackend> make_backend(const PipelineConfig& cfg);

/// Three-stage estimation: ERP flow -> rotation -> cubemap flow -> residual
/// rotation -> icosahedron flow -> un-rotation of the endpoints. Errors are
/// re-thrown with the stage name attached.
PipelineResult run(const ErpImage& src, const ErpImage& dst, const PipelineConfig& cfg = {});

/// Treats a backend result on the raw ERP raster as 360-degree flow:
/// du wrap-normalized, endpoint rows clamped.
FlowField raster_to_erp_flow(const PerspFlow& raw);

/// The built-in backend applied directly to the ERP pair, wrap-normalized.
FlowField erp_direct_flow(const ErpImage& src, const ErpImage& dst, const BackendConfig& cfg = {});

struct GtPair {
  std::string name;
  ErpImage src;
  ErpImage dst;
  FlowField gt;
};

struct AblationArm {
  std::string name;
  PipelineConfig cfg;
};

/// full, w/o weight, w/o ERP, w/o cubemap, w/o ico, each differing from `base`
/// in exactly one field.
std::vector<AblationArm> standard_arms(const PipelineConfig& base = {});

struct AblationRow {
  std::string arm;
  std::string pair;  // "all" for the per-arm mean over pairs
  MetricsReport metrics;
};

std::vector<AblationRow> run_ablation_suite(const std::vector<GtPair>& pairs, const std::vector<AblationArm>& arms);

struct SweepRow {
  double padding = 0.0;
  MetricsReport metrics;  // mean over pairs
  int n_pairs = 0;
  std::vector<std::pair<std::string, std::string>> config;
};

/// Runs the pipeline once per padding value, applied to both layouts.
std::vector<SweepRow> padding_sweep(const std::vector<GtPair>& pairs, const std::vector<double>& paddings,
                                    const PipelineConfig& base = {});

}  // namespace omniflow
