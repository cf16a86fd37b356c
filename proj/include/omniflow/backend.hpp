#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>

#include "omniflow/image.hpp"

namespace omniflow {

// Dense displacement on a perspective raster, in raster pixels.
struct PerspFlow : FlowGrid {
  using FlowGrid::FlowGrid;
};

// Coarse-to-fine patch inverse search settings. The pyramid factor is fixed at 2.
struct BackendConfig {
  int min_level_dim = 32;
  int patch_size = 8;
  int patch_stride = 4;
  int max_iters_per_patch = 16;
  double convergence_eps = 0.01;
  double densify_eps = 1e-3;

  /// Throws ConfigError on non-positive values or stride > patch size.
  void validate() const;
};

/// Dense inverse search: pyramid, per-patch inverse-compositional translation
/// fits, residual-weighted densification. Inputs may be gray or RGB (converted
/// to luma). `init`, if given, seeds the coarsest level. Patches touching a
/// zero entry of `valid_mask` are skipped.
/// Throws DimensionError on mismatched inputs.
PerspFlow estimate_flow(const Image& a, const Image& b, const BackendConfig& cfg = {},
                        const PerspFlow* init = nullptr,
                        std::span<const std::uint8_t> valid_mask = {});

// Pluggable perspective flow method.
class FlowBackend {
 public:
  virtual ~FlowBackend() = default;
  virtual PerspFlow estimate(const Image& a, const Image& b,
                             std::span<const std::uint8_t> valid_mask) const = 0;
  virtual std::string name() const = 0;
};

class BuiltinBackend final : public FlowBackend {
 public:
  explicit BuiltinBackend(BackendConfig cfg = {});
  PerspFlow estimate(const Image& a, const Image& b,
                     std::span<const std::uint8_t> valid_mask) const override;
  std::string name() const override { return "builtin"; }
  const BackendConfig& config() const { return cfg_; }

 private:
  BackendConfig cfg_;
};

struct ExternalOptions {
  // Shell command with {a}, {b} and {out} placeholders.
  std::string cmd_template;
  // Empty means the system temp directory.
  std::filesystem::path scratch_root;
  std::chrono::seconds timeout{300};
};

/// Writes both rasters as 8-bit PNG, runs the command and reads back the .flo.
/// Throws ExternalError (nonzero exit, timeout, missing or corrupt output) or
/// DimensionError (output size differs from the inputs).
PerspFlow estimate_flow_external(const Image& a, const Image& b, const ExternalOptions& opts);

class ExternalBackend final : public FlowBackend {
 public:
  explicit ExternalBackend(ExternalOptions opts);
  PerspFlow estimate(const Image& a, const Image& b,
                     std::span<const std::uint8_t> valid_mask) const override;
  std::string name() const override { return "external:" + opts_.cmd_template; }

 private:
  ExternalOptions opts_;
};

}  // namespace omniflow
