#pragma once

#include "omniflow/erp.hpp"
#include "omniflow/image.hpp"

namespace omniflow {

// ERP optical flow following the shortest great-circle path: |du| <= W/2 and
// endpoint rows within [-0.5, H - 0.5].
struct FlowField : FlowGrid {
  FlowField() = default;
  FlowField(int w, int h) : FlowGrid(w, h) { check_erp_dims(w, h); }
  explicit FlowField(FlowGrid g);

  /// Throws ConfigError if any invariant is violated.
  void validate() const;
};

/// ((du + W/2) mod W) - W/2, in [-W/2, W/2).
double wrap_normalize(double du, int width);

/// Endpoint of the flow at grid position x; u wraps, v clamps to [-0.5, H - 0.5].
PixelCoord endpoint(const FlowField& f, int x, int y);

/// Builds a flow from per-pixel end positions (start positions are the grid).
FlowField flow_from_endpoints(int width, int height, std::span<const PixelCoord> ends);

/// Builds a flow from per-pixel endpoint directions.
FlowField flow_from_directions(int width, int height, std::span<const Vec3> ends);

/// Unit direction of the endpoint at (x, y).
Vec3 endpoint_dir(const FlowField& f, int x, int y);

/// out(x) = img(endpoint(f, x)), bilinear. Throws DimensionError on mismatch.
ErpImage backward_warp(const ErpImage& img, const FlowField& f);

/// Flow of a pure rotation: every direction d moves to R d.
FlowField rotation_flow(const Rotation& r, int width, int height);

}  // namespace omniflow
