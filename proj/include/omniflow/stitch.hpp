#pragma once

#include <cstdint>
#include <vector>

#include "omniflow/backend.hpp"
#include "omniflow/erp.hpp"
#include "omniflow/flow360.hpp"
#include "omniflow/tangent.hpp"

namespace omniflow {

// Weight given to tangent pixels whose warped lookup leaves the raster.
inline constexpr double kWeightFloor = 1e-4;

struct FaceFlow {
  TangentPatch patch;
  PerspFlow flow;
  std::vector<float> weight;  // res * res, in (0, 1]
};

/// Photoconsistency weight exp(-mean_c |src - warp(dst, flow)|) per tangent pixel.
/// Throws DimensionError on mismatched rasters.
std::vector<float> face_weight(const PerspImage& src, const PerspImage& dst, const PerspFlow& flow);

// One face's flow expressed on the ERP grid; entries with covered == 0 carry nothing.
struct ErpContribution {
  std::vector<std::uint8_t> covered;
  std::vector<double> du;
  std::vector<double> dv;
  std::vector<double> weight;
};

ErpContribution face_flow_to_erp(const FaceFlow& face, int width, int height);

/// Blends face flows: sum(flow_i * w_i) / sum(w_i) per ERP pixel, with all
/// weights forced to 1 when use_weights is false.
/// Throws CoverageError if an ERP pixel receives no contribution.
FlowField blend_faces(const std::vector<FaceFlow>& faces, int width, int height, bool use_weights);

struct StitchOptions {
  bool use_blend_weights = true;
};

/// Runs the backend on every tangent pair of the layout and stitches the
/// result back into a 360-degree flow field. Backend failures are re-thrown
/// with the face index attached.
FlowField stitch_layout(const ErpImage& src, const ErpImage& dst, const TangentLayout& layout,
                        const FlowBackend& backend, const StitchOptions& opts = {});

}  // namespace omniflow
