#include "omniflow/stitch.hpp"

#include <cmath>
#include <string>

#include "omniflow/error.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {
namespace {

double sample_grid(const std::vector<double>& a, int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const int x0 = std::min(int(x), w - 1), y0 = std::min(int(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1 - fx) * a[std::size_t(y0) * w + x0] + fx * a[std::size_t(y0) * w + x1];
  const double bot = (1 - fx) * a[std::size_t(y1) * w + x0] + fx * a[std::size_t(y1) * w + x1];
  return (1 - fy) * top + fy * bot;
}

double sample_grid(const std::vector<float>& a, int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const int x0 = std::min(int(x), w - 1), y0 = std::min(int(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1 - fx) * a[std::size_t(y0) * w + x0] + fx * a[std::size_t(y0) * w + x1];
  const double bot = (1 - fx) * a[std::size_t(y1) * w + x0] + fx * a[std::size_t(y1) * w + x1];
  return (1 - fy) * top + fy * bot;
}

// Visits every ERP pixel inside the face's padded extent with its raster position.
template <typename Visit>
void for_each_covered(const TangentPatch& patch, int width, int height, Visit&& visit) {
  parallel_for(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      const Vec3 d = pix_to_vec({double(x), double(y)}, width, height);
      PlanePoint p;
      if (!patch.project(d, p) || !patch.inside_padded(p)) continue;
      visit(x, y, p, patch.plane_to_col(p.x), patch.plane_to_row(p.y));
    }
  });
}

}  // namespace

std::vector<float> face_weight(const PerspImage& src, const PerspImage& dst, const PerspFlow& flow) {
  const Image& a = src.image;
  const Image& b = dst.image;
  if (!a.same_shape(b) || flow.width != a.width() || flow.height != a.height()) {
    throw DimensionError("face_weight: rasters and flow differ in shape");
  }
  const int w = a.width(), h = a.height(), ch = a.channels();
  std::vector<float> weight(std::size_t(w) * h, float(kWeightFloor));
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = std::size_t(y) * w + x;
      const double tx = x + flow.du[i], ty = y + flow.dv[i];
      if (tx < 0.0 || ty < 0.0 || tx > w - 1 || ty > h - 1) continue;
      if (!src.valid_mask.empty() && !src.valid_mask[i]) continue;
      if (!dst.valid_mask.empty() && !dst.valid_mask[std::size_t(std::lround(ty)) * w + std::lround(tx)]) continue;
      double diff = 0.0;
      for (int c = 0; c < ch; ++c) diff += std::abs(a.at(x, y, c) - b.sample_clamped(tx, ty, c));
      weight[i] = float(std::exp(-diff / ch));
    }
  });
  return weight;
}

ErpContribution face_flow_to_erp(const FaceFlow& face, int width, int height) {
  const TangentPatch& patch = face.patch;
  const int res = patch.res();
  if (face.flow.width != res || face.flow.height != res || face.weight.size() != std::size_t(res) * res) {
    throw DimensionError("face flow does not match its patch resolution");
  }
  const std::size_t n = std::size_t(width) * height;
  ErpContribution out{std::vector<std::uint8_t>(n, 0), std::vector<double>(n, 0.0),
                      std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  const double sx = patch.scale_x(), sy = patch.scale_y();
  for_each_covered(patch, width, height, [&](int x, int y, const PlanePoint& p, double col, double row) {
    const std::size_t i = std::size_t(y) * width + x;
    const double fu = sample_grid(face.flow.du, res, res, col, row);
    const double fv = sample_grid(face.flow.dv, res, res, col, row);
    // Raster rows run southward, so a positive row displacement lowers y.
    const Vec3 end = patch.unproject({p.x + fu * sx, p.y - fv * sy});
    const PixelCoord e = vec_to_pix(end, width, height);
    out.covered[i] = 1;
    out.du[i] = wrap_normalize(e.u - x, width);
    out.dv[i] = e.v - y;
    out.weight[i] = sample_grid(face.weight, res, res, col, row);
  });
  return out;
}

FlowField blend_faces(const std::vector<FaceFlow>& faces, int width, int height, bool use_weights) {
  const std::size_t n = std::size_t(width) * height;
  std::vector<double> sum_u(n, 0.0), sum_v(n, 0.0), sum_w(n, 0.0);
  // Faces accumulate in order so the result does not depend on thread count.
  for (const auto& face : faces) {
    const ErpContribution c = face_flow_to_erp(face, width, height);
    for (std::size_t i = 0; i < n; ++i) {
      if (!c.covered[i]) continue;
      const double w = use_weights ? c.weight[i] : 1.0;
      sum_u[i] += w * c.du[i];
      sum_v[i] += w * c.dv[i];
      sum_w[i] += w;
    }
  }
  FlowField out(width, height);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sum_w[i] > 0.0)) {
      throw CoverageError("ERP pixel " + std::to_string(i % width) + "," + std::to_string(i / width) +
                          " received no face contribution");
    }
    const int y = int(i / width);
    out.du[i] = wrap_normalize(sum_u[i] / sum_w[i], width);
    out.dv[i] = std::clamp(sum_v[i] / sum_w[i], -0.5 - y, height - 0.5 - y);
  }
  return out;
}

FlowField stitch_layout(const ErpImage& src, const ErpImage& dst, const TangentLayout& layout,
                        const FlowBackend& backend, const StitchOptions& opts) {
  if (!(src.image().same_shape(dst.image()))) throw DimensionError("stitch: ERP pair differs in shape");
  std::vector<FaceFlow> faces;
  faces.reserve(layout.patches.size());
  for (std::size_t f = 0; f < layout.patches.size(); ++f) {
    const TangentPatch& patch = layout.patches[f];
    const PerspImage a = erp_to_tangent(src, patch);
    const PerspImage b = erp_to_tangent(dst, patch);
    PerspFlow flow = with_context(std::string(to_string(layout.kind)) + " face " + std::to_string(f),
                                  [&] { return backend.estimate(a.image, b.image, a.valid_mask); });
    std::vector<float> weight = face_weight(a, b, flow);
    faces.push_back({patch, std::move(flow), std::move(weight)});
  }
  return blend_faces(faces, src.width(), src.height(), opts.use_blend_weights);
}

}  // namespace omniflow
