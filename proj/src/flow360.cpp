#include "omniflow/flow360.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "omniflow/error.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {

FlowField::FlowField(FlowGrid g) : FlowGrid(std::move(g)) { check_erp_dims(width, height); }

void FlowField::validate() const {
  const double half = width / 2.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = index(x, y);
      if (!std::isfinite(du[i]) || !std::isfinite(dv[i])) throw ConfigError("flow contains non-finite values");
      if (du[i] < -half || du[i] > half) throw ConfigError("flow du exceeds half the image width");
      const double v = y + dv[i];
      if (v < -0.5 - 1e-9 || v > height - 0.5 + 1e-9) throw ConfigError("flow endpoint row out of range");
    }
  }
}

double wrap_normalize(double du, int width) {
  const double w = width;
  double r = std::fmod(du + w / 2.0, w);
  if (r < 0.0) r += w;
  if (r >= w) r -= w;
  return r - w / 2.0;
}

PixelCoord endpoint(const FlowField& f, int x, int y) {
  const std::size_t i = f.index(x, y);
  return {wrap_column(x + f.du[i], f.width),
          std::clamp(y + f.dv[i], -0.5, f.height - 0.5)};
}

Vec3 endpoint_dir(const FlowField& f, int x, int y) {
  return pix_to_vec(endpoint(f, x, y), f.width, f.height);
}

FlowField flow_from_endpoints(int width, int height, std::span<const PixelCoord> ends) {
  FlowField f(width, height);
  if (ends.size() != f.size()) throw DimensionError("endpoint grid does not match flow dimensions");
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = f.index(x, y);
      f.du[i] = wrap_normalize(ends[i].u - x, width);
      f.dv[i] = std::clamp(ends[i].v, -0.5, height - 0.5) - y;
    }
  }
  return f;
}

FlowField flow_from_directions(int width, int height, std::span<const Vec3> ends) {
  std::vector<PixelCoord> pix(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) pix[i] = vec_to_pix(ends[i], width, height);
  return flow_from_endpoints(width, height, pix);
}

ErpImage backward_warp(const ErpImage& img, const FlowField& f) {
  if (img.width() != f.width || img.height() != f.height) {
    throw DimensionError("backward_warp: image and flow dimensions differ");
  }
  const int w = img.width(), h = img.height(), ch = img.channels();
  std::vector<float> data(static_cast<std::size_t>(w) * h * ch);
  parallel_for(h, [&](int y) {
    float buf[3];
    for (int x = 0; x < w; ++x) {
      sample_bilinear(img, endpoint(f, x, y), std::span<float>(buf, ch));
      for (int c = 0; c < ch; ++c) data[(static_cast<std::size_t>(y) * w + x) * ch + c] = buf[c];
    }
  });
  return ErpImage(Image(w, h, ch, std::move(data)));
}

FlowField rotation_flow(const Rotation& r, int width, int height) {
  std::vector<PixelCoord> ends(static_cast<std::size_t>(width) * height);
  parallel_for(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      ends[static_cast<std::size_t>(y) * width + x] =
          vec_to_pix(r.rotate(pix_to_vec({double(x), double(y)}, width, height)), width, height);
    }
  });
  return flow_from_endpoints(width, height, ends);
}

}  // namespace omniflow
