#include "omniflow/erp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "omniflow/error.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {
namespace {

// Coordinates within this distance of an integer are treated as exact pixel
// centres so identity and grid-aligned warps reproduce samples bit-for-bit.
constexpr double kSnap = 1e-9;

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < kSnap ? r : x;
}

}  // namespace

void check_erp_dims(int w, int h) {
  if (w < 8 || w % 2 != 0 || h != w / 2) {
    throw DimensionError("ERP raster must have even width >= 8 and height = width / 2 (got " +
                         std::to_string(w) + "x" + std::to_string(h) + ")");
  }
}

ErpImage::ErpImage(Image img) : img_(std::move(img)) {
  check_erp_dims(img_.width(), img_.height());
  for (float s : img_.data()) {
    if (!std::isfinite(s)) throw ConfigError("ERP image contains non-finite samples");
  }
}

ErpImage::ErpImage(int width, int channels, float fill)
    : ErpImage(Image(width, width / 2, channels, fill)) {}

double wrap_column(double u, int width) {
  double r = std::fmod(u, static_cast<double>(width));
  if (r < 0.0) r += width;
  if (r >= width) r -= width;
  return r;
}

SphericalCoord pix_to_sph(const PixelCoord& p, int width, int height) {
  return {2.0 * kPi * (p.u + 0.5) / width - kPi, kPi / 2.0 - kPi * (p.v + 0.5) / height};
}

PixelCoord sph_to_pix(const SphericalCoord& c, int width, int height) {
  const double u = (c.theta + kPi) * width / (2.0 * kPi) - 0.5;
  const double v = (kPi / 2.0 - c.phi) * height / kPi - 0.5;
  return {wrap_column(u, width), v};
}

Vec3 pix_to_vec(const PixelCoord& p, int width, int height) {
  return sph_to_vec(pix_to_sph(p, width, height));
}

PixelCoord vec_to_pix(const Vec3& v, int width, int height) {
  return sph_to_pix(vec_to_sph(v), width, height);
}

void sample_bilinear(const ErpImage& img, const PixelCoord& p, std::span<float> out) {
  const int w = img.width();
  const int h = img.height();
  const double u = wrap_column(snap(p.u), w);
  const double v = std::clamp(snap(p.v), 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(u), w - 1);
  const int x1 = (x0 + 1) % w;
  const int y0 = std::min(static_cast<int>(v), h - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  for (int c = 0; c < img.channels(); ++c) {
    if (fx == 0.0 && fy == 0.0) {
      out[c] = img.at(x0, y0, c);
      continue;
    }
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    out[c] = static_cast<float>((1.0 - fy) * top + fy * bot);
  }
}

float sample_bilinear(const ErpImage& img, const PixelCoord& p, int channel) {
  float buf[3];
  sample_bilinear(img, p, std::span<float>(buf, img.channels()));
  return buf[channel];
}

ErpImage rotate_image(const ErpImage& img, const Rotation& r) {
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  std::vector<float> data(static_cast<std::size_t>(w) * h * ch);
  parallel_for(h, [&](int y) {
    float buf[3];
    for (int x = 0; x < w; ++x) {
      const Vec3 d = r.rotate(pix_to_vec({double(x), double(y)}, w, h));
      sample_bilinear(img, vec_to_pix(d, w, h), std::span<float>(buf, ch));
      for (int c = 0; c < ch; ++c) data[(static_cast<std::size_t>(y) * w + x) * ch + c] = buf[c];
    }
  });
  return ErpImage(Image(w, h, ch, std::move(data)));
}

}  // namespace omniflow
