#pragma once

#include <span>

#include "omniflow/image.hpp"
#include "omniflow/sphere.hpp"

namespace omniflow {

// Continuous ERP raster position; integer values are pixel centres.
struct PixelCoord {
  double u = 0.0;  // column, wraps modulo W
  double v = 0.0;  // row, does not wrap
};

// Equirectangular panorama: W even and >= 8, H = W / 2, horizontal wrap.
class ErpImage {
 public:
  ErpImage() = default;
  // Throws DimensionError on a bad shape and ConfigError on non-finite samples.
  explicit ErpImage(Image img);
  ErpImage(int width, int channels, float fill = 0.0f);

  int width() const { return img_.width(); }
  int height() const { return img_.height(); }
  int channels() const { return img_.channels(); }
  const Image& image() const { return img_; }

  float at(int x, int y, int c = 0) const { return img_.at(x, y, c); }

  friend bool operator==(const ErpImage&, const ErpImage&) = default;

 private:
  Image img_;
};

/// Throws DimensionError unless w is even, >= 8 and h == w / 2.
void check_erp_dims(int w, int h);

/// Pixel-centre convention: theta = 2 pi (u + 0.5) / W - pi, phi = pi/2 - pi (v + 0.5) / H.
SphericalCoord pix_to_sph(const PixelCoord& p, int width, int height);
/// Inverse of pix_to_sph, with u reduced into [0, W).
PixelCoord sph_to_pix(const SphericalCoord& c, int width, int height);

Vec3 pix_to_vec(const PixelCoord& p, int width, int height);
PixelCoord vec_to_pix(const Vec3& v, int width, int height);

/// Reduces u into [0, W).
double wrap_column(double u, int width);

/// Bilinear sample: columns wrap modulo W, rows clamp to [0, H-1].
/// `out` receives one value per channel.
void sample_bilinear(const ErpImage& img, const PixelCoord& p, std::span<float> out);
float sample_bilinear(const ErpImage& img, const PixelCoord& p, int channel = 0);

/// The forward rotation warp: out(x) = img(P(R * P^-1(x))).
ErpImage rotate_image(const ErpImage& img, const Rotation& r);

}  // namespace omniflow
