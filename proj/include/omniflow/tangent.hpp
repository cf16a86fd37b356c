#pragma once

#include <cstdint>
#include <vector>

#include "omniflow/erp.hpp"
#include "omniflow/image.hpp"
#include "omniflow/sphere.hpp"

namespace omniflow {

// Coordinates on a tangent plane at unit distance from the sphere centre.
// x points east, y points north (toward increasing latitude).
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
};

/// Gnomonic projection of c onto the plane tangent at `center`.
/// Throws HemisphereError when c is within 1e-6 of the plane's horizon or behind it.
PlanePoint gnomonic_fwd(const SphericalCoord& c, const SphericalCoord& center);
/// Inverse gnomonic projection; total for finite inputs.
SphericalCoord gnomonic_inv(double x, double y, const SphericalCoord& center);

// A square tangent raster. Pixel (col, row) has its centre at
//   x = (-1 + (2 col + 1) / res) * padded_half_x
//   y = ( 1 - (2 row + 1) / res) * padded_half_y
// so rows run from north to south like an ordinary image.
class TangentPatch {
 public:
  TangentPatch(SphericalCoord center, double half_extent_x, double half_extent_y, int res,
               double padding);

  const SphericalCoord& center() const { return center_; }
  double half_extent_x() const { return half_x_; }
  double half_extent_y() const { return half_y_; }
  double padded_half_x() const { return half_x_ * (1.0 + padding_); }
  double padded_half_y() const { return half_y_ * (1.0 + padding_); }
  double padding() const { return padding_; }
  int res() const { return res_; }

  // Plane units per raster pixel.
  double scale_x() const { return 2.0 * padded_half_x() / res_; }
  double scale_y() const { return 2.0 * padded_half_y() / res_; }

  /// Projects a unit direction; false if it lies within 1e-6 of the horizon or behind.
  bool project(const Vec3& d, PlanePoint& out) const;
  Vec3 unproject(const PlanePoint& p) const;

  bool inside_padded(const PlanePoint& p) const;

  // Continuous raster coordinates (pixel centres at integers).
  double plane_to_col(double x) const { return (x / padded_half_x() + 1.0) * 0.5 * res_ - 0.5; }
  double plane_to_row(double y) const { return (1.0 - y / padded_half_y()) * 0.5 * res_ - 0.5; }
  double col_to_plane(double col) const { return (-1.0 + (2.0 * col + 1.0) / res_) * padded_half_x(); }
  double row_to_plane(double row) const { return (1.0 - (2.0 * row + 1.0) / res_) * padded_half_y(); }

 private:
  SphericalCoord center_;
  double half_x_;
  double half_y_;
  int res_;
  double padding_;
  Vec3 axis_;
  Vec3 east_;
  Vec3 north_;
};

enum class LayoutKind { Cube, Icosahedron };

const char* to_string(LayoutKind kind);

struct TangentLayout {
  LayoutKind kind = LayoutKind::Cube;
  double padding = 0.0;
  std::vector<TangentPatch> patches;
};

/// Cube: 6 faces with base half-extent 1. Icosahedron: 20 faces at the face
/// centroids of a regular icosahedron with a vertex at the north pole and an
/// edge midpoint on the theta = 0 meridian.
/// Throws ConfigError unless padding is in [0, 1] and res >= 16.
TangentLayout make_layout(LayoutKind kind, double padding, int res);

/// Raster size matching ERP equatorial sampling for a layout at this padding:
/// round(W (1 + p) h / pi) with h the face's unpadded half-angle.
int default_resolution(LayoutKind kind, double padding, int erp_width);

/// Unit vertices of the icosahedron used by make_layout, in layout orientation.
std::vector<Vec3> icosahedron_vertices();

// Perspective raster sampled from an ERP image on a tangent patch.
struct PerspImage {
  Image image;
  std::vector<std::uint8_t> valid_mask;
};

PerspImage erp_to_tangent(const ErpImage& img, const TangentPatch& patch);

/// Per-face ERP masks: true where the pixel direction falls inside the face's
/// padded extent. Throws CoverageError if any ERP pixel is left uncovered.
std::vector<std::vector<std::uint8_t>> coverage_mask(const TangentLayout& layout, int width,
                                                     int height);

}  // namespace omniflow
