#include "omniflow/tangent.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "omniflow/error.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {
namespace {

constexpr double kHorizonEps = 1e-6;

}  // namespace

PlanePoint gnomonic_fwd(const SphericalCoord& c, const SphericalCoord& center) {
  const double dtheta = c.theta - center.theta;
  const double sp = std::sin(c.phi), cp = std::cos(c.phi);
  const double s1 = std::sin(center.phi), c1 = std::cos(center.phi);
  const double denom = s1 * sp + c1 * cp * std::cos(dtheta);
  if (denom <= kHorizonEps) throw HemisphereError("point is not in the tangent plane's hemisphere");
  return {cp * std::sin(dtheta) / denom, (c1 * sp - s1 * cp * std::cos(dtheta)) / denom};
}

SphericalCoord gnomonic_inv(double x, double y, const SphericalCoord& center) {
  const double rho = std::hypot(x, y);
  if (rho == 0.0) return center;
  const double c = std::atan(rho);
  const double sc = std::sin(c), cc = std::cos(c);
  const double s1 = std::sin(center.phi), c1 = std::cos(center.phi);
  SphericalCoord out;
  out.phi = std::asin(std::clamp(cc * s1 + y * sc * c1 / rho, -1.0, 1.0));
  out.theta = wrap_angle(center.theta + std::atan2(x * sc, rho * c1 * cc - y * s1 * sc));
  return out;
}

TangentPatch::TangentPatch(SphericalCoord center, double half_extent_x, double half_extent_y,
                           int res, double padding)
    : center_(center), half_x_(half_extent_x), half_y_(half_extent_y), res_(res), padding_(padding) {
  if (!(half_x_ > 0.0) || !(half_y_ > 0.0)) throw ConfigError("patch half extents must be positive");
  if (res_ < 16) throw ConfigError("tangent resolution must be >= 16");
  if (!(padding_ >= 0.0)) throw ConfigError("padding must be >= 0");
  const double st = std::sin(center.theta), ct = std::cos(center.theta);
  const double s1 = std::sin(center.phi), c1 = std::cos(center.phi);
  axis_ = sph_to_vec(center);
  east_ = Vec3(ct, 0.0, -st);
  north_ = Vec3(-s1 * st, c1, -s1 * ct);
}

bool TangentPatch::project(const Vec3& d, PlanePoint& out) const {
  const double denom = d.dot(axis_);
  if (denom <= kHorizonEps) return false;
  out.x = d.dot(east_) / denom;
  out.y = d.dot(north_) / denom;
  return true;
}

Vec3 TangentPatch::unproject(const PlanePoint& p) const {
  return (axis_ + p.x * east_ + p.y * north_).normalized();
}

bool TangentPatch::inside_padded(const PlanePoint& p) const {
  constexpr double kSlack = 1e-12;
  return std::abs(p.x) <= padded_half_x() + kSlack && std::abs(p.y) <= padded_half_y() + kSlack;
}

const char* to_string(LayoutKind kind) {
  return kind == LayoutKind::Cube ? "cube" : "icosahedron";
}

std::vector<Vec3> icosahedron_vertices() {
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v;
  for (double a : {-1.0, 1.0}) {
    for (double b : {-g, g}) {
      v.emplace_back(0.0, a, b);
      v.emplace_back(a, b, 0.0);
      v.emplace_back(b, 0.0, a);
    }
  }
  for (auto& p : v) p.normalize();

  // Bring (0, 1, g) to the north pole.
  const Vec3 top = Vec3(0.0, 1.0, g).normalized();
  const Mat3 to_pole = Eigen::Quaterniond::FromTwoVectors(top, Vec3::UnitY()).toRotationMatrix();
  for (auto& p : v) p = to_pole * p;

  // Upper ring: the five vertices adjacent to the pole. Spin about Y so the
  // midpoint of two neighbours sits on theta = 0.
  std::vector<double> ring;
  for (const auto& p : v) {
    if (p.y() > 0.1 && p.y() < 0.9) ring.push_back(std::atan2(p.x(), p.z()));
  }
  std::sort(ring.begin(), ring.end());
  const double spin = -0.5 * (ring[0] + ring[1]);
  const Mat3 about_y = Rotation::about_y(spin).matrix();
  for (auto& p : v) {
    p = about_y * p;
    // Snap the pole exactly.
    if (p.y() > 1.0 - 1e-12) p = Vec3::UnitY();
    if (p.y() < -1.0 + 1e-12) p = -Vec3::UnitY();
  }
  return v;
}

namespace {

std::vector<std::array<int, 3>> icosahedron_faces(const std::vector<Vec3>& v) {
  double edge = 1e9;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) edge = std::min(edge, (v[i] - v[j]).norm());
  auto adjacent = [&](int a, int b) { return std::abs((v[a] - v[b]).norm() - edge) < 1e-9; };
  std::vector<std::array<int, 3>> faces;
  const int n = static_cast<int>(v.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        if (adjacent(i, j) && adjacent(j, k) && adjacent(i, k)) faces.push_back({i, j, k});
  return faces;
}

}  // namespace

TangentLayout make_layout(LayoutKind kind, double padding, int res) {
  if (!(padding >= 0.0 && padding <= 1.0)) throw ConfigError("padding must lie in [0, 1]");
  if (res < 16) throw ConfigError("tangent resolution must be >= 16");

  TangentLayout layout;
  layout.kind = kind;
  layout.padding = padding;

  if (kind == LayoutKind::Cube) {
    const std::array<SphericalCoord, 6> centers = {{{0.0, 0.0},
                                                    {kPi / 2, 0.0},
                                                    {-kPi, 0.0},
                                                    {-kPi / 2, 0.0},
                                                    {0.0, kPi / 2},
                                                    {0.0, -kPi / 2}}};
    for (const auto& c : centers) layout.patches.emplace_back(c, 1.0, 1.0, res, padding);
    return layout;
  }

  const auto verts = icosahedron_vertices();
  auto faces = icosahedron_faces(verts);
  struct Face {
    SphericalCoord center;
    double half;
  };
  std::vector<Face> built;
  for (const auto& f : faces) {
    const Vec3 centroid = (verts[f[0]] + verts[f[1]] + verts[f[2]]).normalized();
    Face face{vec_to_sph(centroid), 0.0};
    for (int idx : f) {
      const PlanePoint p = gnomonic_fwd(vec_to_sph(verts[idx]), face.center);
      face.half = std::max({face.half, std::abs(p.x), std::abs(p.y)});
    }
    built.push_back(face);
  }
  // North to south, then west to east.
  std::sort(built.begin(), built.end(), [](const Face& a, const Face& b) {
    const auto ka = std::make_tuple(-std::round(a.center.phi * 1e6), std::round(a.center.theta * 1e6));
    const auto kb = std::make_tuple(-std::round(b.center.phi * 1e6), std::round(b.center.theta * 1e6));
    return ka < kb;
  });
  for (const auto& f : built) layout.patches.emplace_back(f.center, f.half, f.half, res, padding);
  return layout;
}

int default_resolution(LayoutKind kind, double padding, int erp_width) {
  double half_angle = kPi / 4.0;
  if (kind == LayoutKind::Icosahedron) {
    // Angular radius of an icosahedron face's circumcircle.
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    const Vec3 a = Vec3(0, 1, g).normalized(), b = Vec3(0, -1, g).normalized(),
               c = Vec3(g, 0, 1).normalized();
    half_angle = geodesic((a + b + c).normalized(), a);
  }
  return std::max(16, static_cast<int>(std::lround(erp_width * (1.0 + padding) * half_angle / kPi)));
}

PerspImage erp_to_tangent(const ErpImage& img, const TangentPatch& patch) {
  const int res = patch.res();
  const int ch = img.channels();
  PerspImage out{Image(res, res, ch), std::vector<std::uint8_t>(static_cast<std::size_t>(res) * res, 0)};
  const int w = img.width();
  const int h = img.height();
  parallel_for(res, [&](int row) {
    float buf[3];
    const double y = patch.row_to_plane(row);
    for (int col = 0; col < res; ++col) {
      const Vec3 d = patch.unproject({patch.col_to_plane(col), y});
      PlanePoint check;
      const bool valid = patch.project(d, check);
      out.valid_mask[static_cast<std::size_t>(row) * res + col] = valid ? 1 : 0;
      if (!valid) continue;
      sample_bilinear(img, vec_to_pix(d, w, h), std::span<float>(buf, ch));
      for (int c = 0; c < ch; ++c) out.image.at(col, row, c) = buf[c];
    }
  });
  return out;
}

std::vector<std::vector<std::uint8_t>> coverage_mask(const TangentLayout& layout, int width,
                                                     int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<std::vector<std::uint8_t>> masks(layout.patches.size(), std::vector<std::uint8_t>(n, 0));
  std::vector<std::uint8_t> covered(n, 0);
  parallel_for(height, [&](int y) {
    for (int x = 0; x < width; ++x) {
      const Vec3 d = pix_to_vec({double(x), double(y)}, width, height);
      const std::size_t idx = static_cast<std::size_t>(y) * width + x;
      for (std::size_t f = 0; f < layout.patches.size(); ++f) {
        PlanePoint p;
        if (layout.patches[f].project(d, p) && layout.patches[f].inside_padded(p)) {
          masks[f][idx] = 1;
          covered[idx] = 1;
        }
      }
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!covered[i]) {
      throw CoverageError("layout leaves ERP pixel " + std::to_string(i % width) + "," +
                          std::to_string(i / width) + " uncovered");
    }
  }
  return masks;
}

}  // namespace omniflow
