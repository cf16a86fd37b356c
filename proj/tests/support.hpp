#pragma once

#include <cmath>
#include <Eigen/Geometry>
#include <random>
#include <vector>

#include "omniflow/backend.hpp"
#include "omniflow/erp.hpp"
#include "omniflow/tangent.hpp"
#include "omniflow/image.hpp"
#include "omniflow/sphere.hpp"

namespace testing {

using namespace omniflow;

// Smooth band-limited function of direction.
inline double sphere_field(const Vec3& d) {
  return 0.5 + 0.18 * std::sin(7.0 * d.x() + 1.3 * d.y()) * std::cos(5.0 * d.z() - 0.4) +
         0.12 * std::sin(11.0 * d.y() + 3.0 * d.x() * d.z()) + 0.08 * std::cos(9.0 * d.z() + 6.0 * d.x());
}

inline ErpImage sphere_texture(int w, int channels = 1) {
  const int h = w / 2;
  Image img(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec3 d = pix_to_vec({double(x), double(y)}, w, h);
      for (int c = 0; c < channels; ++c) img.at(x, y, c) = float(sphere_field(d) * (1.0 - 0.1 * c));
    }
  return ErpImage(std::move(img));
}

// Textured raster periodic in both axes with periods w and h.
inline Image periodic_texture(int w, int h, unsigned seed = 7) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  struct Wave {
    int kx, ky;
    double ph, amp;
  };
  std::vector<Wave> waves;
  for (int kx = 1; kx <= 9; ++kx)
    for (int ky = 1; ky <= 9; ++ky) waves.push_back({kx, ky, phase(rng), 0.6 / (kx + ky)});
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.5;
      for (const auto& wv : waves) {
        v += 0.25 * wv.amp * std::sin(6.283185307179586 * (wv.kx * double(x) / w + wv.ky * double(y) / h) + wv.ph);
        v += 0.25 * wv.amp * std::sin(6.283185307179586 * (wv.ky * double(x) / w - wv.kx * double(y) / h) + 2 * wv.ph);
      }
      img.at(x, y) = float(v);
    }
  return img;
}

inline Image shift_periodic(const Image& a, int sx, int sy) {
  // b(x, y) = a(x - sx, y - sy): content moves by (+sx, +sy).
  Image b(a.width(), a.height(), a.channels());
  const int w = a.width(), h = a.height();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < a.channels(); ++c) b.at(x, y, c) = a.at(((x - sx) % w + w) % w, ((y - sy) % h + h) % h, c);
  return b;
}

inline double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Rotation random_rotation(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return Rotation::from_axis_angle(random_unit(rng), max_angle * u(rng));
}

// Exact tangent-raster flow of a spherical motion d -> motion(d) on one patch.
template <typename Motion>
PerspFlow projected_flow(const TangentPatch& patch, Motion&& motion) {
  const int res = patch.res();
  PerspFlow f(res, res);
  for (int r = 0; r < res; ++r)
    for (int c = 0; c < res; ++c) {
      const double x = patch.col_to_plane(c), y = patch.row_to_plane(r);
      const Vec3 d = patch.unproject({x, y});
      PlanePoint q;
      if (!patch.project(motion(d), q)) continue;
      f.du[f.index(c, r)] = patch.plane_to_col(q.x) - c;
      f.dv[f.index(c, r)] = patch.plane_to_row(q.y) - r;
    }
  return f;
}

}  // namespace testing
