#include "omniflow/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "omniflow/error.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {
namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double hash01(std::uint64_t seed, std::int64_t a, std::int64_t b, std::int64_t c) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ std::uint64_t(a));
  h = mix64(h ^ std::uint64_t(b));
  h = mix64(h ^ std::uint64_t(c));
  return double(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Smooth lattice value noise in [0, 1].
double value_noise(std::uint64_t seed, const Vec3& p) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = std::int64_t(fx), iy = std::int64_t(fy), iz = std::int64_t(fz);
  const double tx = fade(p.x() - fx), ty = fade(p.y() - fy), tz = fade(p.z() - fz);
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
        acc += w * hash01(seed, ix + dx, iy + dy, iz + dz);
      }
  return acc;
}

struct Palette {
  std::array<double, 3> dark;
  std::array<double, 3> bright;
};

Palette palette(std::uint64_t seed, int surface) {
  Palette p;
  for (int c = 0; c < 3; ++c) {
    p.dark[c] = 0.08 + 0.3 * hash01(seed, 1000 + surface, c, 1);
    p.bright[c] = 0.6 + 0.32 * hash01(seed, 1000 + surface, c, 2);
  }
  return p;
}

struct Shading {
  double cell;  // smallest noise feature size, scene units
};

// Colour at a surface point; `checker_arg` is a signed product of sines whose
// sign pattern forms the checkerboard.
std::array<double, 3> shade(const SceneSpec& scene, int surface, const Vec3& p, double checker_arg,
                            const Shading& sh) {
  const std::uint64_t seed = mix64(scene.seed * 31 + std::uint64_t(surface));
  const double n = 0.5 * value_noise(seed, p / (4.0 * sh.cell)) +
                   0.3 * value_noise(seed + 1, p / (2.0 * sh.cell)) +
                   0.2 * value_noise(seed + 2, p / sh.cell);
  const double chk = 0.5 + 0.5 * std::tanh(3.0 * checker_arg);
  double k = n;
  switch (scene.texture) {
    case TextureKind::Checker: k = chk; break;
    case TextureKind::ValueNoise: k = n; break;
    case TextureKind::Mixed: k = 0.65 * n + 0.35 * chk; break;
  }
  const Palette pal = palette(scene.seed, surface);
  std::array<double, 3> rgb;
  for (int c = 0; c < 3; ++c) rgb[c] = pal.dark[c] + (pal.bright[c] - pal.dark[c]) * k;
  return rgb;
}

void check_inside(const SceneSpec& scene, const CameraPose& pose) {
  if (scene.kind != SceneKind::BoxRoom) return;
  if (!(scene.room_half_size > 0.0)) throw GeometryError("room half-size must be positive");
  if (pose.position.cwiseAbs().maxCoeff() >= scene.room_half_size) {
    throw GeometryError("camera position lies outside the room");
  }
}

std::array<double, 3> radiance(const SceneSpec& scene, const Vec3& origin, const Vec3& dir) {
  if (scene.kind == SceneKind::SphereTexture) {
    // Features of roughly 0.07 rad; checker cells about 0.3 rad across.
    constexpr double k = kPi / 0.3;
    const double arg = std::sin(k * dir.x() + 0.3) * std::sin(k * dir.y() + 0.7) * std::sin(k * dir.z() + 1.1);
    return shade(scene, 0, dir, arg, Shading{0.07});
  }
  const auto hit = intersect_room(scene.room_half_size, origin, dir);
  const Vec3 x = *hit;
  int axis = 0;
  x.cwiseAbs().maxCoeff(&axis);
  const int surface = 2 * axis + (x[axis] > 0.0 ? 1 : 0);
  const int ia = (axis + 1) % 3, ib = (axis + 2) % 3;
  constexpr double k = kPi / 0.5;
  return shade(scene, surface, x, std::sin(k * x[ia]) * std::sin(k * x[ib]), Shading{0.1});
}

Vec3 pixel_dir(int x, int y, int w, int h) { return pix_to_vec({double(x), double(y)}, w, h); }

}  // namespace

std::optional<Vec3> intersect_room(double half_size, const Vec3& origin, const Vec3& dir) {
  if (origin.cwiseAbs().maxCoeff() >= half_size) return std::nullopt;
  double t_hit = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (dir[k] == 0.0) continue;
    const double wall = dir[k] > 0.0 ? half_size : -half_size;
    t_hit = std::min(t_hit, (wall - origin[k]) / dir[k]);
  }
  return origin + t_hit * dir;
}

ErpImage render_erp(const SceneSpec& scene, const CameraPose& pose, int width) {
  check_erp_dims(width, width / 2);
  check_inside(scene, pose);
  if (scene.channels != 1 && scene.channels != 3) throw ConfigError("scene channels must be 1 or 3");
  const int w = width, h = width / 2, ch = scene.channels;
  Image img(w, h, ch);
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 d = pose.orientation.rotate(pixel_dir(x, y, w, h));
      const auto rgb = radiance(scene, pose.position, d);
      if (ch == 3) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = float(rgb[c]);
      } else {
        img.at(x, y) = float(0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]);
      }
    }
  });
  return ErpImage(std::move(img));
}

FlowField gt_flow(const SceneSpec& scene, const CameraPose& pose_t, const CameraPose& pose_t1, int width) {
  check_erp_dims(width, width / 2);
  check_inside(scene, pose_t);
  check_inside(scene, pose_t1);
  const int w = width, h = width / 2;
  std::vector<Vec3> ends(std::size_t(w) * h);
  const Mat3 to_t1 = pose_t1.orientation.matrix().transpose();
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 d_world = pose_t.orientation.rotate(pixel_dir(x, y, w, h));
      Vec3 e;
      if (scene.kind == SceneKind::SphereTexture) {
        e = to_t1 * d_world;
      } else {
        const Vec3 hit = *intersect_room(scene.room_half_size, pose_t.position, d_world);
        e = (to_t1 * (hit - pose_t1.position)).normalized();
      }
      ends[std::size_t(y) * w + x] = e;
    }
  });
  return flow_from_directions(w, h, ends);
}

std::vector<CameraPose> camera_path(PathKind kind, const SceneSpec& scene, int n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("camera path needs at least 2 poses");
  std::vector<CameraPose> poses;
  poses.reserve(n);
  constexpr double deg = kPi / 180.0;
  switch (kind) {
    case PathKind::Circle:
      for (int k = 0; k < n; ++k) {
        const double a = k * 10.0 * deg;
        poses.push_back({Vec3(0.5 * std::sin(a), 0.0, 0.5 * std::cos(a)), Rotation::about_y(a)});
      }
      break;
    case PathKind::Line:
      for (int k = 0; k < n; ++k) {
        poses.push_back({Vec3(0.2 * (k - 0.5 * (n - 1)), 0.0, 0.0), Rotation::identity()});
      }
      break;
    case PathKind::Random: {
      std::mt19937_64 rng(seed);
      const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * double(rng() >> 11) * 0x1.0p-53; };
      for (int k = 0; k < n; ++k) {
        // One draw per statement keeps the sequence independent of argument evaluation order.
        Vec3 p;
        for (int c = 0; c < 3; ++c) p[c] = uniform(-0.5, 0.5);
        const double jz = uniform(-10.0, 10.0) * deg;
        const double jy = uniform(-10.0, 10.0) * deg;
        const double jx = uniform(-10.0, 10.0) * deg;
        poses.push_back({p, Rotation::from_euler_zyx(jz, jy, jx)});
      }
      break;
    }
  }
  if (scene.kind == SceneKind::BoxRoom) {
    for (const auto& p : poses) {
      if (p.position.cwiseAbs().maxCoeff() >= scene.room_half_size) {
        throw ConfigError("camera path leaves the room; use fewer poses or a larger room");
      }
    }
  }
  return poses;
}

}  // namespace omniflow
