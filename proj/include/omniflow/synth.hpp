#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "omniflow/erp.hpp"
#include "omniflow/flow360.hpp"
#include "omniflow/sphere.hpp"

namespace omniflow {

// Camera-to-world pose. Camera space uses the ERP axis convention.
struct CameraPose {
  Vec3 position = Vec3::Zero();
  Rotation orientation;
};

enum class SceneKind { SphereTexture, BoxRoom };
enum class TextureKind { Checker, ValueNoise, Mixed };

struct SceneSpec {
  SceneKind kind = SceneKind::BoxRoom;
  std::uint64_t seed = 1;
  double room_half_size = 2.0;  // metres; the room is the cube [-a, a]^3
  TextureKind texture = TextureKind::Mixed;
  int channels = 3;
};

/// Ray cast through the room interior. Returns the hit point, or nothing if the
/// origin is not strictly inside the room.
std::optional<Vec3> intersect_room(double half_size, const Vec3& origin, const Vec3& dir);

/// Renders the scene as seen from `pose`, one sample per pixel centre.
/// Throws GeometryError for a box room if the camera is not inside it.
ErpImage render_erp(const SceneSpec& scene, const CameraPose& pose, int width);

/// Exact ground-truth flow from pose_t to pose_t1. Sphere scenes ignore
/// positions (pure rotation); box rooms reproject ray hits, which is
/// occlusion-free because the room is convex.
FlowField gt_flow(const SceneSpec& scene, const CameraPose& pose_t, const CameraPose& pose_t1, int width);

enum class PathKind { Circle, Line, Random };

/// Circle: 0.5 m radius, facing outward, 10 degree steps. Line: fixed
/// orientation, 0.2 m steps along +X centred on the origin. Random: positions
/// uniform in the centred 1 m cube, Z-Y-X Euler jitter uniform in +-10 degrees.
/// Throws ConfigError if n < 2 or a pose would leave a box room.
std::vector<CameraPose> camera_path(PathKind kind, const SceneSpec& scene, int n, std::uint64_t seed);

}  // namespace omniflow
