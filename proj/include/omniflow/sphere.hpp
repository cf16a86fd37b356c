#pragma once

#include <Eigen/Core>
#include <numbers>

namespace omniflow {

inline constexpr double kPi = std::numbers::pi;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Longitude theta in [-pi, pi), latitude phi in [-pi/2, pi/2].
//
// Axis convention used throughout: Y up, Z forward at the ERP image centre,
// X right. Theta is measured from +Z toward +X.
struct SphericalCoord {
  double theta = 0.0;
  double phi = 0.0;
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Unit direction for a spherical coordinate: (cos phi sin theta, sin phi, cos phi cos theta).
Vec3 sph_to_vec(const SphericalCoord& c);

/// Inverse of sph_to_vec. Returns theta = 0 at the poles.
SphericalCoord vec_to_sph(const Vec3& v);

/// Great-circle distance in [0, pi] between two unit vectors.
double geodesic(const Vec3& a, const Vec3& b);

/// Angle at vertex s between the great-circle arcs s->a and s->b.
///
/// Both arcs are projected onto the tangent plane at s and the planar angle
/// between them is returned. An arc shorter than 1e-8 rad yields 0.
double arc_angle_at(const Vec3& s, const Vec3& a, const Vec3& b);

// Proper rotation (orthonormal, det = +1).
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  // Throws ConfigError if m is not a proper rotation within 1e-10.
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return {}; }
  static Rotation about_x(double angle);
  static Rotation about_y(double angle);
  static Rotation about_z(double angle);
  static Rotation from_axis_angle(const Vec3& axis, double angle);
  // Intrinsic Z-Y-X composition: Rz(yaw_z) * Ry(yaw_y) * Rx(roll_x).
  static Rotation from_euler_zyx(double z, double y, double x);
  // Re-orthonormalizes a near-rotation through SVD.
  static Rotation nearest(const Mat3& m);

  const Mat3& matrix() const { return m_; }

  Vec3 rotate(const Vec3& v) const { return m_ * v; }
  Rotation compose(const Rotation& rhs) const;
  Rotation transpose() const;
  /// Rotation angle in [0, pi].
  double angle() const;
  /// Unit rotation axis; +Y for the identity.
  Vec3 axis() const;

  friend Rotation operator*(const Rotation& a, const Rotation& b) { return a.compose(b); }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;
};

inline Vec3 rotate(const Rotation& r, const Vec3& v) { return r.rotate(v); }
inline Rotation compose(const Rotation& a, const Rotation& b) { return a.compose(b); }
inline Rotation transpose(const Rotation& r) { return r.transpose(); }
inline double angle_of(const Rotation& r) { return r.angle(); }

/// Angle of the relative rotation a^T b.
double rotation_between(const Rotation& a, const Rotation& b);

}  // namespace omniflow
