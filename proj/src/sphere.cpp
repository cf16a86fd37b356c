#include "omniflow/sphere.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "omniflow/error.hpp"

namespace omniflow {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * kPi;
  double r = a - two_pi * std::floor((a + kPi) / two_pi);
  if (r >= kPi) r -= two_pi;
  if (r < -kPi) r += two_pi;
  return r;
}

Vec3 sph_to_vec(const SphericalCoord& c) {
  const double cp = std::cos(c.phi);
  return {cp * std::sin(c.theta), std::sin(c.phi), cp * std::cos(c.theta)};
}

SphericalCoord vec_to_sph(const Vec3& v) {
  const double y = std::clamp(v.y(), -1.0, 1.0);
  SphericalCoord c;
  c.phi = std::asin(y);
  // Horizontal component vanishes at the poles; pin theta there.
  if (v.x() * v.x() + v.z() * v.z() < 1e-30) {
    c.theta = 0.0;
  } else {
    c.theta = wrap_angle(std::atan2(v.x(), v.z()));
  }
  return c;
}

double geodesic(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

double arc_angle_at(const Vec3& s, const Vec3& a, const Vec3& b) {
  constexpr double kMinArc = 1e-8;
  if (geodesic(s, a) < kMinArc || geodesic(s, b) < kMinArc) return 0.0;
  Vec3 ta = a - a.dot(s) * s;
  Vec3 tb = b - b.dot(s) * s;
  const double na = ta.norm();
  const double nb = tb.norm();
  // Antipodal endpoints have no defined tangent direction.
  if (na < 1e-300 || nb < 1e-300) return 0.0;
  ta /= na;
  tb /= nb;
  return std::atan2(ta.cross(tb).norm(), ta.dot(tb));
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  const Mat3 gram = m.transpose() * m - Mat3::Identity();
  const double det = m.determinant();
  if (gram.cwiseAbs().maxCoeff() > 1e-10 || std::abs(det - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "matrix is not a proper rotation (det = " << det << ")";
    throw ConfigError(os.str());
  }
}

Rotation Rotation::about_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return {m, Unchecked{}};
}

Rotation Rotation::about_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return {m, Unchecked{}};
}

Rotation Rotation::about_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return {m, Unchecked{}};
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw ConfigError("rotation axis must be non-zero");
  return {Eigen::AngleAxisd(angle, axis / n).toRotationMatrix(), Unchecked{}};
}

Rotation Rotation::from_euler_zyx(double z, double y, double x) {
  return about_z(z) * about_y(y) * about_x(x);
}

Rotation Rotation::nearest(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0;
  return {u * d * v.transpose(), Unchecked{}};
}

Rotation Rotation::compose(const Rotation& rhs) const { return {m_ * rhs.m_, Unchecked{}}; }

Rotation Rotation::transpose() const { return {m_.transpose(), Unchecked{}}; }

double Rotation::angle() const {
  return std::acos(std::clamp((m_.trace() - 1.0) / 2.0, -1.0, 1.0));
}

Vec3 Rotation::axis() const {
  Eigen::AngleAxisd aa(m_);
  if (aa.angle() == 0.0) return Vec3::UnitY();
  return aa.axis();
}

double rotation_between(const Rotation& a, const Rotation& b) {
  return a.transpose().compose(b).angle();
}

}  // namespace omniflow
