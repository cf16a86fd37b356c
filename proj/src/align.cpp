#include "omniflow/align.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <vector>

#include "omniflow/error.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {

RotationEstimate fit_rotation(std::span<const Vec3> from, std::span<const Vec3> to) {
  if (from.size() != to.size()) throw DimensionError("correspondence lists differ in length");
  Mat3 cov = Mat3::Zero();
  for (std::size_t k = 0; k < from.size(); ++k) cov += from[k] * to[k].transpose();

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) < 1e-9 * s(0)) {
    throw DegenerateError("correspondences are collinear; rotation is not determined");
  }
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  // Polish away rounding so the result satisfies the rotation invariants exactly.
  const Rotation r = Rotation::nearest(v * d * u.transpose());

  double sq = 0.0;
  for (std::size_t k = 0; k < from.size(); ++k) sq += (r.rotate(from[k]) - to[k]).squaredNorm();
  return {r, from.empty() ? 0.0 : sq / double(from.size()), int(from.size())};
}

RotationEstimate estimate_rotation(const FlowField& f, int stride) {
  if (stride < 1) throw ConfigError("rotation stride must be >= 1");
  std::vector<Vec3> from, to;
  for (int y = 0; y < f.height; y += stride) {
    for (int x = 0; x < f.width; x += stride) {
      from.push_back(pix_to_vec({double(x), double(y)}, f.width, f.height));
      to.push_back(endpoint_dir(f, x, y));
    }
  }
  if (from.size() < 3) throw DegenerateError("need at least 3 flow samples to fit a rotation");
  return fit_rotation(from, to);
}

ErpImage align_target(const ErpImage& target, const Rotation& r) { return rotate_image(target, r); }

FlowField unrotate_flow(const FlowField& f_tilde, const Rotation& r_bar, const Rotation& r_hat) {
  const Rotation c = r_bar * r_hat;
  if (c.matrix() == Mat3::Identity()) return f_tilde;
  const int w = f_tilde.width, h = f_tilde.height;
  std::vector<Vec3> ends(std::size_t(w) * h);
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) ends[std::size_t(y) * w + x] = c.rotate(endpoint_dir(f_tilde, x, y));
  });
  return flow_from_directions(w, h, ends);
}

}  // namespace omniflow
