#include <doctest.h>

#include <cmath>
#include <random>

#include "omniflow/align.hpp"
#include "omniflow/error.hpp"
#include "omniflow/metrics.hpp"
#include "support.hpp"

using namespace omniflow;

TEST_CASE("fit_rotation") {
  const std::vector<Vec3> p{Vec3(1, 0, 0), Vec3(0, 0, 1)};
  const std::vector<Vec3> q{Vec3(0, 0, -1), Vec3(1, 0, 0)};
  const RotationEstimate e = fit_rotation(p, q);
  CHECK(rotation_between(e.rotation, Rotation::about_y(kPi / 2)) < 1e-7);
  CHECK(e.n_samples == 2);
  CHECK(e.residual < 1e-20);

  const std::vector<Vec3> line{Vec3(1, 0, 0), Vec3(1, 0, 0), Vec3(-1, 0, 0)};
  CHECK_THROWS_AS(fit_rotation(line, line), DegenerateError);
  CHECK_THROWS_AS(fit_rotation(std::span<const Vec3>(p).first(1), std::span<const Vec3>(q).first(1)), DegenerateError);
  CHECK_THROWS(fit_rotation(p, std::span<const Vec3>(q).first(1)));

  // Uniform reweighting (duplicating every sample) leaves R unchanged.
  std::mt19937_64 rng(1);
  std::vector<Vec3> a, b;
  const Rotation r = testing::random_rotation(rng, 0.5);
  for (int i = 0; i < 50; ++i) {
    a.push_back(testing::random_unit(rng));
    b.push_back((r.rotate(a.back()) + 0.05 * testing::random_unit(rng)).normalized());
  }
  std::vector<Vec3> a2 = a, b2 = b;
  a2.insert(a2.end(), a.begin(), a.end());
  b2.insert(b2.end(), b.begin(), b.end());
  CHECK((fit_rotation(a, b).rotation.matrix() - fit_rotation(a2, b2).rotation.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("estimate_rotation") {
  const int w = 256, h = 128;
  const RotationEstimate z = estimate_rotation(FlowField(w, h));
  CHECK(z.rotation.angle() < 1e-7);
  CHECK(z.residual < 1e-20);
  const Rotation ry = Rotation::about_y(kPi / 6);
  CHECK(rotation_between(estimate_rotation(rotation_flow(ry, w, h)).rotation, ry) < 1e-6);
  CHECK_THROWS_AS(estimate_rotation(FlowField(w, h), 0), ConfigError);
  CHECK_THROWS_AS(estimate_rotation(FlowField(8, 4), 100), DegenerateError);

  // Degradation is monotone in the noise level.
  const Rotation r = Rotation::from_euler_zyx(0.1, -0.2, 0.3);
  const FlowField clean = rotation_flow(r, w, h);
  double prev = -1.0;
  for (double sigma : {0.0, 0.5, 2.0, 8.0}) {
    double err = 0.0;
    for (unsigned seed = 0; seed < 4; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> n(0.0, sigma + 1e-300);
      FlowField f = clean;
      for (std::size_t i = 0; i < f.size(); ++i) {
        const int y = int(i / w);
        f.du[i] = wrap_normalize(f.du[i] + n(rng), w);
        f.dv[i] = std::clamp(f.dv[i] + n(rng), -0.5 - y, h - 0.5 - y);
      }
      err += rotation_between(estimate_rotation(f, 2).rotation, r);
    }
    CHECK(err >= prev);
    prev = err;
  }
}

TEST_CASE("align_target absorbs rotations") {
  const int w = 512, h = 256;
  const ErpImage src = testing::sphere_texture(w);
  CHECK(align_target(src, Rotation::identity()) == src);
  const Rotation r = Rotation::from_euler_zyx(0.15, 0.35, -0.1);
  const ErpImage dst = rotate_image(src, r.transpose());
  const RotationEstimate e = estimate_rotation(rotation_flow(r, w, h));
  const ErpImage aligned = align_target(dst, e.rotation);
  double mad = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mad += std::abs(aligned.at(x, y) - src.at(x, y));
  CHECK(mad / (w * h) < 0.02);
}

TEST_CASE("unrotate_flow") {
  const int w = 256, h = 128;
  std::mt19937_64 rng(2);
  FlowField f(w, h);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.du[i] = std::uniform_real_distribution<double>(-3, 3)(rng);
    f.dv[i] = std::clamp(std::uniform_real_distribution<double>(-3, 3)(rng), -0.5 - int(i / w), h - 0.5 - int(i / w));
  }
  CHECK(unrotate_flow(f, Rotation::identity(), Rotation::identity()) == f);

  const Rotation a = Rotation::about_y(0.4);
  CHECK(sepe(unrotate_flow(FlowField(w, h), a, Rotation::identity()), rotation_flow(a, w, h)) < 1e-6);
  const Rotation b = Rotation::about_x(-0.2);
  CHECK(sepe(unrotate_flow(FlowField(w, h), a, b), rotation_flow(a * b, w, h)) < 1e-6);
  unrotate_flow(FlowField(w, h), a, b).validate();
}

TEST_CASE("closed loop on a pure-rotation pair") {
  const int w = 512, h = 256;
  const ErpImage src = testing::sphere_texture(w);
  const Rotation gt = Rotation::from_euler_zyx(0.05, 0.2, 0.1);
  const ErpImage dst = rotate_image(src, gt.transpose());
  // Exact flow estimates at both stages.
  const Rotation r_bar = estimate_rotation(rotation_flow(gt, w, h)).rotation;
  const ErpImage a1 = align_target(dst, r_bar);
  const Rotation r_hat = estimate_rotation(FlowField(w, h)).rotation;
  const FlowField f = unrotate_flow(FlowField(w, h), r_bar, r_hat);
  CHECK(sepe(f, rotation_flow(gt, w, h)) < 1e-4);
  CHECK(rotation_between(r_bar * r_hat, gt) < 0.1 * kPi / 180);
  double mad = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mad += std::abs(a1.at(x, y) - src.at(x, y));
  CHECK(mad / (w * h) < 0.02);
}
