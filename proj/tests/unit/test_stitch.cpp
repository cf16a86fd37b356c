#include <doctest.h>

#include <cmath>

#include "omniflow/error.hpp"
#include "omniflow/metrics.hpp"
#include "omniflow/stitch.hpp"
#include "support.hpp"

using namespace omniflow;

TEST_CASE("face weights") {
  const int n = 16;
  PerspImage a{Image(n, n, 3, 0.5f), {}};
  PerspImage b{Image(n, n, 3, 0.5f), {}};
  const PerspFlow zero(n, n);
  for (float w : face_weight(a, b, zero)) CHECK(w == doctest::Approx(1.0f));

  PerspImage lo{Image(n, n, 3, 0.0f), {}}, hi{Image(n, n, 3, 1.0f), {}};
  for (float w : face_weight(lo, hi, zero)) CHECK(w == doctest::Approx(std::exp(-1.0)));
  PerspImage q{Image(n, n, 3, 0.75f), {}};
  for (float w : face_weight(q, b, zero)) CHECK(w == doctest::Approx(std::exp(-0.25)).epsilon(1e-6));

  // Lookups leaving the raster get the floor.
  PerspFlow out(n, n);
  for (auto& v : out.du) v = 100.0;
  for (float w : face_weight(a, b, out)) CHECK(w == doctest::Approx(kWeightFloor));
  // Invalid source pixels get the floor.
  a.valid_mask.assign(std::size_t(n) * n, 1);
  a.valid_mask[5] = 0;
  const auto wm = face_weight(a, b, zero);
  CHECK(wm[5] == doctest::Approx(kWeightFloor));
  CHECK(wm[6] == doctest::Approx(1.0f));
  CHECK_THROWS_AS(face_weight(a, PerspImage{Image(n + 1, n, 3), {}}, zero), DimensionError);
}

TEST_CASE("face_flow_to_erp") {
  const int w = 1024, h = 512;
  const auto layout = make_layout(LayoutKind::Cube, 0.25, default_resolution(LayoutKind::Cube, 0.25, w));
  const TangentPatch& patch = layout.patches[1];
  const int res = patch.res();

  const FaceFlow zero{patch, PerspFlow(res, res), std::vector<float>(std::size_t(res) * res, 1.0f)};
  const ErpContribution cz = face_flow_to_erp(zero, w, h);
  const auto masks = coverage_mask(layout, w, h);
  for (std::size_t i = 0; i < cz.covered.size(); ++i) {
    CHECK(bool(cz.covered[i]) == bool(masks[1][i]));
    if (cz.covered[i]) {
      CHECK(std::abs(cz.du[i]) < 1e-9);
      CHECK(std::abs(cz.dv[i]) < 1e-9);
    } else {
      CHECK(cz.weight[i] == 0.0);
    }
  }

  const Rotation r = Rotation::from_euler_zyx(0.02, 0.06, -0.03);
  const FaceFlow exact{patch, testing::projected_flow(patch, [&](const Vec3& d) { return r.rotate(d); }),
                       std::vector<float>(std::size_t(res) * res, 1.0f)};
  const ErpContribution c = face_flow_to_erp(exact, w, h);
  const FlowField gt = rotation_flow(r, w, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < c.covered.size(); ++i) {
    if (!c.covered[i]) continue;
    worst = std::max({worst, std::abs(c.du[i] - gt.du[i]), std::abs(c.dv[i] - gt.dv[i])});
  }
  CHECK(worst < 0.5);
}

TEST_CASE("blend is a weighted mean") {
  const int w = 64, h = 32;
  const auto layout = make_layout(LayoutKind::Cube, 0.5, 32);
  std::vector<FaceFlow> faces;
  for (std::size_t f = 0; f < layout.patches.size(); ++f) {
    PerspFlow flow(32, 32);
    for (auto& v : flow.du) v = double(f) * 0.1;
    faces.push_back({layout.patches[f], flow, std::vector<float>(32 * 32, float(f + 1))});
  }
  const FlowField weighted = blend_faces(faces, w, h, true);
  const FlowField unit = blend_faces(faces, w, h, false);
  std::vector<ErpContribution> cs;
  for (const auto& f : faces) cs.push_back(face_flow_to_erp(f, w, h));
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    double su = 0, sw = 0, uu = 0, un = 0, lo = 1e9, hi = -1e9;
    for (const auto& c : cs) {
      if (!c.covered[i]) continue;
      su += c.weight[i] * c.du[i];
      sw += c.weight[i];
      uu += c.du[i];
      un += 1;
      lo = std::min(lo, c.du[i]);
      hi = std::max(hi, c.du[i]);
    }
    REQUIRE(sw > 0);
    CHECK(weighted.du[i] == doctest::Approx(su / sw));
    CHECK(unit.du[i] == doctest::Approx(uu / un));
    CHECK(weighted.du[i] >= lo - 1e-12);
    CHECK(weighted.du[i] <= hi + 1e-12);
  }

  std::vector<FaceFlow> partial(faces.begin(), faces.begin() + 4);
  CHECK_THROWS_AS(blend_faces(partial, w, h, true), CoverageError);
}

TEST_CASE("stitch_layout on image pairs") {
  const int w = 512;
  const ErpImage img = testing::sphere_texture(w, 3);
  const BuiltinBackend backend;
  const auto cube = make_layout(LayoutKind::Cube, 0.25, default_resolution(LayoutKind::Cube, 0.25, w));

  const FlowField same = stitch_layout(img, img, cube, backend);
  CHECK(percentile(flow_magnitudes(same), 99.0) < 0.005);

  const Rotation yaw = Rotation::about_y(5 * kPi / 180);
  const ErpImage dst = rotate_image(img, yaw.transpose());
  const FlowField f = stitch_layout(img, dst, cube, backend);
  // dst(x) = img(R^T x): content at d moves to R d.
  CHECK(sepe(f, rotation_flow(yaw, w, w / 2)) < 0.01);

  const FlowField u = stitch_layout(img, dst, cube, backend, StitchOptions{false});
  CHECK(sepe(u, rotation_flow(yaw, w, w / 2)) < 0.01);
  CHECK_FALSE(u == f);

  CHECK_THROWS_AS(stitch_layout(img, testing::sphere_texture(256, 3), cube, backend), DimensionError);
}

namespace {

class FailingBackend final : public FlowBackend {
 public:
  PerspFlow estimate(const Image&, const Image&, std::span<const std::uint8_t>) const override {
    throw ExternalError("backend exploded", "diag");
  }
  std::string name() const override { return "failing"; }
};

}  // namespace

TEST_CASE("backend errors name the face") {
  const ErpImage img = testing::sphere_texture(64);
  const auto cube = make_layout(LayoutKind::Cube, 0.25, 16);
  try {
    stitch_layout(img, img, cube, FailingBackend{});
    FAIL("expected ExternalError");
  } catch (const ExternalError& e) {
    CHECK(std::string(e.what()).find("cube face 0") != std::string::npos);
    CHECK(e.diagnostics() == "diag");
  }
}
