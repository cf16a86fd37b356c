#include "omniflow/vis.hpp"

#include <array>
#include <cmath>

#include "omniflow/error.hpp"
#include "omniflow/metrics.hpp"
#include "omniflow/sphere.hpp"

namespace omniflow {
namespace {

// Baker et al. colour wheel segments: red-yellow, yellow-green, green-cyan,
// cyan-blue, blue-magenta, magenta-red.
std::vector<std::array<double, 3>> make_wheel() {
  constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
  std::vector<std::array<double, 3>> wheel;
  for (int i = 0; i < RY; ++i) wheel.push_back({1.0, double(i) / RY, 0.0});
  for (int i = 0; i < YG; ++i) wheel.push_back({1.0 - double(i) / YG, 1.0, 0.0});
  for (int i = 0; i < GC; ++i) wheel.push_back({0.0, 1.0, double(i) / GC});
  for (int i = 0; i < CB; ++i) wheel.push_back({0.0, 1.0 - double(i) / CB, 1.0});
  for (int i = 0; i < BM; ++i) wheel.push_back({double(i) / BM, 0.0, 1.0});
  for (int i = 0; i < MR; ++i) wheel.push_back({1.0, 0.0, 1.0 - double(i) / MR});
  return wheel;
}

}  // namespace

Image flow_to_color(const FlowGrid& flow, double max_magnitude) {
  if (flow.width <= 0 || flow.height <= 0) throw DimensionError("empty flow field");
  std::vector<double> mag(flow.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(flow.du[i], flow.dv[i]);
  double norm = max_magnitude > 0.0 ? max_magnitude : percentile(mag, 99.0);
  if (!(norm > 0.0)) norm = 1.0;

  static const auto wheel = make_wheel();
  const int ncols = int(wheel.size());
  Image out(flow.width, flow.height, 3);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const std::size_t i = flow.index(x, y);
      const double rad = mag[i] / norm;
      const double a = std::atan2(-flow.dv[i], -flow.du[i]) / kPi;
      const double fk = (a + 1.0) / 2.0 * (ncols - 1);
      const int k0 = int(std::floor(fk)) % ncols;
      const int k1 = (k0 + 1) % ncols;
      const double f = fk - std::floor(fk);
      for (int c = 0; c < 3; ++c) {
        double col = (1.0 - f) * wheel[k0][c] + f * wheel[k1][c];
        col = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : col * 0.75;
        out.at(x, y, c) = float(col);
      }
    }
  }
  return out;
}

Image error_heatmap(const std::vector<double>& err, int width, int height, double max_error) {
  if (err.size() != std::size_t(width) * height) throw DimensionError("error map size mismatch");
  double norm = max_error > 0.0 ? max_error : percentile(err, 99.0);
  if (!(norm > 0.0)) norm = 1.0;
  Image out(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y) = float(1.0 - std::min(err[std::size_t(y) * width + x] / norm, 1.0));
  return out;
}

}  // namespace omniflow
