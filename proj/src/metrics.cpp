#include "omniflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "omniflow/error.hpp"
#include "omniflow/parallel.hpp"

namespace omniflow {
namespace {

void require_same(const FlowField& a, const FlowField& b) {
  if (!a.same_shape(b)) throw DimensionError("flow fields differ in shape");
}

// Sum rows in parallel, then merge in row order.
template <typename RowFn>
double ordered_sum(int rows, RowFn&& row_sum) {
  std::vector<double> partial(rows, 0.0);
  parallel_for(rows, [&](int y) { partial[y] = row_sum(y); });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double mean_over_rows(const std::vector<double>& err, int w, int y0, int y1) {
  if (y1 <= y0) return 0.0;
  double total = 0.0;
  for (int y = y0; y < y1; ++y)
    for (int x = 0; x < w; ++x) total += err[std::size_t(y) * w + x];
  return total / (double(y1 - y0) * w);
}

}  // namespace

std::vector<double> endpoint_error_map(const FlowField& est, const FlowField& gt) {
  require_same(est, gt);
  std::vector<double> err(est.size());
  parallel_for(est.height, [&](int y) {
    for (int x = 0; x < est.width; ++x) {
      err[est.index(x, y)] = geodesic(endpoint_dir(est, x, y), endpoint_dir(gt, x, y));
    }
  });
  return err;
}

double sepe(const FlowField& est, const FlowField& gt) {
  const auto err = endpoint_error_map(est, gt);
  const double total = ordered_sum(est.height, [&](int y) {
    double s = 0.0;
    for (int x = 0; x < est.width; ++x) s += err[est.index(x, y)];
    return s;
  });
  return total / double(err.size());
}

double srms(const FlowField& est, const FlowField& gt) {
  const auto err = endpoint_error_map(est, gt);
  const double total = ordered_sum(est.height, [&](int y) {
    double s = 0.0;
    for (int x = 0; x < est.width; ++x) s += err[est.index(x, y)] * err[est.index(x, y)];
    return s;
  });
  return std::sqrt(total / double(err.size()));
}

double saae(const FlowField& est, const FlowField& gt) {
  require_same(est, gt);
  const double total = ordered_sum(est.height, [&](int y) {
    double s = 0.0;
    for (int x = 0; x < est.width; ++x) {
      const Vec3 src = pix_to_vec({double(x), double(y)}, est.width, est.height);
      s += arc_angle_at(src, endpoint_dir(est, x, y), endpoint_dir(gt, x, y));
    }
    return s;
  });
  return total / double(est.size());
}

PlanarMetrics planar_metrics(const FlowField& est, const FlowField& gt) {
  require_same(est, gt);
  const int w = est.width;
  double epe = 0.0, aae = 0.0, sq = 0.0;
  std::vector<double> pe(est.height), pa(est.height), ps(est.height);
  parallel_for(est.height, [&](int y) {
    double e = 0.0, a = 0.0, s = 0.0;
    for (int x = 0; x < w; ++x) {
      const std::size_t i = est.index(x, y);
      const double ue = wrap_normalize(est.du[i], w), ug = wrap_normalize(gt.du[i], w);
      const double du = wrap_normalize(ue - ug, w), dv = est.dv[i] - gt.dv[i];
      const double d2 = du * du + dv * dv;
      e += std::sqrt(d2);
      s += d2;
      const double num = ue * ug + est.dv[i] * gt.dv[i] + 1.0;
      const double den = std::sqrt((ue * ue + est.dv[i] * est.dv[i] + 1.0) * (ug * ug + gt.dv[i] * gt.dv[i] + 1.0));
      a += std::acos(std::clamp(num / den, -1.0, 1.0));
    }
    pe[y] = e;
    pa[y] = a;
    ps[y] = s;
  });
  for (int y = 0; y < est.height; ++y) {
    epe += pe[y];
    aae += pa[y];
    sq += ps[y];
  }
  const double n = double(est.size());
  return {epe / n, aae / n, std::sqrt(sq / n)};
}

RegionSepe region_breakdown(const FlowField& est, const FlowField& gt, double polar_fraction) {
  if (!(polar_fraction >= 0.0 && polar_fraction <= 0.5)) throw ConfigError("polar fraction must lie in [0, 0.5]");
  const auto err = endpoint_error_map(est, gt);
  const int h = est.height, w = est.width;
  const int band = int(std::lround(polar_fraction * h));
  RegionSepe r;
  r.polar_rows_per_side = band;
  if (band > 0) {
    const double top = mean_over_rows(err, w, 0, band);
    const double bottom = mean_over_rows(err, w, h - band, h);
    r.polar = 0.5 * (top + bottom);
  }
  r.equatorial = mean_over_rows(err, w, band, h - band);
  return r;
}

MetricsReport evaluate(const FlowField& est, const FlowField& gt, double polar_fraction) {
  MetricsReport r;
  const PlanarMetrics p = planar_metrics(est, gt);
  r.epe = p.epe;
  r.aae = p.aae;
  r.rms = p.rms;
  r.sepe = sepe(est, gt);
  r.saae = saae(est, gt);
  r.srms = srms(est, gt);
  const RegionSepe reg = region_breakdown(est, gt, polar_fraction);
  r.polar_sepe = reg.polar;
  r.equatorial_sepe = reg.equatorial;
  r.n_pixels = est.size();
  return r;
}

std::vector<std::pair<std::string, std::string>> to_key_values(const MetricsReport& r) {
  const auto fmt = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return {{"epe", fmt(r.epe)},   {"aae", fmt(r.aae)},
          {"rms", fmt(r.rms)},   {"sepe", fmt(r.sepe)},
          {"saae", fmt(r.saae)}, {"srms", fmt(r.srms)},
          {"polar_sepe", fmt(r.polar_sepe)}, {"equatorial_sepe", fmt(r.equatorial_sepe)},
          {"n_pixels", std::to_string(r.n_pixels)}};
}

InterpolationError interpolation_error(const ErpImage& src, const ErpImage& dst, const FlowField& f) {
  if (!src.image().same_shape(dst.image())) throw DimensionError("interpolation_error: images differ in shape");
  const ErpImage warped = backward_warp(dst, f);
  const int w = src.width(), h = src.height(), ch = src.channels();
  InterpolationError out{0.0, Image(w, h, 1)};
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double d = 0.0;
      for (int c = 0; c < ch; ++c) d += std::abs(double(src.at(x, y, c)) - warped.at(x, y, c));
      d /= ch;
      out.heatmap.at(x, y) = float(d);
      total += d;
    }
  }
  out.mean = total / (double(w) * h);
  return out;
}

std::vector<double> flow_magnitudes(const FlowField& f) {
  std::vector<double> mag(f.size());
  parallel_for(f.height, [&](int y) {
    for (int x = 0; x < f.width; ++x) {
      mag[f.index(x, y)] = geodesic(pix_to_vec({double(x), double(y)}, f.width, f.height), endpoint_dir(f, x, y));
    }
  });
  return mag;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * double(values.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
}

}  // namespace omniflow
