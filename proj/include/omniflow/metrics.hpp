#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "omniflow/erp.hpp"
#include "omniflow/flow360.hpp"

namespace omniflow {

// Error summary. Spherical values are radians, planar EPE/RMS are ERP pixels,
// AAE is radians.
struct MetricsReport {
  double epe = 0.0;
  double aae = 0.0;
  double rms = 0.0;
  double sepe = 0.0;
  double saae = 0.0;
  double srms = 0.0;
  double polar_sepe = 0.0;
  double equatorial_sepe = 0.0;
  std::size_t n_pixels = 0;
};

// All functions below throw DimensionError when the fields differ in shape.

/// Per-pixel geodesic distance between the estimated and true endpoints.
std::vector<double> endpoint_error_map(const FlowField& est, const FlowField& gt);

double sepe(const FlowField& est, const FlowField& gt);
double srms(const FlowField& est, const FlowField& gt);
/// Mean angle at the source direction between the estimated and true flow arcs.
double saae(const FlowField& est, const FlowField& gt);

struct PlanarMetrics {
  double epe = 0.0;
  double aae = 0.0;
  double rms = 0.0;
};

/// Classic image-space metrics on wrap-normalized differences; AAE uses the
/// (u, v, 1) homogeneous angle.
PlanarMetrics planar_metrics(const FlowField& est, const FlowField& gt);

struct RegionSepe {
  double polar = 0.0;
  double equatorial = 0.0;
  int polar_rows_per_side = 0;
};

/// SEPE over the top and bottom `polar_fraction` of rows versus the rest.
RegionSepe region_breakdown(const FlowField& est, const FlowField& gt, double polar_fraction = 0.15);

MetricsReport evaluate(const FlowField& est, const FlowField& gt, double polar_fraction = 0.15);

/// Fixed-order key/value rendering of a report.
std::vector<std::pair<std::string, std::string>> to_key_values(const MetricsReport& r);

struct InterpolationError {
  double mean = 0.0;
  Image heatmap;  // single channel, per-pixel mean-channel absolute difference
};

/// |I_t - backward_warp(I_t1, f)| averaged over channels.
InterpolationError interpolation_error(const ErpImage& src, const ErpImage& dst, const FlowField& f);

/// Geodesic length of every flow vector.
std::vector<double> flow_magnitudes(const FlowField& f);

/// Linear-interpolated percentile (q in [0, 100]) of a sample; 0 for empty input.
double percentile(std::vector<double> values, double q);

}  // namespace omniflow
