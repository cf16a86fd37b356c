#pragma once

#include <vector>

#include "omniflow/image.hpp"

namespace omniflow {

/// Middlebury colour wheel: hue from the direction of (du, dv), saturation from
/// magnitude / max_magnitude. max_magnitude <= 0 selects the 99th percentile
/// of the field's magnitudes. Zero flow renders white.
Image flow_to_color(const FlowGrid& flow, double max_magnitude = 0.0);

/// Monochrome error map, lighter = lower error: 1 - min(err / max_error, 1).
/// max_error <= 0 selects the 99th percentile of the errors.
Image error_heatmap(const std::vector<double>& err, int width, int height, double max_error = 0.0);

}  // namespace omniflow
