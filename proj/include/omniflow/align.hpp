#pragma once

#include <span>

#include "omniflow/erp.hpp"
#include "omniflow/flow360.hpp"
#include "omniflow/sphere.hpp"

namespace omniflow {

// Least-squares rotation with q ~= R p (start direction to end direction).
struct RotationEstimate {
  Rotation rotation;
  double residual = 0.0;  // mean squared chordal error
  int n_samples = 0;
};

/// Closed-form (SVD) fit of the proper rotation minimising sum |R p_k - q_k|^2.
/// Throws DegenerateError if the correspondences do not span at least a plane.
RotationEstimate fit_rotation(std::span<const Vec3> from, std::span<const Vec3> to);

/// Samples start pixels on a stride grid and fits the global rotation of the flow.
/// Throws DegenerateError with fewer than 3 samples.
RotationEstimate estimate_rotation(const FlowField& f, int stride = 4);

/// Forward warp of the target so that aligned(x) = target(R x).
ErpImage align_target(const ErpImage& target, const Rotation& r);

/// Maps endpoints found against the twice-aligned target back into the
/// original target frame: e = r_bar * r_hat * e_tilde.
FlowField unrotate_flow(const FlowField& f_tilde, const Rotation& r_bar, const Rotation& r_hat);

}  // namespace omniflow
