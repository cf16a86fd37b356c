"""Omnidirectional optical flow on equirectangular panoramas.

Images are float32 arrays of shape (H, W) or (H, W, C) with W == 2 H.
Flow fields are float64 arrays of shape (H, W, 2) holding (du, dv) in pixels.
Rotations are 3x3 float arrays.
"""

from ._core import (
    ConfigError,
    DimensionError,
    __version__,
    camera_path,
    erp_direct_flow,
    estimate,
    estimate_rotation,
    evaluate,
    flow_to_color,
    gt_flow,
    perspective_flow,
    read_flo,
    read_png,
    render,
    rotate_image,
    rotation_flow,
    saae,
    sepe,
    srms,
    unrotate_flow,
    write_flo,
    write_png,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
