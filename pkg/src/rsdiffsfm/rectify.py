"""Rolling-shutter-aware warping onto the first-scanline frame.

Each pixel on scanline y was exposed by a camera displaced by the fraction
beta1(k; y) of the frame motion.  Undoing that per-scanline pose moves the
pixel to where the first-scanline (global-shutter) camera would have seen
it.  Two paths are provided: the small-motion displacement field (default)
and exact back-projection through the scanline pose; they agree to
sub-pixel accuracy at the motion scales the model is valid for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_fill_holes

from .geometry import CameraConfig, MotionEstimate, exp_so3


@dataclass
class WarpField:
    """Per-pixel rectification displacement in pixel units, plus validity."""

    du: np.ndarray  # (H, W) displacement along x, pixels
    dv: np.ndarray  # (H, W) displacement along y, pixels
    valid: np.ndarray  # (H, W) bool


def beta_first_scanline(rows, k, gamma, h):
    """Pose fraction beta1 of scanline `rows` relative to the first scanline."""
    t = gamma * np.asarray(rows, dtype=float) / h
    return (2.0 * t + k * t * t) / (2.0 + k)


def warp_field(depth, motion: MotionEstimate, config: CameraConfig) -> WarpField:
    """Rectifying displacement field from a dense depth map.

    The scanline camera is displaced by +beta1 (v, w) relative to the frame
    start, so the rectifying image displacement is the flow induced by the
    inverse motion: -beta1 (A v / Z + B w), converted to pixels.
    """
    H, W = depth.shape
    if H != config.h:
        raise ValueError(f"depth has {H} rows but the camera has {config.h} scanlines")
    py, px = np.mgrid[0:H, 0:W].astype(float)
    x, y = config.pixel_to_normalized(px, py)
    beta1 = beta_first_scanline(py, motion.k, config.gamma, config.h)
    valid = np.isfinite(depth) & (depth > 0)
    rho = np.where(valid, 1.0 / np.where(valid, depth, 1.0), 0.0)
    vx, vy, vz = motion.v
    wx, wy, wz = motion.w
    flow_x = (-vx + x * vz) * rho + x * y * wx - (1.0 + x * x) * wy + y * wz
    flow_y = (-vy + y * vz) * rho + (1.0 + y * y) * wx - x * y * wy - x * wz
    du = -beta1 * flow_x * config.fx
    dv = -beta1 * flow_y * config.fy
    return WarpField(du=np.where(valid, du, 0.0), dv=np.where(valid, dv, 0.0), valid=valid)


def warp_field_backprojection(depth, motion: MotionEstimate, config: CameraConfig) -> WarpField:
    """Exact rectifying displacement via back-projection.

    Back-project each pixel through its scanline pose into the scene, then
    project in the first-scanline camera; the displacement is the difference
    of the two image positions.  Cross-check for `warp_field`.
    """
    H, W = depth.shape
    py, px = np.mgrid[0:H, 0:W].astype(float)
    x, y = config.pixel_to_normalized(px, py)
    valid = np.isfinite(depth) & (depth > 0)
    Z = np.where(valid, depth, 1.0)
    du = np.zeros((H, W))
    dv = np.zeros((H, W))
    betas = beta_first_scanline(np.arange(H), motion.k, config.gamma, config.h)
    for r in range(H):
        b = betas[r]
        R = exp_so3(b * motion.w)
        p = b * motion.v
        Xc = np.stack([x[r] * Z[r], y[r] * Z[r], Z[r]])  # (3, W)
        Xw = R @ Xc + p[:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            xg = Xw[0] / Xw[2]
            yg = Xw[1] / Xw[2]
        ok = Xw[2] > 1e-9
        du[r] = np.where(ok, (xg - x[r]) * config.fx, 0.0)
        dv[r] = np.where(ok, (yg - y[r]) * config.fy, 0.0)
        valid[r] &= ok
    return WarpField(du=np.where(valid, du, 0.0), dv=np.where(valid, dv, 0.0), valid=valid)


def rectify_image(image, warp: WarpField, fill_gaps: bool = True):
    """Forward-splat an image through a warp field with bilinear weights.

    Unfilled pixels are inpainted from their 4-neighborhood average; pixels
    with invalid warp entries are copied through unchanged.  Returns
    (rectified, gap_fraction).  gap_fraction counts unfilled pixels inside
    the splatted footprint (true holes); the uncovered band where content
    moved out of view is not a hole and is excluded.
    """
    img = np.asarray(image, dtype=float)
    if img.shape[:2] != warp.du.shape:
        raise ValueError(f"image shape {img.shape[:2]} does not match warp {warp.du.shape}")
    H, W = img.shape[:2]
    channels = img if img.ndim == 3 else img[..., None]
    C = channels.shape[2]
    acc = np.zeros((H, W, C))
    wgt = np.zeros((H, W))

    py, px = np.mgrid[0:H, 0:W].astype(float)
    tx = (px + warp.du).ravel()
    ty = (py + warp.dv).ravel()
    vals = channels.reshape(-1, C)
    x0 = np.floor(tx).astype(int)
    y0 = np.floor(ty).astype(int)
    fx = tx - x0
    fy = ty - y0
    for dx, dy, wq in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = x0 + dx
        yi = y0 + dy
        ok = (xi >= 0) & (xi < W) & (yi >= 0) & (yi < H)
        np.add.at(wgt, (yi[ok], xi[ok]), wq[ok])
        np.add.at(acc, (yi[ok], xi[ok]), vals[ok] * wq[ok, None])

    filled = wgt > 1e-8
    out = np.zeros_like(acc)
    out[filled] = acc[filled] / wgt[filled, None]
    gap = ~filled
    footprint = binary_fill_holes(filled)
    gap_fraction = float(np.count_nonzero(gap & footprint)) / (H * W)
    if fill_gaps and np.any(gap):
        out = _fill_from_neighbors(out, gap)
    # invalid warp entries pass the source through
    out[~warp.valid] = channels[~warp.valid]
    out = out[..., 0] if img.ndim == 2 else out
    return out, gap_fraction


def _fill_from_neighbors(img, gap):
    """Single-pass 4-neighborhood average fill of gap pixels."""
    out = img.copy()
    acc = np.zeros_like(img)
    cnt = np.zeros(img.shape[:2])
    known = ~gap
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        src_ok = np.zeros_like(known)
        shifted = np.zeros_like(img)
        if dy == -1:
            src_ok[1:, :] = known[:-1, :]
            shifted[1:, :] = img[:-1, :]
        elif dy == 1:
            src_ok[:-1, :] = known[1:, :]
            shifted[:-1, :] = img[1:, :]
        elif dx == -1:
            src_ok[:, 1:] = known[:, :-1]
            shifted[:, 1:] = img[:, :-1]
        else:
            src_ok[:, :-1] = known[:, 1:]
            shifted[:, :-1] = img[:, 1:]
        take = gap & src_ok
        acc[take] += shifted[take]
        cnt[take] += 1
    have = gap & (cnt > 0)
    out[have] = acc[have] / cnt[have, None]
    return out
