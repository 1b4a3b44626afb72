"""RANSAC over the minimal solvers with per-sample optimal-depth scoring.

The inlier criterion is the differential re-projection error: the distance
between the measured flow and the closest predicted flow over all positive
depths.  A hypothesis is scored over the full sample set; ties on inlier
count break on the lower mean inlier residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateConfiguration,
    EmptySelection,
    InvalidScanlinePair,
    NoRealSolution,
    RobustFailure,
)
from .geometry import CameraConfig, FlowSample, MotionEstimate, matrices_ab
from .gs_solver import solve_gs
from .rs_solvers import (
    DEFAULT_ROOT_WINDOW,
    scanline_factors,
    solve_const_accel,
    solve_const_velocity,
)
from .synth import CONST_ACCEL, CONST_VELOCITY, GLOBAL_SHUTTER

MINIMAL_SIZE = {GLOBAL_SHUTTER: 8, CONST_VELOCITY: 8, CONST_ACCEL: 9}


@dataclass(frozen=True)
class RansacConfig:
    """Robust estimation parameters.

    The threshold applies to the differential re-projection error on the
    normalized image plane.
    """

    iterations: int = 300
    threshold: float = 0.001
    seed: int = 0
    root_window: tuple = DEFAULT_ROOT_WINDOW

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class RansacResult:
    """Best hypothesis with its inlier set and per-sample residuals."""

    motion: MotionEstimate
    inliers: np.ndarray
    residuals: np.ndarray
    n_valid_iterations: int
    n_iterations: int


def residual(sample: FlowSample, motion: MotionEstimate, config: CameraConfig | None):
    """Differential re-projection error of one sample under a motion.

    The per-sample depth is re-optimized in closed form; when the optimal
    inverse depth is non-positive the error is evaluated at the rotation-only
    boundary and the sample counts as cheirality-violating.
    """
    r, _ = _residuals(np.array([sample.x]), np.array([sample.u]),
                      np.array([sample.y1]), np.array([sample.y2]), motion, config)
    return float(r[0])


def _residuals(xs, us, y1s, y2s, motion: MotionEstimate, config: CameraConfig | None):
    """Vectorized residuals; returns (errors, cheirality_ok)."""
    if config is not None and config.gamma > 0:
        g = config.gamma / config.h
        t1 = g * y1s
        t2 = 1.0 + g * y2s
        a = t2 - t1
        b = t2 * t2 - t1 * t1
        beta = (2.0 * a + b * motion.k) / (2.0 + motion.k)
    else:
        beta = np.ones(len(xs))
    # model matrices evaluated at the flow midpoint
    x = xs[:, 0] + 0.5 * us[:, 0]
    y = xs[:, 1] + 0.5 * us[:, 1]
    vx, vy, vz = motion.v
    wx, wy, wz = motion.w
    qx = beta * (-vx + x * vz)
    qy = beta * (-vy + y * vz)
    cx = us[:, 0] - beta * (x * y * wx - (1.0 + x * x) * wy + y * wz)
    cy = us[:, 1] - beta * ((1.0 + y * y) * wx - x * y * wy - x * wz)
    qq = qx * qx + qy * qy
    degenerate = qq < 1e-24
    rho = (cx * qx + cy * qy) / np.where(degenerate, 1.0, qq)
    cheirality_ok = ~degenerate & (rho > 0)
    rho_c = np.where(cheirality_ok, rho, 0.0)
    ex = cx - rho_c * qx
    ey = cy - rho_c * qy
    return np.hypot(ex, ey), cheirality_ok


def score_motion(samples, motion: MotionEstimate, config: CameraConfig | None):
    """Residual vector of a motion hypothesis over all samples."""
    xs = np.array([s.x for s in samples])
    us = np.array([s.u for s in samples])
    y1s = np.array([s.y1 for s in samples])
    y2s = np.array([s.y2 for s in samples])
    errs, _ = _residuals(xs, us, y1s, y2s, motion, config)
    return errs


def _minimal_solve(subset, model, config, root_window):
    if model == GLOBAL_SHUTTER:
        return [solve_gs(subset)]
    if model == CONST_VELOCITY:
        return [solve_const_velocity(subset, config)]
    return [c.motion for c in solve_const_accel(subset, config, root_window)]


def ransac(samples, model: str, config: CameraConfig | None, ransac_config: RansacConfig | None = None) -> RansacResult:
    """Robust motion estimate from contaminated flow samples.

    Deterministic under a fixed seed.  For the constant-acceleration model
    every real root of the minimal solver is scored as its own hypothesis.
    """
    rc = ransac_config or RansacConfig()
    m = MINIMAL_SIZE[model]
    if len(samples) < m:
        raise RobustFailure(f"model {model} needs at least {m} samples, got {len(samples)}")
    rng = np.random.default_rng(rc.seed)
    best = None
    best_count = -1
    best_mean = np.inf
    n_valid = 0
    for _ in range(rc.iterations):
        idx = rng.choice(len(samples), size=m, replace=False)
        subset = [samples[i] for i in idx]
        try:
            hypotheses = _minimal_solve(subset, model, config, rc.root_window)
        except (DegenerateConfiguration, NoRealSolution, InvalidScanlinePair):
            continue
        n_valid += 1
        for motion in hypotheses:
            errs = score_motion(samples, motion, config)
            inl = errs <= rc.threshold
            count = int(np.count_nonzero(inl))
            mean = float(np.mean(errs[inl])) if count else np.inf
            if count > best_count or (count == best_count and mean < best_mean):
                best = (motion, inl, errs)
                best_count = count
                best_mean = mean
    if best is None or best_count == 0:
        raise RobustFailure("no RANSAC iteration produced a valid model")
    motion, inl, errs = best
    return RansacResult(
        motion=motion,
        inliers=np.flatnonzero(inl),
        residuals=errs,
        n_valid_iterations=n_valid,
        n_iterations=rc.iterations,
    )


def refit_trimmed(samples, result: RansacResult, model: str, config: CameraConfig | None,
                  keep: float = 0.5):
    """Nonlinear refit on the best-scoring fraction of the inlier set.

    Samples just under the threshold can be geometrically consistent with
    the hypothesis without belonging to the clean consensus, and the
    near-ambiguity between translation and rotation amplifies their pull on
    a full-inlier refit.  Trimming to the best `keep` fraction (by residual
    under the selected hypothesis) drops them; with genuinely noisy data
    this is an ordinary trimmed least-squares refit.
    """
    from .refine import refine

    idx = result.inliers
    order = np.argsort(result.residuals[idx], kind="stable")
    n_keep = max(MINIMAL_SIZE[model], int(round(keep * len(idx))))
    chosen = [samples[i] for i in idx[order[:n_keep]]]
    return refine(chosen, result.motion, config, model)


def forward_backward_error(forward, backward):
    """Per-pixel forward-backward flow consistency error, in pixels.

    error(p) = || u_fwd(p) + u_bwd(p + u_fwd(p)) || with bilinear lookup of
    the backward field; lookups landing outside the image are NaN.
    """
    if forward.shape != backward.shape:
        raise ValueError(f"flow shapes differ: {forward.shape} vs {backward.shape}")
    H, W = forward.shape[:2]
    py, px = np.mgrid[0:H, 0:W].astype(float)
    tx = px + forward[..., 0]
    ty = py + forward[..., 1]
    bwd_x = _bilinear(backward[..., 0], tx, ty)
    bwd_y = _bilinear(backward[..., 1], tx, ty)
    return np.hypot(forward[..., 0] + bwd_x, forward[..., 1] + bwd_y)


def _bilinear(img, x, y):
    H, W = img.shape
    finite = np.isfinite(x) & np.isfinite(y)
    x = np.where(finite, x, -1.0)
    y = np.where(finite, y, -1.0)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    inside = (x0 >= 0) & (x0 <= W - 2) & (y0 >= 0) & (y0 <= H - 2)
    x0c = np.clip(x0, 0, W - 2)
    y0c = np.clip(y0, 0, H - 2)
    fx = x - x0c
    fy = y - y0c
    v = (
        img[y0c, x0c] * (1 - fx) * (1 - fy)
        + img[y0c, x0c + 1] * fx * (1 - fy)
        + img[y0c + 1, x0c] * (1 - fx) * fy
        + img[y0c + 1, x0c + 1] * fx * fy
    )
    return np.where(inside, v, np.nan)


def filter_flows(forward, backward, config: CameraConfig, keep_fraction: float = 0.20):
    """Keep the most consistent fraction of a dense bidirectional flow pair.

    Pixels are ranked by ascending forward-backward error (row-major order
    breaks ties) and the top `keep_fraction` converted to flow samples.
    """
    err = forward_backward_error(forward, backward)
    finite_flow = np.isfinite(forward[..., 0]) & np.isfinite(forward[..., 1])
    usable = np.isfinite(err) & finite_flow
    flat_err = np.where(usable.ravel(), err.ravel(), np.inf)
    n_usable = int(np.count_nonzero(usable))
    if n_usable == 0:
        raise EmptySelection("no pixel has a finite forward-backward error")
    n_keep = max(1, int(round(keep_fraction * usable.size)))
    n_keep = min(n_keep, n_usable)
    order = np.argsort(flat_err, kind="stable")[:n_keep]
    H, W = err.shape
    samples = []
    for flat in order:
        r, c = divmod(int(flat), W)
        ux_px = forward[r, c, 0]
        uy_px = forward[r, c, 1]
        x, y = config.pixel_to_normalized(float(c), float(r))
        y2 = r + uy_px
        if not (0 <= y2 < config.h):
            continue
        samples.append(
            FlowSample(
                x=np.array([float(x), float(y)]),
                u=np.array([ux_px / config.fx, uy_px / config.fy]),
                y1=float(r),
                y2=float(y2),
            )
        )
    if not samples:
        raise EmptySelection("all selected pixels map outside the image")
    return samples
