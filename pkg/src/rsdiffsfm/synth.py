"""Synthetic rolling-shutter scene and flow generation with ground truth.

Two generators are provided.  `generate_linearized` emits samples that
satisfy the differential RS epipolar constraint exactly, so solvers must
recover the truth to machine precision on them.  `generate_discrete`
projects 3D points through full per-scanline camera poses with finite
rotations, matching the linearized model only to second order in the motion
magnitude; it is the independent oracle for the small-motion approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import (
    CameraConfig,
    FlowSample,
    MotionEstimate,
    exp_so3,
    matrices_ab,
)

CONST_VELOCITY = "cv"
CONST_ACCEL = "ca"
GLOBAL_SHUTTER = "gs"


@dataclass(frozen=True)
class SceneSpec:
    """Random-scene description with the motion ground truth.

    The translation magnitude is given as the normalized translation: the
    ratio of the absolute translation to the mean scene depth.
    """

    config: CameraConfig
    n_points: int = 300
    depth_range: tuple = (4.0, 8.0)
    v_dir: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 0.0]))
    norm_translation: float = 0.025
    w_mag_deg: float = 3.0
    w_dir: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 1.0]))
    k: float = 0.0
    seed: int = 0
    margin: float = 0.1

    def motion(self) -> MotionEstimate:
        depth_mean = 0.5 * (self.depth_range[0] + self.depth_range[1])
        v = np.asarray(self.v_dir, float)
        v = v / np.linalg.norm(v) * self.norm_translation * depth_mean
        w = np.asarray(self.w_dir, float)
        w = w / np.linalg.norm(w) * np.deg2rad(self.w_mag_deg)
        return MotionEstimate(v=v, w=w, k=self.k, v_reliable=True)


@dataclass(frozen=True)
class GroundTruth:
    """True motion and per-sample depths matching the emitted samples."""

    motion: MotionEstimate
    depths: np.ndarray
    n_discarded: int = 0


def benchmark_config(gamma=0.8):
    """900x900 image with an 810 px focal length."""
    return CameraConfig(gamma=gamma, h=900, fx=810.0, fy=810.0, cx=450.0, cy=450.0, width=900)


def beta_timestamp(t, k):
    """Pose scale at scanline timestamp t (fraction of the frame period)."""
    return (2.0 * t + k * t * t) / (2.0 + k)


def scanline_pose(t, motion: MotionEstimate, model=CONST_ACCEL):
    """Translation and rotation vector of the scanline at timestamp t."""
    k = motion.k if model == CONST_ACCEL else 0.0
    b = beta_timestamp(t, k)
    return b * motion.v, b * motion.w


def _sample_positions(spec: SceneSpec, rng):
    cfg = spec.config
    w_px = cfg.width if cfg.width is not None else cfg.h
    m = spec.margin
    px = rng.uniform(m * w_px, (1 - m) * w_px, spec.n_points)
    py = rng.uniform(m * cfg.h, (1 - m) * cfg.h, spec.n_points)
    x, y = cfg.pixel_to_normalized(px, py)
    Z = rng.uniform(spec.depth_range[0], spec.depth_range[1], spec.n_points)
    return np.column_stack([x, y]), Z


def generate_linearized(spec: SceneSpec):
    """Samples exactly consistent with the linearized RS epipolar model.

    The flow and destination row are solved jointly by fixed-point iteration
    of u = beta(k; y1, y2) (A v / Z + B w) with the model matrices evaluated
    at the flow midpoint x + u/2, matching the solvers' convention.
    """
    rng = np.random.default_rng(spec.seed)
    cfg = spec.config
    motion = spec.motion()
    xs, Zs = _sample_positions(spec, rng)
    g = cfg.gamma / cfg.h
    samples, depths, discarded = [], [], 0
    for x, Z in zip(xs, Zs):
        y1 = cfg.row_of(x[1])
        y2 = y1
        u = np.zeros(2)
        converged = False
        for _ in range(50):
            A, B = matrices_ab(x + 0.5 * u)
            base = A @ motion.v / Z + B @ motion.w
            t1 = g * y1
            t2 = 1.0 + g * y2
            beta = beta_timestamp(t2, motion.k) - beta_timestamp(t1, motion.k)
            u_new = beta * base
            y2_new = cfg.row_of(x[1] + u_new[1])
            if np.max(np.abs(u_new - u)) < 1e-15 and abs(y2_new - y2) < 1e-12:
                u = u_new
                y2 = y2_new
                converged = True
                break
            u = u_new
            y2 = y2_new
        if not converged or not (0 <= y2 < cfg.h):
            discarded += 1
            continue
        samples.append(FlowSample(x=x, u=u, y1=y1, y2=y2))
        depths.append(Z)
    return samples, GroundTruth(motion=motion, depths=np.array(depths), n_discarded=discarded)


def _project(point_world, t, motion, model):
    """Normalized projection of a world point at scanline timestamp t."""
    p, r = scanline_pose(t, motion, model)
    Xc = exp_so3(r).T @ (point_world - p)
    if Xc[2] <= 1e-9:
        return None, None
    return Xc[:2] / Xc[2], Xc[2]


def generate_discrete(spec: SceneSpec, model=CONST_ACCEL):
    """Exact two-view projections through per-scanline finite poses.

    For each 3D point, both observed rows are solved by fixed-point
    iteration so the projection row matches the scanline that captured it.
    The ground-truth motion is reported in the mid-exposure camera frame:
    with finite rotation the per-scanline relative translation direction is
    rotated by each scanline's own attitude, and the mid-exposure frame is
    the one a single-frame differential estimate corresponds to.  At
    gamma = 0 this coincides with the frame-start pose.
    """
    rng = np.random.default_rng(spec.seed)
    cfg = spec.config
    motion = spec.motion()
    xs, Zs = _sample_positions(spec, rng)
    g = cfg.gamma / cfg.h
    samples, depths, discarded = [], [], 0
    for x0, Z0 in zip(xs, Zs):
        point = Z0 * np.array([x0[0], x0[1], 1.0])
        ok = True
        # frame i observation: row consistent with its own scanline pose
        y1 = cfg.row_of(x0[1])
        x1 = x0
        for _ in range(50):
            x1, _ = _project(point, g * y1, motion, model)
            if x1 is None:
                ok = False
                break
            y1_new = cfg.row_of(x1[1])
            if abs(y1_new - y1) < 1e-12:
                y1 = y1_new
                break
            y1 = y1_new
        if not ok or not (0 <= y1 < cfg.h):
            discarded += 1
            continue
        x1, Z1 = _project(point, g * y1, motion, model)
        # frame i+1 observation
        y2 = y1
        x2 = None
        for _ in range(50):
            x2, _ = _project(point, 1.0 + g * y2, motion, model)
            if x2 is None:
                ok = False
                break
            y2_new = cfg.row_of(x2[1])
            if abs(y2_new - y2) < 1e-12:
                y2 = y2_new
                break
            y2 = y2_new
        if not ok or x2 is None or not (0 <= y2 < cfg.h):
            discarded += 1
            continue
        samples.append(FlowSample(x=x1, u=x2 - x1, y1=y1, y2=y2))
        depths.append(Z1)
    k_eff = motion.k if model == CONST_ACCEL else 0.0
    b_mid = beta_timestamp(0.5 * cfg.gamma, k_eff)
    gt_motion = MotionEstimate(
        v=exp_so3(b_mid * motion.w).T @ motion.v,
        w=motion.w,
        k=motion.k,
        v_reliable=True,
    )
    return samples, GroundTruth(motion=gt_motion, depths=np.array(depths), n_discarded=discarded)


def translation_error(v_est, v_true):
    """Angle between translation directions, in degrees."""
    v_est = np.asarray(v_est, float)
    v_true = np.asarray(v_true, float)
    ne, nt = np.linalg.norm(v_est), np.linalg.norm(v_true)
    if ne < 1e-15 or nt < 1e-15:
        raise ValueError("translation error undefined for zero vectors")
    c = np.clip(v_est @ v_true / (ne * nt), -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))


def rotation_error(w_est, w_true):
    """Norm of the intrinsic-XYZ Euler angles of R_est R_true^T, in degrees."""
    R = exp_so3(w_est) @ exp_so3(w_true).T
    angles = Rotation.from_matrix(R).as_euler("XYZ", degrees=True)
    return float(np.linalg.norm(angles))
