"""Core geometric types and the differential flow-projection model.

All solver math operates on the normalized image plane.  Pixel <-> normalized
conversion happens only at module boundaries (file I/O, synthesis).  Image
points are lifted to homogeneous 3-vectors x~ = (x, y, 1) and flows to
(u_x, u_y, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def skew(v):
    """Skew-symmetric matrix: skew(v) @ x == cross(v, x)."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def exp_so3(w):
    """Rotation matrix from a rotation vector (Rodrigues formula)."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    K = skew(w)
    if theta < 1e-10:
        # second-order Taylor; exact to machine precision at this scale
        return np.eye(3) + K + 0.5 * (K @ K)
    return (
        np.eye(3)
        + (np.sin(theta) / theta) * K
        + ((1.0 - np.cos(theta)) / theta**2) * (K @ K)
    )


def log_so3(R):
    """Rotation vector of R for rotation angles below pi."""
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < 1e-10:
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return theta / (2.0 * np.sin(theta)) * axis


def matrices_ab(x):
    """Flow-projection matrices A, B (2x3 each) at normalized point x."""
    px, py = float(x[0]), float(x[1])
    A = np.array([
        [-1.0, 0.0, px],
        [0.0, -1.0, py],
    ])
    B = np.array([
        [px * py, -(1.0 + px * px), py],
        [1.0 + py * py, -px * py, -px],
    ])
    return A, B


def project_flow(x, Z, v, w):
    """Instantaneous image motion at x for depth Z and camera motion (v, w)."""
    if Z <= 0:
        raise ValueError(f"depth must be positive, got {Z}")
    A, B = matrices_ab(x)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return A @ v / Z + B @ w


def symmetric_s(v, w):
    """Symmetric matrix s = (v^ w^ + w^ v^) / 2 of the epipolar constraint."""
    vh = skew(v)
    wh = skew(w)
    s = 0.5 * (vh @ wh + wh @ vh)
    return 0.5 * (s + s.T)


def midpoint(sample):
    """Flow-midpoint evaluation position x + u/2.

    Evaluating the differential model halfway along the measured flow makes
    the fit second-order accurate in the motion magnitude (a central
    difference), which matters for flows measured between finite frames.
    """
    return sample.x + 0.5 * sample.u


def lift(x):
    """Homogeneous lifting (x, y) -> (x, y, 1)."""
    return np.array([float(x[0]), float(x[1]), 1.0])


def lift_flow(u):
    """Flow lifting (u_x, u_y) -> (u_x, u_y, 0)."""
    return np.array([float(u[0]), float(u[1]), 0.0])


def epipolar_residual(x, u, v, w):
    """Residual of the differential epipolar constraint u^T v^ x~ - x~^T s x~."""
    xt = lift(x)
    ut = lift_flow(u)
    s = symmetric_s(v, w)
    return float(ut @ skew(v) @ xt - xt @ s @ xt)


@dataclass(frozen=True)
class CameraConfig:
    """Rolling-shutter camera: readout ratio, scanline count and intrinsics.

    gamma is the readout time ratio (readout span over frame period); h is
    the number of scanlines; fx, fy, cx, cy are pinhole intrinsics in pixels.
    The top row (y = 0) is the first-exposed scanline.
    """

    gamma: float
    h: int
    fx: float
    fy: float
    cx: float
    cy: float
    width: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.h < 2:
            raise ValueError(f"h must be >= 2, got {self.h}")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    def pixel_to_normalized(self, px, py):
        return (np.asarray(px) - self.cx) / self.fx, (np.asarray(py) - self.cy) / self.fy

    def normalized_to_pixel(self, x, y):
        return np.asarray(x) * self.fx + self.cx, np.asarray(y) * self.fy + self.cy

    def row_of(self, y_norm):
        """Pixel row of a normalized y coordinate."""
        return float(y_norm) * self.fy + self.cy


@dataclass(frozen=True)
class FlowSample:
    """One flow measurement: normalized position, displacement and rows.

    x is the normalized image position in frame i, u the flow displacement in
    normalized units, y1/y2 the pixel rows of the point in frames i and i+1.
    """

    x: np.ndarray
    u: np.ndarray
    y1: float
    y2: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))

    @classmethod
    def from_normalized(cls, x, u, config: CameraConfig):
        """Build a sample deriving the rows from the camera intrinsics."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        y1 = config.row_of(x[1])
        y2 = config.row_of(x[1] + u[1])
        if not (0 <= y1 < config.h and 0 <= y2 < config.h):
            raise ValueError(f"rows ({y1:.2f}, {y2:.2f}) outside [0, {config.h})")
        return cls(x=x, u=u, y1=y1, y2=y2)


@dataclass(frozen=True)
class MotionEstimate:
    """Relative motion hypothesis: translation direction, rotation, accel factor.

    v is the translation direction (unit norm, scale ambiguous), w the
    rotation vector, k the constant-acceleration factor (0 for the
    constant-velocity and global-shutter models).
    """

    v: np.ndarray
    w: np.ndarray
    k: float = 0.0
    v_reliable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        if self.k <= -2.0:
            raise ValueError(f"acceleration factor must exceed -2, got {self.k}")

    def normalized(self):
        n = np.linalg.norm(self.v)
        if n < 1e-15:
            return self
        return MotionEstimate(self.v / n, self.w, self.k, self.v_reliable)


# Ordering of the 6 independent entries of s in the 9-vector e:
# (s11, s12, s13, s22, s23, s33).
_S_INDEX = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


def s_to_vech(s):
    """Upper-triangular entries of s in e-ordering."""
    s = np.asarray(s, dtype=float)
    return np.array([s[i, j] for i, j in _S_INDEX])


def vech_to_s(vech):
    """Symmetric matrix from its 6 upper-triangular entries."""
    s = np.zeros((3, 3))
    for val, (i, j) in zip(vech, _S_INDEX):
        s[i, j] = val
        s[j, i] = val
    return s


@dataclass(frozen=True)
class EpipolarVector:
    """The 9-vector e = [v; vech(s)], canonicalized to unit norm."""

    e: np.ndarray = field()

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        if e.shape != (9,):
            raise ValueError(f"e must have 9 components, got shape {e.shape}")
        object.__setattr__(self, "e", canonicalize_e(e))

    @property
    def v(self):
        return self.e[:3]

    @property
    def s(self):
        return vech_to_s(self.e[3:])

    @classmethod
    def from_motion(cls, v, w):
        return cls(np.concatenate([np.asarray(v, float), s_to_vech(symmetric_s(v, w))]))


def canonicalize_e(e):
    """Scale to unit norm with the first nonzero component positive."""
    e = np.asarray(e, dtype=float)
    n = np.linalg.norm(e)
    if n == 0:
        return e
    e = e / n
    for c in e:
        if abs(c) > 1e-12:
            return e if c > 0 else -e
    return e
