"""Block-coordinate refinement of (k, v, w, depths) and dense depth recovery.

The objective is the differential re-projection error

    sum_i || u_i - beta_i(k) (A_i v / Z_i + B_i w) ||^2

cycled over closed-form blocks: depths, v, w and (for the constant
acceleration model) k.  Samples whose optimal inverse depth is undefined
(translation epipole) or non-positive are excluded from the current cycle
and re-tested on the next one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularBlock
from .geometry import CameraConfig, MotionEstimate, matrices_ab, midpoint
from .rs_solvers import scanline_factors
from .synth import CONST_ACCEL, CONST_VELOCITY, GLOBAL_SHUTTER


@dataclass
class SampleBlocks:
    """Precomputed per-sample quantities: A, B, flows and scanline factors."""

    A: np.ndarray  # (N, 2, 3)
    B: np.ndarray  # (N, 2, 3)
    u: np.ndarray  # (N, 2)
    a: np.ndarray  # (N,)
    b: np.ndarray  # (N,)

    @classmethod
    def build(cls, samples, config: CameraConfig | None, model=CONST_ACCEL):
        A = np.empty((len(samples), 2, 3))
        B = np.empty_like(A)
        u = np.empty((len(samples), 2))
        a = np.ones(len(samples))
        b = np.ones(len(samples))
        for i, s in enumerate(samples):
            A[i], B[i] = matrices_ab(midpoint(s))
            u[i] = s.u
            if model != GLOBAL_SHUTTER and config is not None and config.gamma > 0:
                f = scanline_factors(s, config)
                a[i] = f.a
                b[i] = f.b
        return cls(A=A, B=B, u=u, a=a, b=b)

    def beta(self, k):
        return (2.0 * self.a + self.b * k) / (2.0 + k)


def objective(blocks: SampleBlocks, motion: MotionEstimate, inv_depths, mask=None):
    """Sum of squared flow prediction errors over unmasked samples."""
    beta = blocks.beta(motion.k)
    pred = beta[:, None] * (
        (blocks.A @ motion.v) * inv_depths[:, None] + blocks.B @ motion.w
    )
    errs = np.sum((blocks.u - pred) ** 2, axis=1)
    if mask is not None:
        errs = errs[mask]
    return float(np.sum(errs))


def update_depths(blocks: SampleBlocks, motion: MotionEstimate):
    """Closed-form per-sample optimal inverse depths.

    Returns (inv_depths, valid) where invalid entries sit at the translation
    epipole or have non-positive optimal depth.
    """
    beta = blocks.beta(motion.k)
    q = beta[:, None] * (blocks.A @ motion.v)
    c = blocks.u - beta[:, None] * (blocks.B @ motion.w)
    qq = np.sum(q * q, axis=1)
    degenerate = qq < 1e-24
    qq_safe = np.where(degenerate, 1.0, qq)
    rho = np.sum(c * q, axis=1) / qq_safe
    rho = np.where(degenerate, np.nan, rho)
    valid = ~degenerate & (rho > 0)
    return rho, valid


def update_v(blocks: SampleBlocks, k, w, inv_depths, mask):
    """Least-squares translation direction for fixed (k, w, depths)."""
    if np.count_nonzero(mask) < 3:
        raise SingularBlock("fewer than 3 usable samples for the v block")
    beta = blocks.beta(k)
    coef = (beta * inv_depths)[mask, None, None] * blocks.A[mask]
    rhs = blocks.u[mask] - beta[mask, None] * (blocks.B[mask] @ w)
    M = coef.reshape(-1, 3)
    r = rhs.reshape(-1)
    sol, _, rank, _ = np.linalg.lstsq(M, r, rcond=None)
    if rank < 3:
        raise SingularBlock("rank-deficient v block")
    return sol


def update_w(blocks: SampleBlocks, k, v, inv_depths, mask):
    """Least-squares rotation vector for fixed (k, v, depths)."""
    if np.count_nonzero(mask) < 3:
        raise SingularBlock("fewer than 3 usable samples for the w block")
    beta = blocks.beta(k)
    coef = beta[mask, None, None] * blocks.B[mask]
    rhs = blocks.u[mask] - (beta * inv_depths)[mask, None] * (blocks.A[mask] @ v)
    M = coef.reshape(-1, 3)
    r = rhs.reshape(-1)
    sol, _, rank, _ = np.linalg.lstsq(M, r, rcond=None)
    if rank < 3:
        raise SingularBlock("rank-deficient w block")
    return sol


def update_k(blocks: SampleBlocks, v, w, inv_depths, mask, k_current):
    """Closed-form acceleration factor from the stationarity condition.

    With p_i = A_i v rho_i + B_i w the stationary point of the objective in
    k is linear once the common (2+k) denominator is cleared.  The update is
    only accepted if it does not increase the objective.
    """
    p = (blocks.A @ v) * inv_depths[:, None] + blocks.B @ w
    pp = np.sum(p * p, axis=1)[mask]
    up = np.sum(blocks.u * p, axis=1)[mask]
    d = (blocks.b - blocks.a)[mask]
    num = np.sum(d * (2.0 * up - 2.0 * blocks.a[mask] * pp))
    den = np.sum(d * (blocks.b[mask] * pp - up))
    if abs(den) < 1e-12 * max(abs(num), 1.0):
        return k_current
    k_new = num / den
    if k_new <= -2.0:
        return k_current
    return float(k_new)


@dataclass
class RefineState:
    """Refinement output: motion, per-sample inverse depths, diagnostics."""

    motion: MotionEstimate
    inv_depths: np.ndarray
    valid: np.ndarray
    objective: float
    n_cycles: int
    converged: bool
    trace: np.ndarray | None = None  # objective after init, each cycle, polish


def refine(
    samples,
    initial: MotionEstimate,
    config: CameraConfig | None = None,
    model: str = CONST_ACCEL,
    max_cycles: int = 100,
    rel_tol: float = 1e-10,
    polish: bool = True,
) -> RefineState:
    """Cycle the closed-form blocks until the objective stalls.

    The gauge freedom (v, Z) -> (cv, cZ) is fixed by renormalizing v to unit
    norm after each cycle and rescaling the depths to match.  Coordinate
    descent crawls along the translation/rotation valley of this objective,
    so by default the result is polished with a depth-eliminated
    Levenberg-Marquardt pass; the polish is only accepted when it lowers
    the objective, preserving monotone descent.
    """
    blocks = SampleBlocks.build(samples, config, model)
    v = np.asarray(initial.v, float).copy()
    n = np.linalg.norm(v)
    if n > 0:
        v = v / n
    w = np.asarray(initial.w, float).copy()
    k = float(initial.k) if model == CONST_ACCEL else 0.0
    motion = MotionEstimate(v=v, w=w, k=k)
    rho, valid = update_depths(blocks, motion)
    rho_f = np.where(valid, rho, 0.0)
    prev = objective(blocks, motion, rho_f, valid)
    trace = [prev]
    converged = False
    cycle = 0
    for cycle in range(1, max_cycles + 1):
        v_old, w_old, k_old = v, w, k
        try:
            v = update_v(blocks, k, w, rho_f, valid)
            w = update_w(blocks, k, v, rho_f, valid)
            if model == CONST_ACCEL:
                k_new = update_k(blocks, v, w, rho_f, valid, k)
                if objective(blocks, MotionEstimate(v=v, w=w, k=k_new), rho_f, valid) <= objective(
                    blocks, MotionEstimate(v=v, w=w, k=k), rho_f, valid
                ):
                    k = k_new
        except SingularBlock:
            break
        # gauge: unit translation direction, depths absorb the scale
        n = np.linalg.norm(v)
        if n > 1e-15:
            v = v / n
        motion = MotionEstimate(v=v, w=w, k=k)
        rho, valid = update_depths(blocks, motion)
        rho_f = np.where(valid, rho, 0.0)
        cur = objective(blocks, motion, rho_f, valid)
        if cur > prev:
            # each block descends on a fixed cheirality mask, but the depth
            # update can flip the mask and add terms; revert the cycle and
            # leave further progress to the polish, keeping descent monotone
            v, w, k = v_old, w_old, k_old
            motion = MotionEstimate(v=v, w=w, k=k)
            rho, valid = update_depths(blocks, motion)
            rho_f = np.where(valid, rho, 0.0)
            break
        trace.append(cur)
        if prev - cur <= rel_tol * max(prev, 1e-300):
            prev = min(prev, cur)
            converged = True
            break
        prev = cur
    if polish and prev > 0:
        v, w, k, rho, valid, prev = _polish_lm(blocks, v, w, k, prev, model)
        rho_f = np.where(valid, rho, 0.0)
        trace.append(prev)
    return RefineState(
        motion=MotionEstimate(v=v, w=w, k=k).normalized(),
        inv_depths=rho,
        valid=valid,
        objective=prev,
        n_cycles=cycle,
        converged=converged,
        trace=np.array(trace),
    )


def _polish_lm(blocks, v, w, k, obj_current, model):
    """Levenberg-Marquardt on (v, w, k) with depths eliminated in closed form.

    Minimizes the same objective; the step is discarded unless it improves
    on the coordinate-descent result.
    """
    from scipy.optimize import least_squares

    free_k = model == CONST_ACCEL

    def unpack(theta):
        kk = float(theta[6]) if free_k else k
        return MotionEstimate(v=theta[:3], w=theta[3:6], k=max(kk, -1.99) if free_k else kk)

    def resid(theta):
        m = unpack(theta)
        rho, valid = update_depths(blocks, m)
        rho_f = np.where(valid, rho, 0.0)
        beta = blocks.beta(m.k)
        pred = beta[:, None] * ((blocks.A @ m.v) * rho_f[:, None] + blocks.B @ m.w)
        return (blocks.u - pred).ravel()

    theta0 = np.concatenate([v, w, [k]]) if free_k else np.concatenate([v, w])
    try:
        sol = least_squares(resid, theta0, method="lm", xtol=1e-15, ftol=1e-15, max_nfev=400)
    except Exception:
        m = MotionEstimate(v=v, w=w, k=k)
        rho, valid = update_depths(blocks, m)
        return v, w, k, rho, valid, obj_current
    m = unpack(sol.x)
    rho, valid = update_depths(blocks, m)
    rho_f = np.where(valid, rho, 0.0)
    obj_new = objective(blocks, m, rho_f, valid)
    if obj_new >= obj_current:
        m0 = MotionEstimate(v=v, w=w, k=k)
        rho0, valid0 = update_depths(blocks, m0)
        return v, w, k, rho0, valid0, obj_current
    vn = np.linalg.norm(m.v)
    v_new = m.v / vn if vn > 1e-15 else m.v
    rho = rho * vn  # keep the unit-v gauge: depths absorb the scale
    return v_new, np.asarray(m.w), float(m.k), rho, valid, obj_new


def dense_depth(flow, motion: MotionEstimate, config: CameraConfig):
    """Per-pixel depth map from a dense flow field and a refined motion.

    `flow` is an (H, W, 2) array of pixel-unit displacements; NaN entries
    mark invalid pixels.  Returns (depth, valid) where depth is in scene
    units and invalid pixels hold NaN.
    """
    H, W = flow.shape[:2]
    py, px = np.mgrid[0:H, 0:W].astype(float)
    x, y = config.pixel_to_normalized(px, py)
    ux = flow[..., 0] / config.fx
    uy = flow[..., 1] / config.fy
    finite = np.isfinite(ux) & np.isfinite(uy)

    y2 = py + np.where(finite, flow[..., 1], 0.0)
    g = config.gamma / config.h
    t1 = g * py
    t2 = 1.0 + g * y2
    a = t2 - t1
    b = t2 * t2 - t1 * t1
    beta = (2.0 * a + b * motion.k) / (2.0 + motion.k)

    # q = beta * A v, c = u - beta * B w, rho = (c.q)/(q.q) pixelwise,
    # with the model matrices evaluated at the flow midpoint
    xm = x + np.where(finite, 0.5 * ux, 0.0)
    ym = y + np.where(finite, 0.5 * uy, 0.0)
    vx, vy, vz = motion.v
    wx, wy, wz = motion.w
    qx = beta * (-vx + xm * vz)
    qy = beta * (-vy + ym * vz)
    bwx = xm * ym * wx - (1.0 + xm * xm) * wy + ym * wz
    bwy = (1.0 + ym * ym) * wx - xm * ym * wy - xm * wz
    cx = ux - beta * bwx
    cy = uy - beta * bwy
    qq = qx * qx + qy * qy
    degenerate = qq < 1e-24
    rho = (cx * qx + cy * qy) / np.where(degenerate, 1.0, qq)
    valid = finite & ~degenerate & (rho > 0)
    depth = np.where(valid, 1.0 / np.where(valid, rho, 1.0), np.nan)
    return depth, valid
