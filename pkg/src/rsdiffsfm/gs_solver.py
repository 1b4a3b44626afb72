"""Linear 8-point global-shutter differential pose solver.

Each flow measurement gives one linear constraint z . e = 0 on the stacked
unknown e = [v; vech(s)].  e is solved by SVD and (v, w) recovered from it;
the sign of v is fixed by positive-depth voting.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateConfiguration
from .geometry import (
    EpipolarVector,
    FlowSample,
    MotionEstimate,
    lift,
    lift_flow,
    matrices_ab,
    midpoint,
    s_to_vech,
    skew,
)

RANK_TOL = 1e-10


def gs_row(sample: FlowSample):
    """Constraint row: coefficients of u^T v^ x~ - x~^T s x~ in e-ordering.

    The constraint is evaluated at the flow midpoint x + u/2.  Off-diagonal
    s coefficients are doubled so that the s-block dot product reproduces
    x~^T s x~ exactly.
    """
    xt = lift(midpoint(sample))
    ut = lift_flow(sample.u)
    # u^T v^ x~ = v . (x~ x u)
    v_block = np.cross(xt, ut)
    px, py = xt[0], xt[1]
    s_block = -np.array([px * px, 2 * px * py, 2 * px, py * py, 2 * py, 1.0])
    return np.concatenate([v_block, s_block])


def stack_rows(samples, row_fn=gs_row, normalize=True):
    rows = np.array([row_fn(s) for s in samples])
    if normalize:
        norms = np.linalg.norm(rows, axis=1)
        norms[norms < 1e-300] = 1.0
        rows = rows / norms[:, None]
    return rows


def solve_linear(samples) -> EpipolarVector:
    """Least-squares epipolar vector from >= 8 flow samples."""
    if len(samples) < 8:
        raise DegenerateConfiguration(f"need at least 8 samples, got {len(samples)}")
    Z = stack_rows(samples)
    _, sv, Vt = np.linalg.svd(Z, full_matrices=True)
    if sv[7] <= RANK_TOL * sv[0]:
        raise DegenerateConfiguration(
            f"stacked system rank below 8 (sigma_8/sigma_1 = {sv[7] / sv[0]:.2e})"
        )
    return EpipolarVector(Vt[8 if Vt.shape[0] > 8 else -1])


def _w_from_s(v, s_vech):
    """Least squares w solving vech(s(v, w)) = s_vech for fixed v."""
    basis = np.eye(3)
    M = np.column_stack([s_to_vech(_s_of(v, basis[i])) for i in range(3)])
    w, *_ = np.linalg.lstsq(M, s_vech, rcond=None)
    return w


def _s_of(v, w):
    vh = skew(v)
    wh = skew(w)
    return 0.5 * (vh @ wh + wh @ vh)


def closed_form_inv_depth(sample: FlowSample, v, w, beta=1.0):
    """Per-sample optimal inverse depth for the flow prediction model."""
    A, B = matrices_ab(midpoint(sample))
    q = beta * (A @ v)
    c = sample.u - beta * (B @ w)
    qq = q @ q
    if qq < 1e-24:
        return None
    return float((c @ q) / qq)


def cheirality_vote(samples, v, w):
    """Number of samples whose closed-form depth is positive under (v, w)."""
    votes = 0
    for s in samples:
        rho = closed_form_inv_depth(s, v, w)
        if rho is not None and rho > 0:
            votes += 1
    return votes


def recover_motion(e: EpipolarVector, samples, k: float = 0.0) -> MotionEstimate:
    """Extract (v, w) from the epipolar vector, resolving the sign of v.

    w is the least-squares solution of s(v, w) = s_e, which is linear in w
    for fixed v.  The global sign of (v, s) is chosen so that the closed-form
    depths are positive for the majority of samples.
    """
    v = e.v.copy()
    s_vech = e.e[3:].copy()
    vnorm = np.linalg.norm(v)
    if vnorm < 1e-9:
        # near pure rotation: v direction is unreliable, fit w directly
        w = _fit_rotation_only(samples)
        return MotionEstimate(v=np.array([1.0, 0.0, 0.0]), w=w, k=k, v_reliable=False)
    v = v / vnorm
    s_vech = s_vech / vnorm
    w = _w_from_s(v, s_vech)
    if cheirality_vote(samples, v, w) * 2 < len(samples):
        v = -v
        # s flips with v; w solved from (-v, -s) is unchanged
    return MotionEstimate(v=v, w=w, k=k)


def _fit_rotation_only(samples):
    """Least-squares w assuming zero translation."""
    Bs = []
    us = []
    for s in samples:
        _, B = matrices_ab(midpoint(s))
        Bs.append(B)
        us.append(s.u)
    M = np.vstack(Bs)
    rhs = np.concatenate(us)
    w, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return w


def solve_gs(samples) -> MotionEstimate:
    """Full global-shutter pipeline: linear solve plus motion recovery."""
    e = solve_linear(samples)
    return recover_motion(e, samples)
