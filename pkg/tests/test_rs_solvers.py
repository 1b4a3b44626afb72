import numpy as np
import pytest

from rsdiffsfm import (
    CameraConfig,
    generate_linearized,
    solve_const_accel,
    solve_const_velocity,
    translation_error,
)
from rsdiffsfm.errors import InvalidScanlinePair
from rsdiffsfm.geometry import FlowSample
from rsdiffsfm.gs_solver import solve_gs
from rsdiffsfm.rs_solvers import (
    accel_row,
    accel_row_coeffs,
    det_polynomial,
    scanline_factors,
    _stack_affine,
)

from conftest import make_spec


def test_scanline_factors_basic(camera):
    s = FlowSample(x=np.zeros(2), u=np.zeros(2), y1=100.0, y2=130.0)
    f = scanline_factors(s, camera)
    g = camera.gamma / camera.h
    assert np.isclose(f.alpha, 1.0 + g * 30.0)
    assert np.isclose(f.beta(0.0), f.alpha)
    # beta(k) interpolates between 2a/2 and b as k grows
    assert np.isclose(f.beta(1e12), f.b, rtol=1e-9)


def test_beta_equals_alpha_at_k0_bulk():
    rng = np.random.default_rng(0)
    n = 1_000_000
    gamma = rng.uniform(0.0, 1.0, n)
    h = rng.integers(100, 2000, n).astype(float)
    y1 = rng.uniform(0, h)
    y2 = rng.uniform(0, h)
    t1 = gamma * y1 / h
    t2 = 1.0 + gamma * y2 / h
    a = t2 - t1
    b = t2 * t2 - t1 * t1
    beta0 = (2.0 * a + b * 0.0) / 2.0
    assert np.max(np.abs(beta0 - a)) == 0.0


def test_invalid_scanline_pair(camera):
    s = FlowSample(x=np.zeros(2), u=np.zeros(2), y1=899.0, y2=-2000.0)
    with pytest.raises(InvalidScanlinePair):
        scanline_factors(s, camera)


def test_cv_exact_recovery(camera):
    spec = make_spec(camera, n_points=8, seed=4)
    samples, gt = generate_linearized(spec)
    assert len(samples) == 8
    m = solve_const_velocity(samples, camera)
    assert translation_error(m.v, gt.motion.v) < 1e-6
    assert np.linalg.norm(m.w - gt.motion.w) < 1e-9
    assert m.k == 0.0


def test_accel_row_affine_in_k(camera):
    spec = make_spec(camera, n_points=1, k=0.1, seed=1)
    samples, _ = generate_linearized(spec)
    s = samples[0]
    f = scanline_factors(s, camera)
    r0, r1 = accel_row_coeffs(s, f)
    for k in (-1.5, 0.0, 0.3, 2.0):
        assert np.allclose(accel_row(s, f, k), r0 + k * r1)


def test_accel_row_annihilates_truth(camera):
    spec = make_spec(camera, n_points=10, k=0.1, seed=2)
    samples, gt = generate_linearized(spec)
    from rsdiffsfm.geometry import s_to_vech, symmetric_s

    e = np.concatenate([gt.motion.v, s_to_vech(symmetric_s(gt.motion.v, gt.motion.w))])
    for s in samples:
        f = scanline_factors(s, camera)
        assert abs(accel_row(s, f, 0.1) @ e) < 1e-12


def test_det_polynomial_properties(camera):
    spec = make_spec(camera, n_points=9, k=0.1, seed=7)
    samples, _ = generate_linearized(spec)
    factors = [scanline_factors(s, camera) for s in samples]
    poly = det_polynomial(samples, factors)
    assert len(poly.coeffs) <= 7  # degree <= 6
    assert poly.remainder_ratio < 1e-8
    # poly equals det Z(k) / (2+k)^3 up to roundoff at the polynomial's scale
    R0, R1 = _stack_affine(samples, factors)
    probes = np.linspace(-1.5, 3.0, 13)
    scale = max(abs(poly(k)) for k in probes)
    for k in probes:
        direct = np.linalg.det(R0 + k * R1) / (2.0 + k) ** 3
        assert abs(poly(k) - direct) < 1e-9 * scale


def test_ca_exact_recovery(camera):
    spec = make_spec(camera, n_points=9, k=0.1, seed=11)
    samples, gt = generate_linearized(spec)
    cands = solve_const_accel(samples, camera)
    best = min(cands, key=lambda c: abs(c.k - 0.1))
    assert abs(best.k - 0.1) < 1e-6
    assert translation_error(best.motion.v, gt.motion.v) < 1e-6
    assert np.linalg.norm(best.motion.w - gt.motion.w) < 1e-9


def test_ca_negative_k(camera):
    spec = make_spec(camera, n_points=9, k=-0.15, seed=13)
    samples, gt = generate_linearized(spec)
    cands = solve_const_accel(samples, camera)
    best = min(cands, key=lambda c: abs(c.k + 0.15))
    assert abs(best.k + 0.15) < 1e-6
    assert translation_error(best.motion.v, gt.motion.v) < 1e-5


def test_gamma_zero_collapses_to_gs():
    cam0 = CameraConfig(gamma=0.0, h=900, fx=810.0, fy=810.0, cx=450.0, cy=450.0, width=900)
    spec = make_spec(cam0, n_points=12, seed=5)
    samples, _ = generate_linearized(spec)
    m_gs = solve_gs(samples)
    m_cv = solve_const_velocity(samples, cam0)
    assert np.allclose(m_cv.v, m_gs.v, atol=1e-10)
    assert np.allclose(m_cv.w, m_gs.w, atol=1e-10)
    cands = solve_const_accel(samples[:9], cam0)
    assert len(cands) == 1
    assert cands[0].k == 0.0
    m9 = solve_gs(samples[:9])
    assert np.allclose(cands[0].motion.v, m9.v, atol=1e-10)
    assert np.allclose(cands[0].motion.w, m9.w, atol=1e-10)


def test_ca_needs_nine_samples(camera):
    spec = make_spec(camera, n_points=8, k=0.1, seed=3)
    samples, _ = generate_linearized(spec)
    with pytest.raises(ValueError):
        solve_const_accel(samples, camera)
