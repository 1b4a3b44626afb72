import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsdiffsfm.geometry import (
    CameraConfig,
    EpipolarVector,
    FlowSample,
    MotionEstimate,
    epipolar_residual,
    exp_so3,
    log_so3,
    matrices_ab,
    midpoint,
    project_flow,
    s_to_vech,
    skew,
    symmetric_s,
    vech_to_s,
)

finite = st.floats(-1.0, 1.0, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_skew_cross_product():
    a = np.array([1.0, -2.0, 3.0])
    b = np.array([0.5, 4.0, -1.0])
    assert np.allclose(skew(a) @ b, np.cross(a, b))


@given(vec3)
@settings(max_examples=50, deadline=None)
def test_exp_log_roundtrip(w):
    R = exp_so3(w)
    # rotation matrix invariants
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.isclose(np.linalg.det(R), 1.0)
    assert np.allclose(log_so3(R), w, atol=1e-9)


def test_exp_so3_small_angle():
    w = np.array([1e-12, -2e-12, 1e-12])
    R = exp_so3(w)
    assert np.allclose(R, np.eye(3) + skew(w), atol=1e-20)


@given(vec3, vec3, finite, finite, st.floats(1.0, 10.0))
@settings(max_examples=100, deadline=None)
def test_epipolar_identity(v, w, px, py, Z):
    """Flow from the projection model satisfies the epipolar constraint."""
    x = np.array([px, py])
    u = project_flow(x, Z, v, w)
    assert abs(epipolar_residual(x, u, v, w)) < 1e-12


def test_project_flow_rejects_nonpositive_depth():
    with pytest.raises(ValueError):
        project_flow(np.zeros(2), 0.0, np.ones(3), np.zeros(3))


def test_matrices_ab_match_projection_derivative():
    x = np.array([0.2, -0.3])
    v = np.array([0.1, -0.2, 0.05])
    w = np.array([0.01, 0.02, -0.03])
    A, B = matrices_ab(x)
    assert np.allclose(A @ v / 2.0 + B @ w, project_flow(x, 2.0, v, w))


@given(vec3, vec3)
@settings(max_examples=50, deadline=None)
def test_symmetric_s_vech_roundtrip(v, w):
    s = symmetric_s(v, w)
    assert np.allclose(s, s.T)
    assert np.allclose(vech_to_s(s_to_vech(s)), s)


def test_camera_pixel_roundtrip(camera):
    px = np.array([0.0, 123.4, 899.0])
    py = np.array([0.0, 500.5, 899.0])
    x, y = camera.pixel_to_normalized(px, py)
    px2, py2 = camera.normalized_to_pixel(x, y)
    assert np.allclose(px2, px)
    assert np.allclose(py2, py)


def test_row_of_matches_pixel_mapping(camera):
    x, y = camera.pixel_to_normalized(450.0, 321.0)
    assert np.isclose(camera.row_of(y), 321.0)


def test_midpoint():
    s = FlowSample(x=np.array([0.1, 0.2]), u=np.array([0.02, -0.04]), y1=10.0, y2=8.0)
    assert np.allclose(midpoint(s), [0.11, 0.18])


def test_epipolar_vector_canonical_sign():
    e = EpipolarVector(np.concatenate([[-0.5], np.zeros(8)]))
    assert e.e[0] > 0
    assert np.isclose(np.linalg.norm(e.e), 1.0)


def test_motion_estimate_normalized():
    m = MotionEstimate(v=np.array([3.0, 0.0, 4.0]), w=np.zeros(3), k=0.1)
    n = m.normalized()
    assert np.isclose(np.linalg.norm(n.v), 1.0)
    assert n.k == m.k
