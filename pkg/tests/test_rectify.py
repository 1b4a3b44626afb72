import numpy as np
import pytest

from rsdiffsfm import (
    CameraConfig,
    MotionEstimate,
    exp_so3,
    rectify_image,
    warp_field,
    warp_field_backprojection,
)
from rsdiffsfm.rectify import beta_first_scanline


def small_camera(gamma=0.8, H=200):
    f = 0.9 * H
    return CameraConfig(gamma=gamma, h=H, fx=f, fy=f, cx=H / 2.0, cy=H / 2.0, width=H)


def bench_motion(Z0=6.0, k=0.1):
    v = np.array([1.0, 1.0, 0.3])
    v *= 0.025 * Z0 / np.linalg.norm(v)
    w = np.array([1.0, 1.0, 1.0])
    w *= np.deg2rad(3.0) / np.linalg.norm(w)
    return MotionEstimate(v=v, w=w, k=k)


def render_plane_scene(cfg, motion, Z0=6.0, texture=None):
    """Rolling-shutter view of a fronto-parallel plane plus per-pixel depth.

    Each scanline projects through its own finite pose; the returned gs
    image is what the first-scanline camera sees.
    """
    H, W = cfg.h, cfg.width
    py, px = np.mgrid[0:H, 0:W].astype(float)
    x, y = cfg.pixel_to_normalized(px, py)
    betas = beta_first_scanline(np.arange(H), motion.k, cfg.gamma, cfg.h)
    depth = np.empty((H, W))
    gsx = np.empty((H, W))
    for r in range(H):
        b = betas[r]
        ray = exp_so3(b * motion.w) @ np.stack([x[r], y[r], np.ones(W)])
        t = (Z0 - b * motion.v[2]) / ray[2]
        Xw = ray * t + (b * motion.v)[:, None]
        depth[r] = t
        gsx[r] = Xw[0] / Xw[2]
    tex = texture or (lambda xn: 255.0 * (0.5 + 0.5 * np.cos(40.0 * xn)))
    return tex(gsx), tex(x), depth, gsx


def test_beta_first_scanline_zero_at_top():
    assert beta_first_scanline(0, 0.2, 0.8, 900) == 0.0
    assert beta_first_scanline(0.0, 0.0, 0.0, 900) == 0.0


def test_warp_identity_at_zero_motion():
    cfg = small_camera()
    depth = np.full((cfg.h, cfg.width), 5.0)
    wf = warp_field(depth, MotionEstimate(v=np.zeros(3), w=np.zeros(3), k=0.0), cfg)
    assert np.all(wf.du == 0.0)
    assert np.all(wf.dv == 0.0)
    assert wf.valid.all()


def test_warp_identity_at_gamma_zero():
    cfg = small_camera(gamma=0.0)
    depth = np.full((cfg.h, cfg.width), 5.0)
    wf = warp_field(depth, bench_motion(), cfg)
    assert np.max(np.abs(wf.du)) == 0.0
    assert np.max(np.abs(wf.dv)) == 0.0


def test_warp_matches_backprojection():
    cfg = small_camera()
    motion = bench_motion()
    _, _, depth, _ = render_plane_scene(cfg, motion)
    wf = warp_field(depth, motion, cfg)
    wb = warp_field_backprojection(depth, motion, cfg)
    diff = np.hypot(wf.du - wb.du, wf.dv - wb.dv)
    assert diff.max() < 0.5


def test_rectified_vertical_line_is_vertical():
    cfg = small_camera()
    motion = bench_motion()
    line = lambda xn: 255.0 * np.exp(-(((xn - 0.05) / 0.01) ** 2))
    rs_img, _, depth, _ = render_plane_scene(cfg, motion, texture=line)
    wf = warp_field(depth, motion, cfg)
    rect, _ = rectify_image(rs_img, wf)

    def col_spread(img):
        cents = []
        for r in range(10, cfg.h - 10):
            row = img[r]
            if row.sum() > 1.0:
                cents.append((row * np.arange(cfg.width)).sum() / row.sum())
        cents = np.array(cents)
        return cents.max() - cents.min()

    assert col_spread(rs_img) > 2.0  # distortion is visible before rectification
    assert col_spread(rect) < 0.5


def test_rectified_texture_close_to_gs_reference():
    cfg = small_camera()
    motion = bench_motion()
    rs_img, gs_img, depth, _ = render_plane_scene(cfg, motion)
    wf = warp_field(depth, motion, cfg)
    rect, _ = rectify_image(rs_img, wf)
    m = slice(10, -10)
    before = np.abs(rs_img - gs_img)[m, m].mean()
    after = np.abs(rect - gs_img)[m, m].mean()
    assert after < 0.25 * before


def test_gap_fraction_small_at_benchmark_scale():
    cfg = CameraConfig(gamma=0.8, h=900, fx=810.0, fy=810.0, cx=450.0, cy=450.0, width=900)
    motion = bench_motion()
    _, _, depth, _ = render_plane_scene(cfg, motion)
    wf = warp_field(depth, motion, cfg)
    _, gap = rectify_image(np.zeros((900, 900)), wf)
    assert gap < 0.01


def test_invalid_depth_passes_source_through():
    cfg = small_camera(H=40)
    depth = np.full((40, 40), np.nan)
    wf = warp_field(depth, bench_motion(), cfg)
    assert not wf.valid.any()
    img = np.arange(1600, dtype=float).reshape(40, 40)
    out, _ = rectify_image(img, wf)
    assert np.array_equal(out, img)


def test_rectify_shape_mismatch():
    cfg = small_camera(H=40)
    depth = np.full((40, 40), 5.0)
    wf = warp_field(depth, bench_motion(), cfg)
    with pytest.raises(ValueError):
        rectify_image(np.zeros((30, 40)), wf)


def test_warp_field_wrong_rows():
    cfg = small_camera(H=40)
    with pytest.raises(ValueError):
        warp_field(np.full((39, 40), 5.0), bench_motion(), cfg)


def test_rectify_color_image():
    cfg = small_camera(H=60)
    motion = bench_motion()
    _, _, depth, gsx = render_plane_scene(cfg, motion)
    wf = warp_field(depth, motion, cfg)
    img = np.stack([np.full((60, 60), 10.0), np.full((60, 60), 20.0),
                    np.full((60, 60), 30.0)], axis=2)
    out, _ = rectify_image(img, wf)
    assert out.shape == (60, 60, 3)
    # constant image stays constant wherever the splat covers
    assert np.allclose(out[20:40, 20:40], img[20:40, 20:40])
