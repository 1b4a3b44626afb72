"""Command-line surface: estimation, depth, rectification, synthesis, sweeps.

Exit codes: 0 success, 1 estimation failure, 2 usage or input error.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from . import io_formats as iof
from .errors import RsSfmError
from .geometry import CameraConfig, FlowSample
from .experiment import run_sweep, sweep_csv
from .refine import dense_depth
from .rectify import rectify_image, warp_field
from .robust import RansacConfig, filter_flows, ransac, refit_trimmed
from .synth import CONST_ACCEL, CONST_VELOCITY, GLOBAL_SHUTTER, SceneSpec, generate_discrete

MODELS = {"gs": GLOBAL_SHUTTER, "cv": CONST_VELOCITY, "ca": CONST_ACCEL}


@click.group()
def main():
    """Rolling-shutter-aware differential motion, depth and rectification."""


def _samples_from_flow(flow: iof.FlowFile, flow_bwd=None, max_samples=2000, seed=0,
                       keep_fraction=0.2):
    cfg = flow.config
    if flow.is_dense:
        if flow_bwd is not None:
            samples = filter_flows(flow.dense, flow_bwd.dense, cfg, keep_fraction)
        else:
            H, W = flow.dense.shape[:2]
            finite = np.isfinite(flow.dense).all(axis=2)
            ys, xs = np.nonzero(finite)
            samples = []
            for r, c in zip(ys, xs):
                y2 = r + flow.dense[r, c, 1]
                if not (0 <= y2 < cfg.h):
                    continue
                x, y = cfg.pixel_to_normalized(float(c), float(r))
                samples.append(FlowSample(
                    x=np.array([x, y]),
                    u=np.array([flow.dense[r, c, 0] / cfg.fx, flow.dense[r, c, 1] / cfg.fy]),
                    y1=float(r), y2=float(y2)))
    else:
        samples = []
        for x_px, y_px, u_px, v_px in flow.sparse:
            y2 = y_px + v_px
            if not (0 <= y2 < cfg.h):
                continue
            x, y = cfg.pixel_to_normalized(float(x_px), float(y_px))
            samples.append(FlowSample(
                x=np.array([x, y]),
                u=np.array([u_px / cfg.fx, v_px / cfg.fy]),
                y1=float(y_px), y2=float(y2)))
    if max_samples and len(samples) > max_samples:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(samples), max_samples, replace=False))
        samples = [samples[i] for i in idx]
    return samples


def _read_flow_or_die(path):
    try:
        return iof.read_flow(path)
    except FileNotFoundError:
        click.echo(f"error: flow file not found: {path}", err=True)
        sys.exit(2)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@main.command()
@click.option("--flow", "flow_path", required=True, help="RSFLOW1 forward flow file.")
@click.option("--flow-bwd", "bwd_path", default=None, help="Optional backward flow for filtering.")
@click.option("--model", type=click.Choice(["gs", "cv", "ca"]), default="cv")
@click.option("--ransac-iters", default=300, show_default=True)
@click.option("--threshold", default=0.001, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-samples", default=2000, show_default=True)
@click.option("--no-refine", is_flag=True, help="Skip nonlinear refinement.")
@click.option("--out", "out_path", required=True)
def estimate(flow_path, bwd_path, model, ransac_iters, threshold, seed, max_samples,
             no_refine, out_path):
    """Estimate relative motion from a flow file."""
    flow = _read_flow_or_die(flow_path)
    bwd = _read_flow_or_die(bwd_path) if bwd_path else None
    samples = _samples_from_flow(flow, bwd, max_samples=max_samples, seed=seed)
    try:
        rc = RansacConfig(iterations=ransac_iters, threshold=threshold, seed=seed)
        result = ransac(samples, MODELS[model], flow.config, rc)
        motion = result.motion
        if not no_refine:
            motion = refit_trimmed(samples, result, MODELS[model], flow.config).motion
    except RsSfmError as exc:
        click.echo(f"estimation failed: {exc}", err=True)
        sys.exit(1)
    res = result.residuals
    iof.write_motion(out_path, motion, extra={
        "model": model,
        "n_samples": len(samples),
        "n_inliers": len(result.inliers),
        "residual_mean": float(np.mean(res)),
        "residual_median": float(np.median(res)),
    })


@main.command()
@click.option("--flow", "flow_path", required=True)
@click.option("--motion", "motion_path", required=True)
@click.option("--out", "out_path", required=True)
def depth(flow_path, motion_path, out_path):
    """Dense depth map (PFM) from a dense flow field and a motion file."""
    flow = _read_flow_or_die(flow_path)
    if not flow.is_dense:
        click.echo("error: depth recovery needs a dense flow layout", err=True)
        sys.exit(2)
    motion = iof.read_motion(motion_path)
    depth_map, valid = dense_depth(flow.dense, motion, flow.config)
    iof.write_pfm(out_path, np.where(valid, depth_map, np.nan))


@main.command()
@click.option("--image", "image_path", required=True, help="PGM/PPM input image.")
@click.option("--depth", "depth_path", required=True, help="PFM depth map.")
@click.option("--motion", "motion_path", required=True)
@click.option("--out", "out_path", required=True)
def rectify(image_path, depth_path, motion_path, out_path):
    """Remove rolling-shutter distortion from an image."""
    img = iof.read_pnm(image_path)
    depth_map = iof.read_pfm(depth_path)
    motion = iof.read_motion(motion_path)
    if img.shape[:2] != depth_map.shape:
        click.echo(
            f"error: image shape {img.shape[:2]} does not match depth {depth_map.shape}",
            err=True)
        sys.exit(2)
    flow = _read_flow_config_for(depth_map, motion_path)
    warp = warp_field(depth_map, motion, flow)
    out, _ = rectify_image(img, warp)
    iof.write_pnm(out_path, out)


def _read_flow_config_for(depth_map, motion_path):
    # camera parameters ride along in the motion file when present
    kv = iof.read_keyvalues(motion_path)
    H, W = depth_map.shape
    return CameraConfig(
        gamma=float(kv.get("gamma", "1.0")),
        h=int(kv.get("h", H)),
        fx=float(kv.get("fx", max(H, W))),
        fy=float(kv.get("fy", max(H, W))),
        cx=float(kv.get("cx", W / 2.0)),
        cy=float(kv.get("cy", H / 2.0)),
        width=W,
    )


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--out-flow", "flow_path", required=True)
@click.option("--out-truth", "truth_path", required=True)
def synth(config_path, flow_path, truth_path):
    """Generate a synthetic sparse flow file with a ground-truth sidecar."""
    cfg = _load_config(config_path)
    from .experiment import _camera

    camera = _camera(cfg, cfg.gammas[0])
    spec = SceneSpec(
        config=camera,
        n_points=cfg.n_points,
        depth_range=(cfg.depth_min, cfg.depth_max),
        norm_translation=cfg.translations[0],
        w_mag_deg=cfg.w_mags[0],
        k=cfg.ks[0],
        seed=cfg.seed,
    )
    samples, gt = generate_discrete(spec)
    sparse = np.empty((len(samples), 4), dtype=np.float32)
    for i, s in enumerate(samples):
        px, py = camera.normalized_to_pixel(s.x[0], s.x[1])
        u_px = s.u[0] * camera.fx
        v_px = s.u[1] * camera.fy
        sparse[i] = (px, py, u_px, v_px)
    iof.write_flow(flow_path, iof.FlowFile(
        config=camera, width=camera.width, height=camera.h, sparse=sparse))
    iof.write_motion(truth_path, gt.motion, extra={
        "gamma": camera.gamma, "h": camera.h,
        "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
        "n_samples": len(samples),
    })


def _load_config(path):
    try:
        return iof.ExperimentConfig.from_file(path)
    except FileNotFoundError:
        click.echo(f"error: config file not found: {path}", err=True)
        sys.exit(2)
    except KeyError as exc:
        click.echo(f"error: unknown config key {exc.args[0]!r}", err=True)
        sys.exit(2)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_path", required=True)
def sweep(config_path, out_path):
    """Run a benchmark sweep and write mean errors per cell to CSV."""
    cfg = _load_config(config_path)
    rows = run_sweep(cfg)
    with open(out_path, "w") as f:
        f.write(sweep_csv(rows))


@main.command("convert")
@click.option("--flo", "flo_path", required=True, help="Middlebury .flo input.")
@click.option("--gamma", required=True, type=float)
@click.option("--fx", required=True, type=float)
@click.option("--fy", required=True, type=float)
@click.option("--cx", required=True, type=float)
@click.option("--cy", required=True, type=float)
@click.option("--out", "out_path", required=True)
def convert(flo_path, gamma, fx, fy, cx, cy, out_path):
    """Convert a plain 2-channel .flo field into the RSFLOW1 container."""
    try:
        data = iof.read_flo(flo_path)
    except (FileNotFoundError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    H, W = data.shape[:2]
    cfg = CameraConfig(gamma=gamma, h=H, fx=fx, fy=fy, cx=cx, cy=cy, width=W)
    iof.write_flow(out_path, iof.FlowFile(config=cfg, width=W, height=H, dense=data))


if __name__ == "__main__":
    main()
