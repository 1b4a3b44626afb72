"""File formats: the RSFLOW1 flow container, PFM depth maps, PGM/PPM images,
key=value motion and experiment-config files.

All binary payloads are little-endian; round trips are bit exact for finite
values.  NaN marks invalid pixels in dense flow layouts.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraConfig

FLOW_MAGIC = b"RSFLOW1"
_HEADER = struct.Struct("<7sII dI dddd B")


@dataclass
class FlowFile:
    """Dense or sparse flow payload with the owning camera configuration."""

    config: CameraConfig
    width: int
    height: int
    dense: np.ndarray | None = None  # (H, W, 2) float32, pixel units
    sparse: np.ndarray | None = None  # (N, 4) float32: x_px, y_px, u_px, v_px

    @property
    def is_dense(self):
        return self.dense is not None


def write_flow(path, flow: FlowFile):
    cfg = flow.config
    with open(path, "wb") as f:
        f.write(
            _HEADER.pack(
                FLOW_MAGIC,
                flow.width,
                flow.height,
                cfg.gamma,
                cfg.h,
                cfg.fx,
                cfg.fy,
                cfg.cx,
                cfg.cy,
                1 if flow.is_dense else 0,
            )
        )
        if flow.is_dense:
            data = np.ascontiguousarray(flow.dense, dtype="<f4")
            if data.shape != (flow.height, flow.width, 2):
                raise ValueError(
                    f"dense payload shape {data.shape} does not match header "
                    f"({flow.height}, {flow.width}, 2)"
                )
            f.write(data.tobytes())
        else:
            data = np.ascontiguousarray(flow.sparse, dtype="<f4")
            if data.ndim != 2 or data.shape[1] != 4:
                raise ValueError(f"sparse payload must be (N, 4), got {data.shape}")
            f.write(struct.pack("<I", data.shape[0]))
            f.write(data.tobytes())


def read_flow(path) -> FlowFile:
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError(f"{path}: truncated flow header")
        magic, width, height, gamma, h, fx, fy, cx, cy, dense_flag = _HEADER.unpack(head)
        if magic != FLOW_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        config = CameraConfig(gamma=gamma, h=h, fx=fx, fy=fy, cx=cx, cy=cy, width=width)
        if dense_flag:
            n = width * height * 2 * 4
            buf = f.read(n)
            if len(buf) != n:
                raise ValueError(f"{path}: dense payload truncated ({len(buf)} of {n} bytes)")
            dense = np.frombuffer(buf, dtype="<f4").reshape(height, width, 2).copy()
            return FlowFile(config=config, width=width, height=height, dense=dense)
        (count,) = struct.unpack("<I", f.read(4))
        buf = f.read(count * 16)
        if len(buf) != count * 16:
            raise ValueError(f"{path}: sparse payload truncated")
        sparse = np.frombuffer(buf, dtype="<f4").reshape(count, 4).copy()
        return FlowFile(config=config, width=width, height=height, sparse=sparse)


def read_flo(path):
    """Middlebury .flo file -> (H, W, 2) float32 array."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != b"PIEH":
            raise ValueError(f"{path}: not a .flo file (magic {magic!r})")
        width, height = struct.unpack("<ii", f.read(8))
        data = np.frombuffer(f.read(width * height * 8), dtype="<f4")
    return data.reshape(height, width, 2).copy()


def write_pfm(path, data):
    """Grayscale PFM, little-endian (scale -1.0)."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError(f"PFM writer expects a 2-D array, got shape {data.shape}")
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{data.shape[1]} {data.shape[0]}\n".encode())
        f.write(b"-1.0\n")
        # PFM stores rows bottom-to-top
        f.write(np.ascontiguousarray(data[::-1], dtype="<f4").tobytes())


def read_pfm(path):
    with open(path, "rb") as f:
        if f.readline().strip() != b"Pf":
            raise ValueError(f"{path}: not a grayscale PFM")
        width, height = map(int, f.readline().split())
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(f.read(width * height * 4), dtype=dtype)
    return data.reshape(height, width)[::-1].copy()


def write_pnm(path, image):
    """8-bit binary PGM (2-D input) or PPM (H, W, 3 input)."""
    img = np.asarray(image)
    if img.dtype != np.uint8:
        img = np.clip(np.round(img), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        if img.ndim == 2:
            f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        elif img.ndim == 3 and img.shape[2] == 3:
            f.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        else:
            raise ValueError(f"unsupported image shape {img.shape}")
        f.write(np.ascontiguousarray(img).tobytes())


def read_pnm(path):
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic not in (b"P5", b"P6"):
            raise ValueError(f"{path}: unsupported PNM magic {magic!r}")
        line = f.readline()
        while line.startswith(b"#"):
            line = f.readline()
        width, height = map(int, line.split())
        maxval = int(f.readline())
        if maxval != 255:
            raise ValueError(f"{path}: only 8-bit PNM supported, maxval={maxval}")
        channels = 1 if magic == b"P5" else 3
        data = np.frombuffer(f.read(width * height * channels), dtype=np.uint8)
    if channels == 1:
        return data.reshape(height, width).copy()
    return data.reshape(height, width, 3).copy()


def write_keyvalues(path, mapping):
    """Flat key=value text file; values formatted with full float precision."""
    with open(path, "w") as f:
        for key, val in mapping.items():
            if isinstance(val, float):
                f.write(f"{key}={val!r}\n")
            else:
                f.write(f"{key}={val}\n")


def read_keyvalues(path):
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: malformed line {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def write_motion(path, motion, extra=None):
    vals = {
        "vx": float(motion.v[0]),
        "vy": float(motion.v[1]),
        "vz": float(motion.v[2]),
        "wx": float(motion.w[0]),
        "wy": float(motion.w[1]),
        "wz": float(motion.w[2]),
        "k": float(motion.k),
        "v_reliable": int(motion.v_reliable),
    }
    if extra:
        vals.update(extra)
    write_keyvalues(path, vals)


def read_motion(path):
    from .geometry import MotionEstimate

    kv = read_keyvalues(path)
    return MotionEstimate(
        v=np.array([float(kv["vx"]), float(kv["vy"]), float(kv["vz"])]),
        w=np.array([float(kv["wx"]), float(kv["wy"]), float(kv["wz"])]),
        k=float(kv.get("k", "0")),
        v_reliable=bool(int(kv.get("v_reliable", "1"))),
    )


_FLOAT_LIST_KEYS = {"gammas", "translations", "w_mags", "ks"}


@dataclass
class ExperimentConfig:
    """Sweep description: axes, per-cell trial count and estimation knobs."""

    models: list = field(default_factory=lambda: ["gs", "cv"])
    gammas: list = field(default_factory=lambda: [0.8])
    translations: list = field(default_factory=lambda: [0.025])
    w_mags: list = field(default_factory=lambda: [3.0])
    ks: list = field(default_factory=lambda: [0.0])
    trials: int = 20
    seed: int = 0
    n_points: int = 300
    ransac_iters: int = 50
    threshold: float = 0.001
    use_refine: bool = False
    image_size: int = 900
    focal: float = 810.0
    depth_min: float = 4.0
    depth_max: float = 8.0

    def __post_init__(self):
        for name in ("models", "gammas", "translations", "w_mags", "ks"):
            if not getattr(self, name):
                raise ValueError(f"config list '{name}' must be non-empty")

    @classmethod
    def from_file(cls, path):
        kv = read_keyvalues(path)
        kwargs = {}
        valid = set(cls.__dataclass_fields__)
        for key, val in kv.items():
            if key not in valid:
                raise KeyError(key)
            if key == "models":
                kwargs[key] = [m.strip() for m in val.split(",")]
            elif key in _FLOAT_LIST_KEYS:
                kwargs[key] = [float(x) for x in val.split(",")]
            elif key in ("trials", "seed", "n_points", "ransac_iters", "image_size"):
                kwargs[key] = int(val)
            elif key == "use_refine":
                kwargs[key] = bool(int(val))
            else:
                kwargs[key] = float(val)
        return cls(**kwargs)

    def to_file(self, path):
        vals = {
            "models": ",".join(self.models),
            "gammas": ",".join(repr(g) for g in self.gammas),
            "translations": ",".join(repr(t) for t in self.translations),
            "w_mags": ",".join(repr(w) for w in self.w_mags),
            "ks": ",".join(repr(k) for k in self.ks),
            "trials": self.trials,
            "seed": self.seed,
            "n_points": self.n_points,
            "ransac_iters": self.ransac_iters,
            "threshold": self.threshold,
            "use_refine": int(self.use_refine),
            "image_size": self.image_size,
            "focal": self.focal,
            "depth_min": self.depth_min,
            "depth_max": self.depth_max,
        }
        write_keyvalues(path, vals)
