"""Differential structure from motion for rolling-shutter cameras.

Estimates instantaneous camera motion (translation direction, angular
velocity and, optionally, an acceleration factor) from optical flow, with
the scanline timing of a rolling shutter folded into the measurement
model.  Includes robust estimation, nonlinear refinement, dense depth
recovery, image rectification and a synthetic data generator.
"""

from .errors import (
    DegenerateConfiguration,
    EmptySelection,
    InvalidScanlinePair,
    NoRealSolution,
    RobustFailure,
    RsSfmError,
    SingularBlock,
)
from .geometry import (
    CameraConfig,
    EpipolarVector,
    FlowSample,
    MotionEstimate,
    epipolar_residual,
    exp_so3,
    log_so3,
    matrices_ab,
    project_flow,
    skew,
    symmetric_s,
)
from .gs_solver import recover_motion, solve_gs, solve_linear
from .rs_solvers import (
    DetPolynomial,
    ScanlineFactors,
    det_polynomial,
    scanline_factors,
    solve_const_accel,
    solve_const_velocity,
)
from .robust import (
    RansacConfig,
    RansacResult,
    filter_flows,
    forward_backward_error,
    ransac,
    refit_trimmed,
)
from .refine import RefineState, dense_depth, refine
from .rectify import WarpField, rectify_image, warp_field, warp_field_backprojection
from .synth import (
    CONST_ACCEL,
    CONST_VELOCITY,
    GLOBAL_SHUTTER,
    GroundTruth,
    SceneSpec,
    generate_discrete,
    generate_linearized,
    benchmark_config,
    rotation_error,
    translation_error,
)
from .io_formats import (
    ExperimentConfig,
    FlowFile,
    read_flo,
    read_flow,
    read_motion,
    read_pfm,
    read_pnm,
    write_flow,
    write_motion,
    write_pfm,
    write_pnm,
)
from .experiment import run_cell, run_sweep, sweep_csv

__version__ = "0.1.0"

__all__ = [
    "CameraConfig",
    "CONST_ACCEL",
    "CONST_VELOCITY",
    "DegenerateConfiguration",
    "DetPolynomial",
    "EmptySelection",
    "EpipolarVector",
    "ExperimentConfig",
    "FlowFile",
    "FlowSample",
    "GLOBAL_SHUTTER",
    "GroundTruth",
    "InvalidScanlinePair",
    "MotionEstimate",
    "NoRealSolution",
    "RansacConfig",
    "RansacResult",
    "RefineState",
    "RobustFailure",
    "RsSfmError",
    "SceneSpec",
    "ScanlineFactors",
    "SingularBlock",
    "WarpField",
    "dense_depth",
    "det_polynomial",
    "epipolar_residual",
    "exp_so3",
    "filter_flows",
    "forward_backward_error",
    "generate_discrete",
    "generate_linearized",
    "log_so3",
    "matrices_ab",
    "benchmark_config",
    "project_flow",
    "ransac",
    "read_flo",
    "read_flow",
    "read_motion",
    "read_pfm",
    "read_pnm",
    "recover_motion",
    "rectify_image",
    "refine",
    "refit_trimmed",
    "rotation_error",
    "run_cell",
    "run_sweep",
    "scanline_factors",
    "skew",
    "solve_const_accel",
    "solve_const_velocity",
    "solve_gs",
    "solve_linear",
    "sweep_csv",
    "symmetric_s",
    "translation_error",
    "warp_field",
    "warp_field_backprojection",
    "write_flow",
    "write_motion",
    "write_pfm",
    "write_pnm",
]
