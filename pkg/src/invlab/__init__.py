"""Deterministic diffusion inversion lab.

Builds the pieces needed to study latent inversion strategies at desk scale:
variance schedules, exact mixture-score noise predictors (compiled kernel
with a NumPy fallback), four inversion methods with algebraic cross-checks,
reconstruction metrics, and a benchmark harness with a CLI.
"""

from .inverter import (
    PRESETS,
    InversionConfig,
    blend_steps,
    closed_form_zt,
    diff_decomposition,
    diff_z0_coefficient,
    invert,
    invert_easy,
    invert_fixed_point,
    invert_renoise,
    invert_vanilla,
    reconstruct,
)
from .kernels import active_backend
from .metrics import RunRecord, RunReport, mse, psnr, psnr_from_mse, ssim
from .predictor import (
    Condition,
    EpsilonPredictor,
    GmmEpsilonPredictor,
    GmmModel,
    Latent,
    PerturbedPredictor,
    ZeroPredictor,
    gmm_epsilon,
)
from .sampler import Trajectory, ddim_step, forward_g, sample
from .schedule import NoiseSchedule, build_schedule, default_schedule

__version__ = "0.1.0"

__all__ = [
    "Condition",
    "EpsilonPredictor",
    "GmmEpsilonPredictor",
    "GmmModel",
    "InversionConfig",
    "Latent",
    "NoiseSchedule",
    "PRESETS",
    "PerturbedPredictor",
    "RunRecord",
    "RunReport",
    "Trajectory",
    "ZeroPredictor",
    "active_backend",
    "blend_steps",
    "build_schedule",
    "closed_form_zt",
    "ddim_step",
    "default_schedule",
    "diff_decomposition",
    "diff_z0_coefficient",
    "forward_g",
    "gmm_epsilon",
    "invert",
    "invert_easy",
    "invert_fixed_point",
    "invert_renoise",
    "invert_vanilla",
    "mse",
    "psnr",
    "psnr_from_mse",
    "reconstruct",
    "sample",
    "ssim",
]
