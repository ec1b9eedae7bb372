"""Variance schedules for the deterministic diffusion lab.

Convention: ``alpha[t]`` is the cumulative signal fraction after ``t``
noising steps, with ``alpha[0] = 1`` (clean data) and ``alpha`` decreasing
in ``t``. One noising step scales the latent and injects predicted noise:

    z_t = step_scale(t) * z_{t-1} + noise_coeff(t) * eps

with

    step_scale(t)  = sqrt(alpha[t] / alpha[t-1])
    noise_coeff(t) = step_scale(t) * (sqrt(1/alpha[t] - 1) - sqrt(1/alpha[t-1] - 1))

``noise_coeff`` is nonnegative for a decreasing schedule, so noising is an
addition of noise. The matching denoising step (``denoise_coeffs``) is the
exact algebraic inverse when fed the same ``eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SCHEDULE_KINDS = ("linear", "scaled_linear")


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal fractions ``alpha[0..T]`` plus derived step coefficients.

    Immutable after construction; safe for concurrent reads. ``build_schedule``
    produces strictly decreasing schedules; direct construction also accepts
    flat sub-schedules (useful as degenerate test fixtures).
    """

    T: int
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        object.__setattr__(self, "alpha", alpha)
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if alpha.shape != (self.T + 1,):
            raise ValueError(f"alpha must have length T+1={self.T + 1}, got {alpha.shape}")
        if alpha[0] != 1.0:
            raise ValueError("alpha[0] must be exactly 1")
        if not np.all(np.diff(alpha) <= 0.0):
            raise ValueError("alpha must be nonincreasing")
        if alpha[-1] <= 0.0:
            raise ValueError("alpha[T] must stay positive")
        alpha.flags.writeable = False

    def _check_t(self, t: int):
        if not 1 <= t <= self.T:
            raise ValueError(f"step index t={t} outside [1, {self.T}]")

    def step_scale(self, t: int) -> float:
        """Latent scale factor sqrt(alpha[t]/alpha[t-1]) of noising step ``t``."""
        self._check_t(t)
        return math.sqrt(self.alpha[t] / self.alpha[t - 1])

    def noise_coeff(self, t: int) -> float:
        """Nonnegative noise weight of noising step ``t``; zero iff the step is flat."""
        self._check_t(t)
        a_t, a_prev = self.alpha[t], self.alpha[t - 1]
        return math.sqrt(a_t / a_prev) * (math.sqrt(1.0 / a_t - 1.0) - math.sqrt(1.0 / a_prev - 1.0))

    def denoise_coeffs(self, t: int) -> tuple[float, float]:
        """(scale, noise_weight) for the denoising step t -> t-1.

        ``scale = sqrt(alpha[t-1]/alpha[t]) >= 1`` and ``noise_weight <= 0``;
        ``scale * step_scale(t) == 1`` exactly up to rounding.
        """
        self._check_t(t)
        a_t, a_prev = self.alpha[t], self.alpha[t - 1]
        scale = math.sqrt(a_prev / a_t)
        noise_weight = math.sqrt(1.0 / a_prev - 1.0) - math.sqrt(1.0 / a_t - 1.0)
        return scale, noise_weight


def build_schedule(kind: str, T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Construct a schedule from per-step betas interpolated over ``T`` steps.

    ``linear`` interpolates the betas directly, ``scaled_linear`` interpolates
    in sqrt-space (both endpoint inclusive); ``alpha[t]`` is the running
    product of ``1 - beta_s``.
    """
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule kind {kind!r}; expected one of {SCHEDULE_KINDS}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")

    if kind == "linear":
        betas = np.linspace(beta_start, beta_end, T)
    else:
        betas = np.linspace(math.sqrt(beta_start), math.sqrt(beta_end), T) ** 2

    alpha = np.empty(T + 1, dtype=np.float64)
    alpha[0] = 1.0
    alpha[1:] = np.cumprod(1.0 - betas)
    return NoiseSchedule(T=T, alpha=alpha)


DEFAULT_SCHEDULE_KIND = "scaled_linear"
DEFAULT_BETA_START = 0.00085
DEFAULT_BETA_END = 0.012


def default_schedule(T: int = 50) -> NoiseSchedule:
    """Scaled-linear schedule with the stock latent-diffusion beta range."""
    return build_schedule(DEFAULT_SCHEDULE_KIND, T, DEFAULT_BETA_START, DEFAULT_BETA_END)
