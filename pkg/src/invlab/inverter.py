"""Inversion strategies mapping a clean latent z_0 to a noise latent z_T.

All four methods share the same outer loop over t = 1..T. Per step they
estimate noise at the previous-step state and index, ``eps = p(z_{t-1}, t-1)``,
then apply the noising map ``forward_g``. They differ in how the step's noise
estimate is refined:

  vanilla      one estimate, one noising step
  fixed_point  re-estimates at the candidate and re-noises from a weighted
               average of the last two estimates, ``inner_iters`` times
  renoise      re-estimates at the candidate and re-noises from the fresh
               estimate alone, ``inner_iters`` times
  easyinv      vanilla, plus a convex blend of the new state with the
               previous-step state inside a fractional step window

``closed_form_zt`` and ``diff_decomposition`` are non-recursive expansions of
the same noising recursion, used as algebraic cross-checks of the inverters.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import sampler
from .predictor import Condition, EpsilonPredictor, Latent
from .sampler import Trajectory, forward_g
from .schedule import NoiseSchedule

METHODS = ("vanilla", "fixed_point", "renoise", "easyinv")


@dataclass(frozen=True)
class InversionConfig:
    """Method selector plus hyperparameters.

    ``steps`` optionally overrides the benchmark schedule length for this
    method; ``blend_stride`` keeps every n-th step of the blend window
    (1 = every in-window step).
    """

    method: str
    inner_iters: int = 1
    mix: tuple[float, float] = (0.5, 0.5)
    eta: float = 1.0
    window: tuple[float, float] = (0.0, 1.0)
    blend_stride: int = 1
    steps: int | None = None
    label: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.inner_iters < 1:
            raise ValueError(f"inner_iters must be >= 1, got {self.inner_iters}")
        if abs(self.mix[0] + self.mix[1] - 1.0) > 1e-12:
            raise ValueError(f"mix weights must sum to 1, got {self.mix}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        lo, hi = self.window
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError(f"window must satisfy 0 <= lo < hi <= 1, got {self.window}")
        if self.blend_stride < 1:
            raise ValueError(f"blend_stride must be >= 1, got {self.blend_stride}")
        if self.steps is not None and self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")

    @property
    def name(self) -> str:
        return self.label or self.method

    def to_dict(self) -> dict:
        d = {"method": self.method}
        if self.method in ("fixed_point", "renoise"):
            d["inner_iters"] = self.inner_iters
        if self.method == "fixed_point":
            d["mix"] = list(self.mix)
        if self.method == "easyinv":
            d["eta"] = self.eta
            d["window"] = list(self.window)
            if self.blend_stride != 1:
                d["blend_stride"] = self.blend_stride
        if self.steps is not None:
            d["steps"] = self.steps
        if self.label is not None:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InversionConfig":
        kwargs = dict(d)
        if "mix" in kwargs:
            kwargs["mix"] = tuple(kwargs["mix"])
        if "window" in kwargs:
            kwargs["window"] = tuple(kwargs["window"])
        return cls(**kwargs)


PRESETS = {
    # blend late, close to the noise end of the trajectory
    "easyinv-late": InversionConfig("easyinv", eta=0.8, window=(0.85, 0.95), label="easyinv-late"),
    # blend early, close to the data end
    "easyinv-early": InversionConfig("easyinv", eta=0.5, window=(0.05, 0.25), label="easyinv-early"),
}


def blend_steps(T: int, window_lo: float, window_hi: float, stride: int = 1) -> tuple[int, ...]:
    """Steps at which the easyinv blend fires: integers strictly inside
    (window_lo * T, window_hi * T), thinned by ``stride``."""
    eligible = [t for t in range(1, T + 1) if window_lo * T < t < window_hi * T]
    return tuple(eligible[::stride])


def _new_trajectory(z0: Latent) -> Trajectory:
    return Trajectory(latents=[z0])


def _finish(traj: Trajectory, p: EpsilonPredictor, evals_before: int) -> Trajectory:
    traj.predictor_evals = p.eval_count - evals_before
    return traj


def _check_z0(z0: Latent):
    if z0.t_index != 0:
        raise ValueError(f"inversion starts from a clean latent tagged 0, got {z0.t_index}")


def invert_vanilla(s: NoiseSchedule, p: EpsilonPredictor, z0: Latent,
                   y: Condition | None = None) -> Trajectory:
    """Plain inversion: T steps, T predictor calls."""
    _check_z0(z0)
    traj = _new_trajectory(z0)
    evals_before = p.eval_count
    z = z0
    for t in range(1, s.T + 1):
        tic = time.perf_counter()
        eps = p.predict(z, t - 1, y).data
        z = forward_g(s, z, t, eps)
        traj.step_times.append(time.perf_counter() - tic)
        traj.eps.append(eps)
        traj.latents.append(z)
    return _finish(traj, p, evals_before)


def invert_fixed_point(s: NoiseSchedule, p: EpsilonPredictor, z0: Latent,
                       y: Condition | None = None, inner_iters: int = 3,
                       mix: tuple[float, float] = (0.5, 0.5)) -> Trajectory:
    """Iterative refinement: per step, re-estimate the noise at the candidate
    state and re-noise from the two-term weighted average. ``inner_iters``
    predictor calls per step; ``inner_iters=1`` degenerates to vanilla."""
    _check_z0(z0)
    if inner_iters < 1:
        raise ValueError(f"inner_iters must be >= 1, got {inner_iters}")
    w_now, w_prev = mix
    traj = _new_trajectory(z0)
    evals_before = p.eval_count
    z = z0
    for t in range(1, s.T + 1):
        tic = time.perf_counter()
        eps_used = p.predict(z, t - 1, y).data
        cand = forward_g(s, z, t, eps_used)
        eps_prev = eps_used
        for _ in range(1, inner_iters):
            eps_k = p.predict(cand, t - 1, y).data
            eps_used = w_now * eps_k + w_prev * eps_prev
            cand = forward_g(s, z, t, eps_used)
            eps_prev = eps_k
        z = cand
        traj.step_times.append(time.perf_counter() - tic)
        traj.eps.append(eps_used)
        traj.latents.append(z)
    return _finish(traj, p, evals_before)


def invert_renoise(s: NoiseSchedule, p: EpsilonPredictor, z0: Latent,
                   y: Condition | None = None, inner_iters: int = 2) -> Trajectory:
    """Re-noising refinement: per step, repeatedly re-estimate the noise at the
    candidate state and redo the noising step from the fresh estimate.
    ``inner_iters`` predictor calls per step; ``inner_iters=1`` is vanilla."""
    _check_z0(z0)
    if inner_iters < 1:
        raise ValueError(f"inner_iters must be >= 1, got {inner_iters}")
    traj = _new_trajectory(z0)
    evals_before = p.eval_count
    z = z0
    for t in range(1, s.T + 1):
        tic = time.perf_counter()
        eps = p.predict(z, t - 1, y).data
        cand = forward_g(s, z, t, eps)
        for _ in range(1, inner_iters):
            eps = p.predict(cand, t - 1, y).data
            cand = forward_g(s, z, t, eps)
        z = cand
        traj.step_times.append(time.perf_counter() - tic)
        traj.eps.append(eps)
        traj.latents.append(z)
    return _finish(traj, p, evals_before)


def invert_easy(s: NoiseSchedule, p: EpsilonPredictor, z0: Latent,
                y: Condition | None = None, eta: float = 0.8,
                window: tuple[float, float] = (0.85, 0.95),
                blend_stride: int = 1) -> Trajectory:
    """Vanilla inversion with latent-state blending: at every window step the
    fresh state is pulled toward the previous-step state,
    ``z_t <- eta * z_t + (1 - eta) * z_{t-1}``. T predictor calls; ``eta=1``
    is bit-identical to vanilla."""
    _check_z0(z0)
    active = frozenset(blend_steps(s.T, window[0], window[1], blend_stride))
    traj = _new_trajectory(z0)
    evals_before = p.eval_count
    z = z0
    for t in range(1, s.T + 1):
        tic = time.perf_counter()
        eps = p.predict(z, t - 1, y).data
        z_new = forward_g(s, z, t, eps)
        if eta != 1.0 and t in active:
            z_new = z_new.with_data(eta * z_new.data + (1.0 - eta) * z.data, t)
        z = z_new
        traj.step_times.append(time.perf_counter() - tic)
        traj.eps.append(eps)
        traj.latents.append(z)
    return _finish(traj, p, evals_before)


def invert(s: NoiseSchedule, p: EpsilonPredictor, z0: Latent, cfg: InversionConfig,
           y: Condition | None = None) -> Trajectory:
    """Dispatch an inversion configuration to its strategy."""
    if cfg.method == "vanilla":
        return invert_vanilla(s, p, z0, y)
    if cfg.method == "fixed_point":
        return invert_fixed_point(s, p, z0, y, cfg.inner_iters, cfg.mix)
    if cfg.method == "renoise":
        return invert_renoise(s, p, z0, y, cfg.inner_iters)
    return invert_easy(s, p, z0, y, cfg.eta, cfg.window, cfg.blend_stride)


def closed_form_zt(s: NoiseSchedule, z0: Latent, eps_list, t: int) -> Latent:
    """Non-recursive expansion of t noising steps:

        z_t = (prod_{i<=t} scale_i) z_0 + sum_i (coeff_i prod_{j>i} scale_j) eps_i

    Equals the step-by-step ``forward_g`` recursion on the same estimates."""
    if t < 0 or t > s.T:
        raise ValueError(f"t={t} outside [0, {s.T}]")
    if len(eps_list) < t:
        raise ValueError(f"need {t} eps vectors, got {len(eps_list)}")
    scales = [s.step_scale(i) for i in range(1, t + 1)]
    # suffix[i] = prod_{j=i+1..t} scale_j
    suffix = np.ones(t + 1)
    for i in range(t - 1, -1, -1):
        suffix[i] = suffix[i + 1] * scales[i]
    data = suffix[0] * z0.data
    for i in range(1, t + 1):
        data = data + (s.noise_coeff(i) * suffix[i]) * sampler._eps_data(eps_list[i - 1])
    return z0.with_data(data, t)


def diff_z0_coefficient(s: NoiseSchedule, t_bar: int) -> float:
    """Weight of z_0 in the one-step state difference z_{t-1} - z_t;
    strictly positive for any strictly decreasing schedule."""
    if not 1 <= t_bar <= s.T:
        raise ValueError(f"t_bar={t_bar} outside [1, {s.T}]")
    prod = 1.0
    for i in range(1, t_bar):
        prod *= s.step_scale(i)
    return prod * (1.0 - s.step_scale(t_bar))


def diff_decomposition(s: NoiseSchedule, z0: Latent, eps_list, t_bar: int) -> Latent:
    """Expansion of z_{t_bar-1} - z_{t_bar}: a positive multiple of z_0, the
    accumulated noise terms scaled by (1 - scale_{t_bar}), and the negated
    step-``t_bar`` noise term."""
    if not 1 <= t_bar <= s.T:
        raise ValueError(f"t_bar={t_bar} outside [1, {s.T}]")
    if len(eps_list) < t_bar:
        raise ValueError(f"need {t_bar} eps vectors, got {len(eps_list)}")
    one_minus_scale = 1.0 - s.step_scale(t_bar)
    scales = [s.step_scale(i) for i in range(1, t_bar)]
    suffix = np.ones(t_bar)
    for i in range(t_bar - 2, -1, -1):
        suffix[i] = suffix[i + 1] * scales[i]
    data = (suffix[0] * one_minus_scale) * z0.data
    for i in range(1, t_bar):
        coeff = one_minus_scale * s.noise_coeff(i) * suffix[i]
        data = data + coeff * sampler._eps_data(eps_list[i - 1])
    data = data - s.noise_coeff(t_bar) * sampler._eps_data(eps_list[t_bar - 1])
    return z0.with_data(data, t_bar)


def reconstruct(s: NoiseSchedule, p: EpsilonPredictor, traj: Trajectory,
                y: Condition | None = None) -> Latent:
    """Denoise an inversion endpoint back to a clean latent (T predictor calls)."""
    if traj.end.t_index != s.T:
        raise ValueError(f"trajectory must end at t=T={s.T}, got {traj.end.t_index}")
    return sampler.sample(s, p, traj.end, y).end
