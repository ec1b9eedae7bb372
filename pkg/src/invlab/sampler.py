"""Denoising direction: single deterministic step, full sampling loop, and
the forward (noising) map used by the inverters."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .predictor import Condition, EpsilonPredictor, Latent
from .schedule import NoiseSchedule


@dataclass
class Trajectory:
    """Recorded pass through the schedule: latents at every visited step,
    the noise estimate consumed per step, eval count and per-step wall time."""

    latents: list[Latent]
    eps: list[np.ndarray] = field(default_factory=list)
    predictor_evals: int = 0
    step_times: list[float] = field(default_factory=list)

    @property
    def start(self) -> Latent:
        return self.latents[0]

    @property
    def end(self) -> Latent:
        return self.latents[-1]

    @property
    def n_steps(self) -> int:
        return len(self.latents) - 1

    def t_indices(self) -> list[int]:
        return [z.t_index for z in self.latents]

    def validate(self):
        tags = self.t_indices()
        diffs = np.diff(tags)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError(f"timestep tags must be strictly monotone, got {tags}")
        if len(self.eps) != self.n_steps:
            raise ValueError(f"{len(self.eps)} eps records for {self.n_steps} steps")

    def wall_seconds(self) -> float:
        return float(sum(self.step_times))

    def to_csv(self, path):
        """One row per step: resulting t, wall ms, ||z||, ||eps||."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "wall_ms", "z_norm", "eps_norm"])
            for i in range(self.n_steps):
                z = self.latents[i + 1]
                writer.writerow([
                    z.t_index,
                    repr(self.step_times[i] * 1e3),
                    repr(float(np.linalg.norm(z.data))),
                    repr(float(np.linalg.norm(self.eps[i]))),
                ])

    def save_npz(self, path):
        """Binary dump for exact replay."""
        np.savez(
            path,
            latents=np.stack([z.data for z in self.latents]),
            t_indices=np.array(self.t_indices(), dtype=np.int64),
            eps=np.stack(self.eps) if self.eps else np.zeros((0, self.start.dim)),
            predictor_evals=np.int64(self.predictor_evals),
            step_times=np.array(self.step_times, dtype=np.float64),
            grid=np.array(self.start.grid if self.start.grid else (0, 0), dtype=np.int64),
        )

    @classmethod
    def load_npz(cls, path) -> "Trajectory":
        with np.load(path) as dump:
            grid = tuple(int(g) for g in dump["grid"])
            grid = grid if grid != (0, 0) else None
            latents = [
                Latent(row, int(t), grid)
                for row, t in zip(dump["latents"], dump["t_indices"])
            ]
            return cls(
                latents=latents,
                eps=[row for row in dump["eps"]],
                predictor_evals=int(dump["predictor_evals"]),
                step_times=list(dump["step_times"]),
            )


def _eps_data(eps) -> np.ndarray:
    return eps.data if isinstance(eps, Latent) else np.asarray(eps, dtype=np.float64)


def ddim_step(s: NoiseSchedule, p: EpsilonPredictor, z_t: Latent, t: int,
              y: Condition | None = None) -> Latent:
    """One deterministic denoising step t -> t-1 (exactly one predictor call)."""
    if z_t.t_index != t:
        raise ValueError(f"latent tagged {z_t.t_index}, expected {t}")
    scale, noise_weight = s.denoise_coeffs(t)
    eps = p.predict(z_t, t, y)
    data = scale * z_t.data
    if noise_weight != 0.0:
        data = data + noise_weight * eps.data
    return z_t.with_data(data, t - 1)


def forward_g(s: NoiseSchedule, z_prev: Latent, t: int, eps) -> Latent:
    """One noising step t-1 -> t with a given noise estimate (no predictor call)."""
    if z_prev.t_index != t - 1:
        raise ValueError(f"latent tagged {z_prev.t_index}, expected {t - 1}")
    eps_data = _eps_data(eps)
    if eps_data.shape != z_prev.data.shape:
        raise ValueError(f"eps shape {eps_data.shape} != latent shape {z_prev.data.shape}")
    coeff = s.noise_coeff(t)
    data = s.step_scale(t) * z_prev.data
    if coeff != 0.0:
        data = data + coeff * eps_data
    return z_prev.with_data(data, t)


def sample(s: NoiseSchedule, p: EpsilonPredictor, z_T: Latent,
           y: Condition | None = None) -> Trajectory:
    """Full denoising loop t = T..1; exactly T predictor calls."""
    if z_T.t_index != s.T:
        raise ValueError(f"latent tagged {z_T.t_index}, expected T={s.T}")
    evals_before = p.eval_count
    traj = Trajectory(latents=[z_T])
    z = z_T
    for t in range(s.T, 0, -1):
        tic = time.perf_counter()
        eps = p.predict(z, t, y)
        scale, noise_weight = s.denoise_coeffs(t)
        data = scale * z.data
        if noise_weight != 0.0:
            data = data + noise_weight * eps.data
        z = z.with_data(data, t - 1)
        traj.step_times.append(time.perf_counter() - tic)
        traj.eps.append(eps.data)
        traj.latents.append(z)
    traj.predictor_evals = p.eval_count - evals_before
    return traj
