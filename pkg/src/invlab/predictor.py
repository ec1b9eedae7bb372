"""Noise estimators: exact mixture-score predictors and degradation wrappers.

A predictor maps ``(latent, step index, condition)`` to a noise estimate of
the same dimension. All predictors here are deterministic (identical inputs
give identical bits) and count every evaluation, so harness code can verify
per-method call budgets exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .schedule import NoiseSchedule


@dataclass(frozen=True)
class Latent:
    """A flat real vector tagged with its timestep index.

    ``grid`` optionally records an (H, W) layout so image-style metrics can
    treat the vector as a picture; its product must match the length.
    """

    data: np.ndarray
    t_index: int
    grid: tuple[int, int] | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "data", data)
        if not np.all(np.isfinite(data)):
            raise ValueError("latent components must be finite")
        if self.grid is not None:
            h, w = self.grid
            if h * w != data.shape[0]:
                raise ValueError(f"grid {self.grid} does not match dimension {data.shape[0]}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def with_data(self, data, t_index: int) -> "Latent":
        return Latent(data, t_index, self.grid)


@dataclass(frozen=True)
class Condition:
    """Opaque conditioning token.

    ``None`` (or empty) selects the full mixture; a comma-separated list of
    component indices such as ``"0"`` or ``"0,2"`` restricts the predictor to
    that subset, with weights renormalized.
    """

    token: str | None = None

    def component_subset(self) -> tuple[int, ...] | None:
        if not self.token:
            return None
        try:
            return tuple(int(part) for part in self.token.split(","))
        except ValueError:
            raise ValueError(f"condition token {self.token!r} is not a component list")


@dataclass(frozen=True)
class GmmModel:
    """Isotropic Gaussian mixture: weights, means (k, d), one variance per component."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        m = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        v = np.asarray(self.variances, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)
        k = w.shape[0]
        if k < 1:
            raise ValueError("mixture needs at least one component")
        if m.shape[0] != k or v.shape[0] != k:
            raise ValueError("weights, means, variances must agree on the component count")
        if np.any(w <= 0.0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {w.sum()!r}")
        if np.any(v < 0.0) or not np.all(np.isfinite(v)):
            raise ValueError("variances must be finite and >= 0")
        for arr in (w, m, v):
            arr.flags.writeable = False

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def restrict(self, subset: tuple[int, ...]) -> "GmmModel":
        """Sub-mixture over ``subset`` with renormalized weights."""
        idx = list(subset)
        w = self.weights[idx]
        return GmmModel(w / w.sum(), self.means[idx], self.variances[idx])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comps = rng.choice(self.n_components, size=n, p=self.weights)
        noise = rng.standard_normal((n, self.dim))
        return self.means[comps] + np.sqrt(self.variances[comps])[:, None] * noise

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GmmModel":
        return cls(d["weights"], d["means"], d["variances"])


def gmm_epsilon(model: GmmModel, schedule: NoiseSchedule, z: Latent, t: int,
                y: Condition | None = None, backend: str | None = None) -> Latent:
    """Exact noise estimate for ``z`` at step ``t`` under the diffused mixture.

    Stateless form of :class:`GmmEpsilonPredictor`; see the kernel docstring
    for the underlying score formula.
    """
    if not 0 <= t <= schedule.T:
        raise ValueError(f"step index t={t} outside [0, {schedule.T}]")
    if z.dim != model.dim:
        raise ValueError(f"latent dimension {z.dim} != mixture dimension {model.dim}")
    active = model
    if y is not None:
        subset = y.component_subset()
        if subset is not None:
            active = model.restrict(subset)
    kern = kernels.get_kernel(backend)
    eps = kern(z.data, active.weights, active.means, active.variances, float(schedule.alpha[t]))
    return z.with_data(eps, t)


class EpsilonPredictor:
    """Deterministic noise-estimation interface with per-instance call counting.

    Counters are plain per-instance accumulators; give each concurrent run its
    own predictor and merge counts afterwards.
    """

    def __init__(self):
        self.eval_count = 0

    def predict(self, z: Latent, t: int, y: Condition | None = None) -> Latent:
        self.eval_count += 1
        return self._predict(z, t, y)

    def _predict(self, z, t, y):
        raise NotImplementedError


class GmmEpsilonPredictor(EpsilonPredictor):
    """Analytic predictor backed by :func:`gmm_epsilon`."""

    def __init__(self, model: GmmModel, schedule: NoiseSchedule, backend: str | None = None):
        super().__init__()
        self.model = model
        self.schedule = schedule
        self.backend = backend

    def _predict(self, z, t, y):
        return gmm_epsilon(self.model, self.schedule, z, t, y, backend=self.backend)


class ZeroPredictor(EpsilonPredictor):
    """Always estimates zero noise; test fixture."""

    def __init__(self, dim: int):
        super().__init__()
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim

    def _predict(self, z, t, y):
        if z.dim != self.dim:
            raise ValueError(f"latent dimension {z.dim} != predictor dimension {self.dim}")
        return z.with_data(np.zeros(self.dim), t)


PERTURBATION_MODES = ("additive_bias", "quantize")


class PerturbedPredictor(EpsilonPredictor):
    """Controlled degradation of an inner predictor.

    ``additive_bias`` adds a fixed seeded unit vector per step index, scaled
    by ``magnitude * ||eps||``, emulating a systematically biased model.
    ``quantize`` rounds every component to the nearest multiple of
    ``magnitude`` (ties to even). ``magnitude == 0`` passes estimates through
    untouched.
    """

    def __init__(self, inner: EpsilonPredictor, mode: str, magnitude: float, seed: int = 0):
        super().__init__()
        if mode not in PERTURBATION_MODES:
            raise ValueError(f"unknown perturbation mode {mode!r}; expected {PERTURBATION_MODES}")
        if magnitude < 0.0:
            raise ValueError(f"magnitude must be >= 0, got {magnitude}")
        self.inner = inner
        self.mode = mode
        self.magnitude = float(magnitude)
        self.seed = int(seed)
        self._bias_cache: dict[tuple[int, int], np.ndarray] = {}

    def _bias_direction(self, t: int, dim: int) -> np.ndarray:
        key = (t, dim)
        u = self._bias_cache.get(key)
        if u is None:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, t]))
            u = rng.standard_normal(dim)
            u /= np.linalg.norm(u)
            self._bias_cache[key] = u
        return u

    def _predict(self, z, t, y):
        eps = self.inner.predict(z, t, y)
        if self.magnitude == 0.0:
            return eps
        if self.mode == "additive_bias":
            u = self._bias_direction(t, eps.dim)
            scale = self.magnitude * np.linalg.norm(eps.data)
            return eps.with_data(eps.data + scale * u, t)
        return eps.with_data(np.round(eps.data / self.magnitude) * self.magnitude, t)
