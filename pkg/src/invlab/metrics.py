"""Reconstruction-quality metrics and per-run report records."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .predictor import Latent

RUNS_CSV_HEADER = ["method", "seed", "mse", "psnr_db", "ssim", "evals", "wall_ms"]
PSNR_ZERO_MSE_DB = 99.0


def _vec(x) -> np.ndarray:
    return x.data if isinstance(x, Latent) else np.asarray(x, dtype=np.float64).reshape(-1)


def mse(a, b) -> float:
    v, w = _vec(a), _vec(b)
    if v.shape != w.shape:
        raise ValueError(f"dimension mismatch: {v.shape} vs {w.shape}")
    d = v - w
    return float(np.mean(d * d))


def psnr_from_mse(mse_value: float, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; 99 dB sentinel at zero error."""
    if peak <= 0.0:
        raise ValueError(f"peak must be > 0, got {peak}")
    if mse_value < 0.0:
        raise ValueError(f"mse must be >= 0, got {mse_value}")
    if mse_value == 0.0:
        return PSNR_ZERO_MSE_DB
    return 10.0 * math.log10(peak * peak / mse_value)


def psnr(a, b, peak: float = 1.0) -> float:
    return psnr_from_mse(mse(a, b), peak)


def _grid_of(x) -> tuple[int, int]:
    if isinstance(x, Latent):
        if x.grid is None:
            raise ValueError("ssim needs latents with grid metadata")
        return x.grid
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ValueError("ssim on raw arrays requires a 2-D image")
    return arr.shape


def _gaussian_taps(n: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(n) - (n - 1) / 2.0
    k = np.exp(-(r * r) / (2.0 * sigma * sigma))
    return k / k.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a symmetric kernel."""
    n = taps.shape[0]
    h, w = img.shape
    out = np.zeros((h - n + 1, w))
    for i, c in enumerate(taps):
        out += c * img[i : i + h - n + 1, :]
    res = np.zeros((h - n + 1, w - n + 1))
    for j, c in enumerate(taps):
        res += c * out[:, j : j + w - n + 1]
    return res


def ssim(a, b, window: str = "global", k1: float = 0.01, k2: float = 0.03,
         dynamic_range: float = 1.0) -> float:
    """Structural similarity in [-1, 1].

    ``global`` treats the whole grid as one window (sample covariance;
    suitable for small latents). ``gaussian11`` averages a per-pixel map
    computed under an 11-tap, sigma-1.5 Gaussian window (population moments,
    valid region only); requires grids of at least 11x11.
    """
    ga, gb = _grid_of(a), _grid_of(b)
    if ga != gb:
        raise ValueError(f"grid mismatch: {ga} vs {gb}")
    if dynamic_range <= 0.0:
        raise ValueError(f"dynamic_range must be > 0, got {dynamic_range}")
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    x = _vec(a).reshape(ga)
    y = _vec(b).reshape(gb)

    if window == "global":
        xf, yf = x.ravel(), y.ravel()
        mx, my = xf.mean(), yf.mean()
        n = xf.size
        ddof = 1 if n > 1 else 0
        vx = xf.var(ddof=ddof)
        vy = yf.var(ddof=ddof)
        cov = float(((xf - mx) * (yf - my)).sum() / max(n - 1, 1))
        num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        return float(num / den)

    if window != "gaussian11":
        raise ValueError(f"unknown ssim window {window!r}; expected 'global' or 'gaussian11'")
    if min(ga) < 11:
        raise ValueError(f"gaussian11 window needs grids of at least 11x11, got {ga}")
    taps = _gaussian_taps()
    mx = _filter_valid(x, taps)
    my = _filter_valid(y, taps)
    vx = _filter_valid(x * x, taps) - mx * mx
    vy = _filter_valid(y * y, taps) - my * my
    cov = _filter_valid(x * y, taps) - mx * my
    num = (2.0 * mx * my + c1) * (2.0 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float((num / den).mean())


@dataclass
class RunRecord:
    """One (method, seed) benchmark row. ``lpips`` is reserved for full-scale
    adapters and stays None here; ``error`` marks failed runs."""

    method: str
    seed: int
    mse: float = float("nan")
    psnr_db: float = float("nan")
    ssim: float = float("nan")
    evals: int = 0
    wall_ms: float = float("nan")
    lpips: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


METRIC_FIELDS = ("mse", "psnr_db", "ssim", "evals", "wall_ms")


@dataclass
class RunReport:
    """Benchmark records plus method-level aggregates recomputable from them."""

    records: list[RunRecord] = field(default_factory=list)

    def methods(self) -> list[str]:
        seen = []
        for r in self.records:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def rows_for(self, method: str) -> list[RunRecord]:
        return [r for r in self.records if r.method == method and r.ok]

    def failures(self) -> list[RunRecord]:
        return [r for r in self.records if not r.ok]

    def aggregate(self) -> dict[str, dict[str, float]]:
        """method -> {metric_mean, metric_std} over successful rows
        (population std, deterministic for a fixed record set)."""
        out = {}
        for method in self.methods():
            rows = self.rows_for(method)
            stats: dict[str, float] = {"runs": len(rows)}
            for name in METRIC_FIELDS:
                vals = np.array([getattr(r, name) for r in rows], dtype=np.float64)
                stats[f"{name}_mean"] = float(vals.mean()) if len(vals) else float("nan")
                stats[f"{name}_std"] = float(vals.std()) if len(vals) else float("nan")
            out[method] = stats
        return out

    def to_csv(self, path):
        """Per-run rows under the stable header; failed rows keep empty metric
        cells. Metric columns are written with repr for byte-stable output."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RUNS_CSV_HEADER)
            for r in self.records:
                if r.ok:
                    writer.writerow([
                        r.method, r.seed, repr(r.mse), repr(r.psnr_db), repr(r.ssim),
                        r.evals, repr(r.wall_ms),
                    ])
                else:
                    writer.writerow([r.method, r.seed, "", "", "", "", ""])

    def aggregates_to_csv(self, path):
        agg = self.aggregate()
        names = [f"{m}_{s}" for m in METRIC_FIELDS for s in ("mean", "std")]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "runs"] + names)
            for method, stats in agg.items():
                writer.writerow([method, stats["runs"]] + [repr(stats[n]) for n in names])
