"""Benchmark harness: config handling, dataset generation, the method-matrix
benchmark, and the invariant selfcheck suite.

Config files are JSON with the following shape (see README for field docs):

    {
      "seed": 0, "n_seeds": 200, "dim": 2, "grid": null, "out_dir": null,
      "schedule": {"kind": "scaled_linear", "T": 50,
                   "beta_start": 0.00085, "beta_end": 0.012},
      "gmm": {"weights": [..], "means": [[..]], "variances": [..]},
      "perturbation": null | {"mode": "additive_bias", "magnitude": 0.05, "seed": 7},
      "condition": null,
      "methods": [{"method": "vanilla"}, {"method": "easyinv", "eta": 0.8,
                   "window": [0.85, 0.95]}, ...]
    }
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import inverter, sampler, schedule as schedule_mod
from .inverter import InversionConfig
from .metrics import RunRecord, RunReport, mse, psnr, ssim
from .predictor import (
    PERTURBATION_MODES,
    Condition,
    GmmEpsilonPredictor,
    GmmModel,
    Latent,
    PerturbedPredictor,
)
from .schedule import NoiseSchedule


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str = schedule_mod.DEFAULT_SCHEDULE_KIND
    T: int = 50
    beta_start: float = schedule_mod.DEFAULT_BETA_START
    beta_end: float = schedule_mod.DEFAULT_BETA_END

    def build(self, T: int | None = None) -> NoiseSchedule:
        return schedule_mod.build_schedule(self.kind, T or self.T, self.beta_start, self.beta_end)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "T": self.T,
                "beta_start": self.beta_start, "beta_end": self.beta_end}

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduleSpec":
        return cls(**d)


@dataclass(frozen=True)
class PerturbationSpec:
    mode: str
    magnitude: float
    seed: int = 0

    def __post_init__(self):
        if self.mode not in PERTURBATION_MODES:
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        if self.magnitude < 0.0:
            raise ValueError("perturbation magnitude must be >= 0")

    def to_dict(self) -> dict:
        return {"mode": self.mode, "magnitude": self.magnitude, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationSpec":
        return cls(**d)


@dataclass(frozen=True)
class ExperimentConfig:
    schedule: ScheduleSpec
    gmm: GmmModel
    methods: tuple[InversionConfig, ...]
    n_seeds: int = 20
    dim: int = 2
    grid: tuple[int, int] | None = None
    seed: int = 0
    perturbation: PerturbationSpec | None = None
    condition: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.n_seeds < 1:
            raise ValueError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if not self.methods:
            raise ValueError("config needs at least one method entry")
        if self.gmm.dim != self.dim:
            raise ValueError(f"gmm dimension {self.gmm.dim} != configured dim {self.dim}")
        if self.grid is not None and self.grid[0] * self.grid[1] != self.dim:
            raise ValueError(f"grid {self.grid} does not match dim {self.dim}")

    def method_labels(self) -> list[str]:
        """Deterministic distinct row labels, suffixing repeated names."""
        labels, seen = [], {}
        for m in self.methods:
            base = m.name
            seen[base] = seen.get(base, 0) + 1
            labels.append(base if seen[base] == 1 else f"{base}-{seen[base]}")
        return labels

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_seeds": self.n_seeds,
            "dim": self.dim,
            "grid": list(self.grid) if self.grid else None,
            "out_dir": self.out_dir,
            "schedule": self.schedule.to_dict(),
            "gmm": self.gmm.to_dict(),
            "perturbation": self.perturbation.to_dict() if self.perturbation else None,
            "condition": self.condition,
            "methods": [m.to_dict() for m in self.methods],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            schedule=ScheduleSpec.from_dict(d["schedule"]),
            gmm=GmmModel.from_dict(d["gmm"]),
            methods=tuple(InversionConfig.from_dict(m) for m in d["methods"]),
            n_seeds=d.get("n_seeds", 20),
            dim=d.get("dim", 2),
            grid=tuple(d["grid"]) if d.get("grid") else None,
            seed=d.get("seed", 0),
            perturbation=PerturbationSpec.from_dict(d["perturbation"])
            if d.get("perturbation")
            else None,
            condition=d.get("condition"),
            out_dir=d.get("out_dir"),
        )

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_gmm(dim: int = 2, n_components: int = 3, variance: float = 0.05) -> GmmModel:
    """Equal-weight mixture with means spread on the unit circle (first two
    coordinates; higher dimensions zero-padded)."""
    angles = 2.0 * math.pi * np.arange(n_components) / n_components
    means = np.zeros((n_components, dim))
    means[:, 0] = np.cos(angles)
    if dim > 1:
        means[:, 1] = np.sin(angles)
    weights = np.full(n_components, 1.0 / n_components)
    weights[-1] = 1.0 - weights[:-1].sum()
    return GmmModel(weights, means, np.full(n_components, variance))


def default_methods() -> tuple[InversionConfig, ...]:
    return (
        InversionConfig("vanilla"),
        InversionConfig("fixed_point", inner_iters=3),
        InversionConfig("renoise", inner_iters=2),
        inverter.PRESETS["easyinv-late"],
        inverter.PRESETS["easyinv-early"],
    )


def default_config(n_seeds: int = 200, T: int = 50,
                   perturbation: PerturbationSpec | None = None,
                   methods: tuple[InversionConfig, ...] | None = None,
                   out_dir: str | None = None, seed: int = 0) -> ExperimentConfig:
    return ExperimentConfig(
        schedule=ScheduleSpec(T=T),
        gmm=default_gmm(),
        methods=methods or default_methods(),
        n_seeds=n_seeds,
        dim=2,
        seed=seed,
        perturbation=perturbation,
        out_dir=out_dir,
    )


def gen_dataset(model: GmmModel, n: int, seed: int,
                grid: tuple[int, int] | None = None) -> list[Latent]:
    """n i.i.d. clean latents from the mixture, reproducible from the seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return [Latent(row, 0, grid) for row in model.sample(n, rng)]


def make_predictor(cfg: ExperimentConfig, sched: NoiseSchedule):
    p = GmmEpsilonPredictor(cfg.gmm, sched)
    if cfg.perturbation is not None and cfg.perturbation.magnitude > 0.0:
        p = PerturbedPredictor(p, cfg.perturbation.mode, cfg.perturbation.magnitude,
                               cfg.perturbation.seed)
    return p


def run_single(cfg: ExperimentConfig, method: InversionConfig, label: str,
               seed_idx: int, z0: Latent) -> tuple[RunRecord, dict]:
    """One invert -> reconstruct -> score pass with a private predictor."""
    sched = cfg.schedule.build(method.steps)
    predictor = make_predictor(cfg, sched)
    y = Condition(cfg.condition) if cfg.condition else None
    try:
        traj = inverter.invert(sched, predictor, z0, method, y)
        z_hat = inverter.reconstruct(sched, predictor, traj, y)
        grid = z0.grid or (1, z0.dim)
        err = mse(z_hat, z0)
        record = RunRecord(
            method=label,
            seed=seed_idx,
            mse=err,
            psnr_db=psnr(z_hat, z0),
            ssim=ssim(Latent(z_hat.data, 0, grid), Latent(z0.data, 0, grid)),
            evals=traj.predictor_evals,
            wall_ms=traj.wall_seconds() * 1e3,
        )
        mid = traj.latents[sched.T // 2]
        extra = {"mid_step_dist": float(np.linalg.norm(mid.data - z0.data))}
        return record, extra
    except Exception as exc:  # harness keeps going; row carries the error tag
        return RunRecord(method=label, seed=seed_idx, error=f"{type(exc).__name__}: {exc}"), {}


def run_benchmark(cfg: ExperimentConfig, workers: int = 1) -> RunReport:
    """Full method-by-seed matrix. Metric columns are deterministic for a
    fixed config (wall times are not); failed rows are tagged and skipped in
    aggregates. Writes runs.csv / aggregate.csv / summary.json under
    ``cfg.out_dir`` when set."""
    dataset = gen_dataset(cfg.gmm, cfg.n_seeds, cfg.seed, cfg.grid)
    labels = cfg.method_labels()
    jobs = [
        (method, label, seed_idx, dataset[seed_idx])
        for method, label in zip(cfg.methods, labels)
        for seed_idx in range(cfg.n_seeds)
    ]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: run_single(cfg, *job), jobs))
    else:
        results = [run_single(cfg, *job) for job in jobs]

    report = RunReport(records=[rec for rec, _ in results])
    mid_dists: dict[str, list[float]] = {}
    for (method, label, seed_idx, _), (rec, extra) in zip(jobs, results):
        if rec.ok:
            mid_dists.setdefault(label, []).append(extra["mid_step_dist"])

    if cfg.out_dir is not None:
        _write_outputs(cfg, report, mid_dists)
    return report


def parity_claim(report: RunReport, baseline: str = "vanilla") -> dict | None:
    """Compare every easyinv row group against the baseline's mean MSE and
    flag whether the best one is at or below it."""
    agg = report.aggregate()
    if baseline not in agg:
        return None
    easy = {m: s for m, s in agg.items() if m.startswith("easyinv")}
    if not easy:
        return None
    best = min(easy, key=lambda m: easy[m]["mse_mean"])
    base_mse = agg[baseline]["mse_mean"]
    return {
        "baseline": baseline,
        "baseline_mse_mean": base_mse,
        "best_easyinv": best,
        "best_easyinv_mse_mean": easy[best]["mse_mean"],
        "ratio": easy[best]["mse_mean"] / base_mse if base_mse > 0 else float("inf"),
        "holds": bool(easy[best]["mse_mean"] <= base_mse),
        "per_method": {m: s["mse_mean"] for m, s in easy.items()},
    }


def _write_outputs(cfg: ExperimentConfig, report: RunReport, mid_dists: dict):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "runs.csv")
    report.aggregates_to_csv(out / "aggregate.csv")
    failures = report.failures()
    summary = {
        "config": cfg.to_dict(),
        "aggregate": report.aggregate(),
        "mid_step_dist_mean": {m: float(np.mean(v)) for m, v in mid_dists.items()},
        "failures": [{"method": r.method, "seed": r.seed, "error": r.error} for r in failures],
        "parity_claim": parity_claim(report),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


# ---------------------------------------------------------------------------
# selfcheck: fast invariant suites over all modules

_REL_TOL = 1e-10


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / scale


def _random_schedule(rng: np.random.Generator, T: int) -> NoiseSchedule:
    betas = rng.uniform(1e-4, 0.05, size=T)
    alpha = np.empty(T + 1)
    alpha[0] = 1.0
    alpha[1:] = np.cumprod(1.0 - betas)
    return NoiseSchedule(T=T, alpha=alpha)


def _check_noising_algebra(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(50):
        T = int(rng.integers(1, 40))
        s = _random_schedule(rng, T)
        for t in range(1, T + 1):
            if s.noise_coeff(t) < 0.0:
                return False, f"negative noise coefficient at t={t}"
            z = Latent(rng.standard_normal(4), t - 1)
            eps = rng.standard_normal(4)
            noised = sampler.forward_g(s, z, t, eps)
            scale, noise_weight = s.denoise_coeffs(t)
            back = scale * noised.data + noise_weight * eps
            worst = max(worst, _rel_err(back, z.data))
    return worst <= _REL_TOL, f"worst step round-trip rel err {worst:.3e}"


def _check_closed_form(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(200):
        T = int(rng.integers(1, 60))
        d = int(rng.integers(1, 9))
        s = _random_schedule(rng, T)
        z0 = Latent(rng.standard_normal(d), 0)
        eps = [rng.standard_normal(d) for _ in range(T)]
        z = z0
        for t in range(1, T + 1):
            z = sampler.forward_g(s, z, t, eps[t - 1])
        direct = inverter.closed_form_zt(s, z0, eps, T)
        worst = max(worst, _rel_err(direct.data, z.data))
    return worst <= _REL_TOL, f"worst closed-form rel err {worst:.3e}"


def _check_difference_identity(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(200):
        T = int(rng.integers(1, 60))
        d = int(rng.integers(1, 9))
        s = _random_schedule(rng, T)
        t_bar = int(rng.integers(1, T + 1))
        z0 = Latent(rng.standard_normal(d), 0)
        eps = [rng.standard_normal(d) for _ in range(t_bar)]
        expected = (
            inverter.closed_form_zt(s, z0, eps, t_bar - 1).data
            - inverter.closed_form_zt(s, z0, eps, t_bar).data
        )
        got = inverter.diff_decomposition(s, z0, eps, t_bar).data
        worst = max(worst, _rel_err(got, expected))
        if inverter.diff_z0_coefficient(s, t_bar) <= 0.0:
            return False, f"nonpositive z0 coefficient at t_bar={t_bar}"
    return worst <= _REL_TOL, f"worst difference rel err {worst:.3e}"


def _check_degeneracies(rng) -> tuple[bool, str]:
    sched = schedule_mod.default_schedule(20)
    model = default_gmm()
    for seed in range(3):
        z0 = gen_dataset(model, 1, seed)[0]
        base = inverter.invert_vanilla(sched, GmmEpsilonPredictor(model, sched), z0)
        variants = {
            "easyinv(eta=1)": inverter.invert_easy(
                sched, GmmEpsilonPredictor(model, sched), z0, eta=1.0, window=(0.1, 0.9)),
            "fixed_point(n=1)": inverter.invert_fixed_point(
                sched, GmmEpsilonPredictor(model, sched), z0, inner_iters=1),
            "renoise(k=1)": inverter.invert_renoise(
                sched, GmmEpsilonPredictor(model, sched), z0, inner_iters=1),
        }
        for name, traj in variants.items():
            for za, zb in zip(base.latents, traj.latents):
                if not np.array_equal(za.data, zb.data):
                    return False, f"{name} differs from vanilla at seed {seed}"
    return True, "eta=1 / n=1 / k=1 all bit-identical to vanilla"


def _check_eval_counts(rng) -> tuple[bool, str]:
    sched = schedule_mod.default_schedule(15)
    model = default_gmm()
    z0 = gen_dataset(model, 1, 0)[0]
    runs = {
        "vanilla": (inverter.invert_vanilla(sched, GmmEpsilonPredictor(model, sched), z0), 15),
        "easyinv": (inverter.invert_easy(sched, GmmEpsilonPredictor(model, sched), z0), 15),
        "fixed_point(n=3)": (
            inverter.invert_fixed_point(sched, GmmEpsilonPredictor(model, sched), z0,
                                        inner_iters=3), 45),
        "renoise(k=2)": (
            inverter.invert_renoise(sched, GmmEpsilonPredictor(model, sched), z0,
                                    inner_iters=2), 30),
    }
    for name, (traj, expected) in runs.items():
        if traj.predictor_evals != expected:
            return False, f"{name} used {traj.predictor_evals} evals, expected {expected}"
    p = GmmEpsilonPredictor(model, sched)
    zT = runs["vanilla"][0].end
    sampler.sample(sched, p, zT)
    if p.eval_count != 15:
        return False, f"sampling used {p.eval_count} evals, expected 15"
    return True, "call budgets T / n*T / k*T hold"


def _check_blend_window(rng) -> tuple[bool, str]:
    cases = {
        (50, 0.85, 0.95): tuple(range(43, 48)),
        (50, 0.8, 0.9): tuple(range(41, 45)),    # integer boundaries excluded
        (20, 0.05, 0.25): (2, 3, 4),
        (50, 0.05, 0.25): tuple(range(3, 13)),
    }
    for (T, lo, hi), expected in cases.items():
        got = inverter.blend_steps(T, lo, hi)
        if got != expected:
            return False, f"blend_steps({T}, {lo}, {hi}) = {got}, expected {expected}"
    # behavioral probe: first divergence from vanilla is the first window step
    sched = schedule_mod.default_schedule(50)
    model = default_gmm()
    z0 = gen_dataset(model, 1, 1)[0]
    base = inverter.invert_vanilla(sched, GmmEpsilonPredictor(model, sched), z0)
    easy = inverter.invert_easy(sched, GmmEpsilonPredictor(model, sched), z0,
                                eta=0.5, window=(0.85, 0.95))
    first = next(
        (t for t in range(1, 51)
         if not np.array_equal(base.latents[t].data, easy.latents[t].data)),
        None,
    )
    if first != 43:
        return False, f"first blended step was {first}, expected 43"
    return True, "window step sets and first blended step match"


SELFCHECK_SUITES = (
    ("noising_algebra", _check_noising_algebra),
    ("closed_form_identity", _check_closed_form),
    ("difference_identity", _check_difference_identity),
    ("degeneracies", _check_degeneracies),
    ("eval_counts", _check_eval_counts),
    ("blend_window", _check_blend_window),
)


def selfcheck(seed: int = 0) -> dict:
    """Run every invariant suite; returns a machine-readable report with
    ``passed`` false if any suite failed."""
    checks = []
    for name, fn in SELFCHECK_SUITES:
        rng = np.random.default_rng(seed)
        try:
            passed, detail = fn(rng)
        except Exception as exc:
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        checks.append({"name": name, "passed": bool(passed), "detail": detail})
    return {"passed": all(c["passed"] for c in checks), "checks": checks}
