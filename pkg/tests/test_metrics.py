import numpy as np
import pytest

from invlab.metrics import (
    RUNS_CSV_HEADER,
    RunRecord,
    RunReport,
    mse,
    psnr,
    psnr_from_mse,
    ssim,
)
from invlab.predictor import Latent


# --- mse ----------------------------------------------------------------------

def test_mse_examples():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse([0.0, 0.0], [1.0, 1.0]) == 1.0
    assert mse([0.0, 3.0], [4.0, 0.0]) == 12.5


def test_mse_accepts_latents():
    assert mse(Latent([0.0, 3.0], 0), Latent([4.0, 0.0], 0)) == 12.5


def test_mse_symmetry_exact(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 12))
        a = rng.standard_normal(d)
        b = rng.standard_normal(d)
        assert mse(a, b) == mse(b, a)


def test_mse_zero_iff_equal(rng):
    a = rng.standard_normal(5)
    assert mse(a, a.copy()) == 0.0
    b = a.copy()
    b[2] += 1e-9
    assert mse(a, b) > 0.0


def test_mse_dimension_mismatch():
    with pytest.raises(ValueError):
        mse([1.0], [1.0, 2.0])


# --- psnr ----------------------------------------------------------------------

def test_psnr_zero_mse_sentinel():
    assert psnr([1.0, 2.0], [1.0, 2.0]) == 99.0


def test_psnr_exact_twenty_db():
    assert psnr_from_mse(0.01, 1.0) == 20.0
    assert psnr(Latent([0.0], 0), Latent([0.1], 0), peak=1.0) == 20.0


def test_psnr_peak255_hand_value():
    assert psnr_from_mse(100.0, 255.0) == pytest.approx(28.130803608679344, rel=1e-15)


def test_psnr_strictly_decreasing_in_mse(rng):
    values = np.sort(rng.uniform(1e-8, 10.0, 50))
    db = [psnr_from_mse(v, 1.0) for v in values]
    assert all(x > y for x, y in zip(db, db[1:]))


def test_psnr_rejects_bad_arguments():
    with pytest.raises(ValueError):
        psnr_from_mse(0.1, 0.0)
    with pytest.raises(ValueError):
        psnr_from_mse(-1.0, 1.0)


# --- ssim ----------------------------------------------------------------------

def grad8():
    return Latent(np.arange(64) / 63.0, 0, grid=(8, 8))


def test_ssim_self_is_exactly_one(rng):
    a = Latent(rng.standard_normal(64), 0, grid=(8, 8))
    assert ssim(a, a) == 1.0


def test_ssim_constant_pair_is_one():
    a = Latent(np.full(16, 0.37), 0, grid=(4, 4))
    b = Latent(np.full(16, 0.37), 0, grid=(4, 4))
    assert ssim(a, b) == 1.0


def test_ssim_gradient_vs_negation_frozen():
    # recorded once from an independent global-ssim reference implementation
    a = grad8()
    b = Latent(1.0 - a.data, 0, grid=(8, 8))
    assert ssim(a, b) == pytest.approx(-0.9897486808707617, rel=1e-12)


def test_ssim_symmetric(rng):
    a = Latent(rng.standard_normal(64), 0, grid=(8, 8))
    b = Latent(rng.standard_normal(64), 0, grid=(8, 8))
    assert ssim(a, b) == ssim(b, a)


def test_ssim_in_range(rng):
    for _ in range(50):
        a = Latent(rng.standard_normal(36), 0, grid=(6, 6))
        b = Latent(rng.standard_normal(36), 0, grid=(6, 6))
        assert -1.0 - 1e-12 <= ssim(a, b) <= 1.0 + 1e-12


def test_ssim_global_permutation_invariant(rng):
    a = rng.standard_normal(64)
    b = rng.standard_normal(64)
    perm = rng.permutation(64)
    raw = ssim(Latent(a, 0, grid=(8, 8)), Latent(b, 0, grid=(8, 8)))
    shuffled = ssim(Latent(a[perm], 0, grid=(8, 8)), Latent(b[perm], 0, grid=(8, 8)))
    assert shuffled == pytest.approx(raw, rel=1e-12)


def test_ssim_requires_grid_metadata(rng):
    a = Latent(rng.standard_normal(4), 0)
    with pytest.raises(ValueError):
        ssim(a, a)
    with pytest.raises(ValueError):
        ssim(Latent(np.zeros(4), 0, grid=(2, 2)), Latent(np.zeros(4), 0, grid=(1, 4)))
    with pytest.raises(ValueError):
        ssim(Latent(np.zeros(4), 0, grid=(2, 2)),
             Latent(np.zeros(4), 0, grid=(2, 2)), dynamic_range=0.0)


def test_ssim_gaussian11(rng):
    a = Latent(rng.standard_normal(256), 0, grid=(16, 16))
    assert ssim(a, a, window="gaussian11") == pytest.approx(1.0, abs=1e-12)
    noisy = Latent(a.data + 0.15 * rng.standard_normal(256), 0, grid=(16, 16))
    v = ssim(a, noisy, window="gaussian11")
    assert -1.0 <= v < 1.0
    with pytest.raises(ValueError):
        ssim(grad8(), grad8(), window="gaussian11")
    with pytest.raises(ValueError):
        ssim(a, a, window="box")


# --- run report ------------------------------------------------------------------

def sample_report():
    return RunReport(records=[
        RunRecord("vanilla", 0, mse=0.1, psnr_db=10.0, ssim=0.5, evals=50, wall_ms=1.0),
        RunRecord("vanilla", 1, mse=0.3, psnr_db=5.2, ssim=0.7, evals=50, wall_ms=2.0),
        RunRecord("easyinv", 0, mse=0.2, psnr_db=7.0, ssim=0.6, evals=50, wall_ms=1.5),
        RunRecord("easyinv", 1, error="ValueError: boom"),
    ])


def test_aggregate_recomputable_from_records():
    agg = sample_report().aggregate()
    assert agg["vanilla"]["mse_mean"] == pytest.approx(0.2)
    assert agg["vanilla"]["mse_std"] == pytest.approx(0.1)
    assert agg["vanilla"]["runs"] == 2
    assert agg["easyinv"]["runs"] == 1
    assert agg["easyinv"]["mse_mean"] == pytest.approx(0.2)


def test_report_csv_layout(tmp_path):
    report = sample_report()
    path = tmp_path / "runs.csv"
    report.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ",".join(RUNS_CSV_HEADER)
    assert len(lines) == 5
    assert lines[4].startswith("easyinv,1,,")  # failed row keeps empty metrics


def test_aggregate_csv(tmp_path):
    path = tmp_path / "agg.csv"
    sample_report().aggregates_to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("method,runs,mse_mean,mse_std")
    assert len(lines) == 3


def test_failures_listed():
    fails = sample_report().failures()
    assert len(fails) == 1
    assert fails[0].method == "easyinv" and fails[0].seed == 1
