import math

import numpy as np
import pytest

from invlab.schedule import NoiseSchedule, build_schedule, default_schedule

from conftest import random_schedule, rel_err


def test_build_single_step_linear():
    s = build_schedule("linear", 1, 0.5, 0.5)
    assert s.alpha.tolist() == [1.0, 0.5]


def test_build_two_steps_constant_beta():
    s = build_schedule("linear", 2, 0.2, 0.2)
    assert s.alpha == pytest.approx([1.0, 0.8, 0.64], rel=1e-15)


def test_build_scaled_linear_T50_endpoint():
    # frozen from an independent product one-liner over the same beta grid
    s = build_schedule("scaled_linear", 50, 0.00085, 0.012)
    assert s.alpha[50] == pytest.approx(0.763763285673763, rel=1e-13)


def test_build_strictly_decreasing(rng):
    for _ in range(20):
        T = int(rng.integers(1, 80))
        s = build_schedule("scaled_linear", T, 0.001, 0.2)
        assert np.all(np.diff(s.alpha) < 0)
        assert s.alpha[-1] > 0


@pytest.mark.parametrize(
    "kind,T,b0,b1",
    [
        ("linear", 0, 0.1, 0.2),
        ("linear", 5, 0.0, 0.2),
        ("linear", 5, 0.1, 1.0),
        ("linear", 5, 0.3, 0.2),
        ("cosine", 5, 0.1, 0.2),
    ],
)
def test_build_rejects_bad_arguments(kind, T, b0, b1):
    with pytest.raises(ValueError):
        build_schedule(kind, T, b0, b1)


def test_schedule_type_validation():
    with pytest.raises(ValueError):
        NoiseSchedule(T=1, alpha=np.array([0.9, 0.5]))  # alpha[0] != 1
    with pytest.raises(ValueError):
        NoiseSchedule(T=2, alpha=np.array([1.0, 0.5, 0.6]))  # increasing
    with pytest.raises(ValueError):
        NoiseSchedule(T=1, alpha=np.array([1.0, 0.0]))  # endpoint not positive
    with pytest.raises(ValueError):
        NoiseSchedule(T=2, alpha=np.array([1.0, 0.5]))  # wrong length


def test_alpha_is_immutable():
    s = default_schedule(5)
    with pytest.raises(ValueError):
        s.alpha[0] = 0.5


def test_step_scale_values():
    s = NoiseSchedule(T=2, alpha=np.array([1.0, 0.8, 0.5]))
    assert s.step_scale(1) == math.sqrt(0.8)
    assert s.step_scale(2) == pytest.approx(0.7905694150420949, rel=1e-15)


def test_step_scale_flat_substep_is_one():
    s = NoiseSchedule(T=2, alpha=np.array([1.0, 0.8, 0.8]))
    assert s.step_scale(2) == 1.0


def test_step_scale_strictly_inside_unit_interval(rng):
    for _ in range(20):
        s = random_schedule(rng, int(rng.integers(1, 60)))
        for t in range(1, s.T + 1):
            assert 0.0 < s.step_scale(t) < 1.0


def test_noise_coeff_values():
    s = NoiseSchedule(T=2, alpha=np.array([1.0, 0.8, 0.5]))
    assert s.noise_coeff(1) == pytest.approx(math.sqrt(0.8) * 0.5, rel=1e-15)
    assert s.noise_coeff(2) == pytest.approx(0.39528470752104744, rel=1e-15)


def test_noise_coeff_zero_iff_flat(rng):
    flat = NoiseSchedule(T=2, alpha=np.array([1.0, 0.8, 0.8]))
    assert flat.noise_coeff(2) == 0.0
    for _ in range(10):
        s = random_schedule(rng, int(rng.integers(1, 40)))
        for t in range(1, s.T + 1):
            assert s.noise_coeff(t) > 0.0


def test_denoise_coeffs_values():
    s1 = NoiseSchedule(T=1, alpha=np.array([1.0, 0.8]))
    scale, noise_weight = s1.denoise_coeffs(1)
    assert scale == pytest.approx(1.0 / math.sqrt(0.8), rel=1e-15)
    assert noise_weight == -0.5
    s2 = NoiseSchedule(T=2, alpha=np.array([1.0, 0.8, 0.5]))
    scale, noise_weight = s2.denoise_coeffs(2)
    assert scale == pytest.approx(1.2649110640673518, rel=1e-15)
    assert noise_weight == pytest.approx(-0.5, rel=1e-15)


def test_denoise_scale_reciprocal_to_step_scale(rng):
    for _ in range(10):
        s = random_schedule(rng, int(rng.integers(1, 40)))
        for t in range(1, s.T + 1):
            scale, noise_weight = s.denoise_coeffs(t)
            assert scale * s.step_scale(t) == pytest.approx(1.0, rel=1e-15)
            assert scale >= 1.0
            assert noise_weight <= 0.0


def test_noising_then_denoising_is_identity(rng):
    # the two step maps are algebraic inverses when fed the same eps
    for _ in range(100):
        s = random_schedule(rng, int(rng.integers(1, 50)), beta_max=0.3)
        for t in range(1, s.T + 1):
            z = rng.standard_normal(5)
            eps = rng.standard_normal(5)
            noised = s.step_scale(t) * z + s.noise_coeff(t) * eps
            scale, noise_weight = s.denoise_coeffs(t)
            back = scale * noised + noise_weight * eps
            assert rel_err(back, z) <= 1e-10


@pytest.mark.parametrize("t", [0, -1, 6])
def test_step_index_out_of_range(t):
    s = default_schedule(5)
    for fn in (s.step_scale, s.noise_coeff, s.denoise_coeffs):
        with pytest.raises(ValueError):
            fn(t)
