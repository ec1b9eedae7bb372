import numpy as np
import pytest

from invlab import kernels

needs_compiled = pytest.mark.skipif(
    "compiled" not in kernels.BACKENDS, reason="compiled kernel not built"
)


def _random_case(rng, d, k):
    z = rng.standard_normal(d)
    means = rng.standard_normal((k, d))
    w = rng.uniform(0.1, 1.0, k)
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    variances = rng.uniform(0.0, 2.0, k)
    alpha_t = float(rng.uniform(0.01, 0.999))
    return z, w, means, variances, alpha_t


def test_reference_zero_at_full_signal(rng):
    z, w, means, variances, _ = _random_case(rng, 3, 2)
    out = kernels.reference.gmm_epsilon(z, w, means, variances, 1.0)
    assert np.array_equal(out, np.zeros(3))


@needs_compiled
def test_compiled_zero_at_full_signal(rng):
    z, w, means, variances, _ = _random_case(rng, 3, 2)
    out = kernels.get_kernel("compiled")(z, w, means, variances, 1.0)
    assert np.array_equal(out, np.zeros(3))


@needs_compiled
def test_backend_parity(rng):
    compiled = kernels.get_kernel("compiled")
    reference = kernels.get_kernel("reference")
    for _ in range(300):
        d = int(rng.integers(1, 8))
        k = int(rng.integers(1, 6))
        z, w, means, variances, alpha_t = _random_case(rng, d, k)
        a = compiled(z, w, means, variances, alpha_t)
        b = reference(z, w, means, variances, alpha_t)
        assert a == pytest.approx(b, rel=1e-12, abs=1e-14)


@needs_compiled
def test_backend_parity_far_from_modes(rng):
    # log-sum-exp stabilization must keep both paths finite and equal
    compiled = kernels.get_kernel("compiled")
    reference = kernels.get_kernel("reference")
    z = np.array([250.0, -250.0])
    means = np.array([[0.0, 0.0], [1.0, 1.0]])
    w = np.array([0.5, 0.5])
    variances = np.array([0.1, 0.4])
    a = compiled(z, w, means, variances, 0.7)
    b = reference(z, w, means, variances, 0.7)
    assert np.all(np.isfinite(a))
    assert a == pytest.approx(b, rel=1e-12)


def test_get_kernel_unknown_name():
    with pytest.raises(ValueError):
        kernels.get_kernel("fortran")


def test_active_backend_listed():
    assert kernels.active_backend() in kernels.BACKENDS
