import numpy as np
import pytest

from invlab.schedule import NoiseSchedule


def rel_err(a, b):
    scale = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / scale


def random_schedule(rng, T, beta_max=0.05):
    betas = rng.uniform(1e-4, beta_max, size=T)
    alpha = np.empty(T + 1)
    alpha[0] = 1.0
    alpha[1:] = np.cumprod(1.0 - betas)
    return NoiseSchedule(T=T, alpha=alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
