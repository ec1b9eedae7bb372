"""Mixture-score kernels: compiled core with a pure NumPy fallback.

The compiled extension is picked at import time when available; set
``INVLAB_KERNEL=reference`` (or ``compiled``) to force a backend. Both
backends implement the same contract and agree to float64 rounding.
"""

import os

from . import reference

try:
    from . import _gmm as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"reference": reference.gmm_epsilon}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.gmm_epsilon

_forced = os.environ.get("INVLAB_KERNEL")
if _forced is not None and _forced not in BACKENDS:
    raise ImportError(
        f"INVLAB_KERNEL={_forced!r} is not available; choose from {sorted(BACKENDS)}"
    )

ACTIVE_BACKEND = _forced or ("compiled" if _compiled is not None else "reference")


def get_kernel(backend=None):
    """Return the gmm_epsilon callable for ``backend`` (default: active one)."""
    name = backend or ACTIVE_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}; available: {sorted(BACKENDS)}")


def active_backend() -> str:
    return ACTIVE_BACKEND
