"""Kernel backend selection.

The hot inner loops (Bellman sweeps, slot simulation) exist twice: as
numba-jitted loops in ``_kernels_jit`` and as pure-numpy code in
``_kernels_py``.  The ``AOIPREEMPT_BACKEND`` environment variable picks
one at import time:

    AOIPREEMPT_BACKEND=numba   force the jitted kernels (ImportError if
                               numba is unavailable)
    AOIPREEMPT_BACKEND=numpy   force the pure-numpy fallback
    AOIPREEMPT_BACKEND=auto    numba when importable, numpy otherwise
                               (the default)

Both backends produce bit-identical results; ``tests/test_backends.py``
enforces that and ``benchmarks/bench_backends.py`` compares their speed.
"""

from __future__ import annotations

import logging
import os

log = logging.getLogger(__name__)

ENV_VAR = "AOIPREEMPT_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def get_kernels(name: str | None = None):
    """Return the kernel module for `name` (default: the env-var choice)."""
    if name is None:
        name = os.environ.get(ENV_VAR, "auto").strip().lower() or "auto"
    if name not in _CHOICES:
        raise ValueError(f"{ENV_VAR} must be one of {_CHOICES}, got {name!r}")
    if name == "numpy":
        from . import _kernels_py
        return _kernels_py
    if name == "numba":
        from . import _kernels_jit
        return _kernels_jit
    try:
        from . import _kernels_jit
        return _kernels_jit
    except ImportError:
        log.info("numba unavailable; falling back to pure-numpy kernels")
        from . import _kernels_py
        return _kernels_py


kernels = get_kernels()


def active_backend() -> str:
    return kernels.BACKEND_NAME
