"""Selects the Monte Carlo kernel backend at import time.

The compiled extension is preferred when present; the pure-Python fallback is
used otherwise, or when ``SWAPGUARD_PURE_PYTHON`` is set in the environment
(any nonempty value).  Both backends expose the same functions and produce
bit-identical results for the same seeds.
"""

from __future__ import annotations

import os

from . import _mckernel_py


def _load():
    if os.environ.get("SWAPGUARD_PURE_PYTHON"):
        return _mckernel_py
    try:
        from . import _mckernel
    except ImportError:
        return _mckernel_py
    return _mckernel


kernels = _load()

BACKEND: str = kernels.BACKEND
