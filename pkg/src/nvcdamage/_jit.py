"""JIT selection for the numeric kernels.

Kernels are written in the numba-compatible subset of Python/numpy. When
``NVCDAMAGE_DISABLE_JIT`` is set to a truthy value (or numba is missing) the
decorator is a no-op and the same source runs as plain numpy code.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("NVCDAMAGE_DISABLE_JIT", "").strip().lower()
JIT_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    JIT_DISABLED = True

USING_NUMBA = not JIT_DISABLED


def kernel(func):
    """Compile ``func`` with ``numba.njit(cache=True)`` unless disabled."""
    if JIT_DISABLED:
        return func
    return _numba.njit(cache=True, fastmath=False)(func)
