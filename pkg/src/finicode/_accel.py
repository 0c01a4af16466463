"""Numba dispatch for the hot kernels.

Every performance-critical loop in this package is written once, in a
numba-compatible subset of numpy Python.  By default the loops are
JIT-compiled with ``numba.njit``.  Setting the environment variable
``FINICODE_PURE_NUMPY=1`` (or any non-empty value other than ``0``)
selects the pure numpy/Python fallback path instead: the same functions
run uncompiled, and a few kernels switch to vectorized numpy
implementations.  ``benchmarks/benchmark_kernels.py`` compares the two
paths.
"""

import os

__all__ = ["NUMBA_ENABLED", "maybe_jit"]


def _numba_enabled() -> bool:
    flag = os.environ.get("FINICODE_PURE_NUMPY", "").strip()
    if flag and flag != "0":
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()

if NUMBA_ENABLED:
    from numba import njit as _njit

    def maybe_jit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return lambda f: _njit(**kwargs)(f)
        return _njit(**kwargs)(func)

else:

    def maybe_jit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func
