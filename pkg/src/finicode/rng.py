"""Counter-based deterministic sampling of i.i.d. windows.

The generator is stateless: the symbol at lattice position ``pos`` under a
given seed is a pure function of ``(seed, pos)``, so overlapping windows
agree on their overlap and parallel workers agree by construction.  Each
position is hashed with a splitmix64-style finalizer and mapped to a symbol
through exact 64-bit cumulative thresholds (probabilities are dyadic, so
the thresholds are exact as long as no probability is finer than 2**-64).
"""

from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, maybe_jit
from .dyadic import ProbabilityVector

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer (python int in, python int out)."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (x ^ (x >> 31)) & 0xFFFFFFFFFFFFFFFF


def derive_seed(master_seed: int, stream: int) -> int:
    """Per-trial / per-stream seed derived from a master seed."""
    return mix64(mix64(master_seed & 0xFFFFFFFFFFFFFFFF) ^ ((stream * 0xD1B54A32D192ED03) & 0xFFFFFFFFFFFFFFFF))


def _hash_positions_py(seed, positions):
    """Vectorized splitmix64 over an int64 position array (numpy path)."""
    with np.errstate(over="ignore"):
        x = positions.astype(np.uint64) * _GOLDEN + np.uint64(seed)
        x = (x + _GOLDEN) & _MASK
        x = ((x ^ (x >> np.uint64(30))) * _MIX1) & _MASK
        x = ((x ^ (x >> np.uint64(27))) * _MIX2) & _MASK
        return x ^ (x >> np.uint64(31))


@maybe_jit
def _sample_kernel(seed, lo, count, thresholds, out):
    for i in range(count):
        pos = lo + i
        x = np.uint64(pos) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(seed)
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
        j = np.searchsorted(thresholds, x, side="right")
        out[i] = j


def symbol_thresholds(pv: ProbabilityVector) -> np.ndarray:
    """Exact uint64 cumulative thresholds: symbol j is drawn when
    thresholds[j-1] <= hash < thresholds[j] (with thresholds[-1] == 2**64,
    stored implicitly)."""
    cum = 0
    out = []
    for p in pv.probs:
        if p.exp > 64:
            raise ValueError("probabilities finer than 2**-64 are not samplable")
        cum += p.num << (64 - p.exp)
        out.append(cum)
    assert cum == 1 << 64
    # drop the final 2**64 entry; searchsorted(side='right') then yields len-1 max
    return np.array(out[:-1], dtype=np.uint64)


def sample_symbols(pv: ProbabilityVector, lo: int, hi: int, seed: int) -> np.ndarray:
    """Symbols of pv at absolute positions lo..hi inclusive (int32 array)."""
    count = hi - lo + 1
    if count <= 0:
        raise ValueError("empty position range")
    thresholds = symbol_thresholds(pv)
    idx = np.empty(count, dtype=np.int64)
    if NUMBA_ENABLED:
        _sample_kernel(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), lo, count, thresholds, idx)
    else:
        h = _hash_positions_py(seed & 0xFFFFFFFFFFFFFFFF, np.arange(lo, hi + 1, dtype=np.int64))
        idx = np.searchsorted(thresholds, h, side="right")
    symbols = np.asarray(pv.symbols, dtype=np.int32)
    return symbols[idx]
