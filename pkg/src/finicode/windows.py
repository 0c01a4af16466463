"""Finite windows of bi-infinite sequences and per-position coding metadata."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np


@dataclass
class Window:
    """A sampled segment of a bi-infinite symbol sequence.

    Positions run from ``lo`` to ``hi`` inclusive; ``symbols[i]`` is the
    symbol at absolute position ``lo + i``.
    """

    lo: int
    hi: int
    symbols: np.ndarray
    seed: Optional[int] = None
    vector_id: Optional[str] = None

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int32)
        if self.hi - self.lo + 1 != len(self.symbols):
            raise ValueError("window bounds do not match symbol count")

    def __len__(self) -> int:
        return len(self.symbols)

    def index_of(self, pos: int) -> int:
        if not self.lo <= pos <= self.hi:
            raise IndexError(f"position {pos} outside window [{self.lo}, {self.hi}]")
        return pos - self.lo

    def at(self, pos: int) -> int:
        return int(self.symbols[self.index_of(pos)])


@dataclass
class CodedWindow:
    """A coded window with a per-position determination certificate.

    For every position: ``step[i] >= 0`` means the output symbol is
    determined, was settled at that step (0 for markers), and re-encoding
    any window agreeing on ``[pos - radius[i], pos + radius[i]]`` yields the
    same output there.  ``step[i] == -1`` means censored: the window did not
    suffice.  ``rank[i]`` is the tuple size exponent consumed by the match
    and ``match_id[i]`` groups the positions of one match event.
    """

    input: Window
    output: Window
    step: np.ndarray      # int16, -1 censored
    radius: np.ndarray    # int32
    rank: np.ndarray      # int8, -1 where censored
    match_id: np.ndarray  # int32, -1 where censored

    @property
    def determined(self) -> np.ndarray:
        return self.step >= 0

    def determined_count(self) -> int:
        return int(np.count_nonzero(self.determined))

    def members_of_match(self, mid: int) -> np.ndarray:
        return np.nonzero(self.match_id == mid)[0] + self.input.lo

    def radius_at(self, pos: int):
        """Radius certificate at an absolute position, or None if censored."""
        i = self.input.index_of(pos)
        if self.step[i] < 0:
            return None
        return int(self.radius[i])

    def to_json(self) -> Dict:
        det = self.determined
        return {
            "lo": int(self.input.lo),
            "hi": int(self.input.hi),
            "input": self.input.symbols.tolist(),
            "output": [int(s) if d else None for s, d in zip(self.output.symbols, det)],
            "status": [
                {"step": int(st), "radius": int(r), "rank": int(rk)} if d else "censored"
                for st, r, rk, d in zip(self.step, self.radius, self.rank, det)
            ],
        }

    def to_csv_rows(self) -> List[List]:
        rows = []
        for i in range(len(self.input)):
            d = self.step[i] >= 0
            rows.append([
                self.input.lo + i,
                int(self.input.symbols[i]),
                int(self.output.symbols[i]) if d else "",
                "determined" if d else "censored",
                int(self.step[i]) if d else "",
                int(self.radius[i]) if d else "",
            ])
        return rows


@dataclass
class GapLevel:
    """All gaps of one level: maximal non-marker stretches between marker
    runs of length >= the level threshold."""

    level: int
    threshold: int                 # minimal flanking marker run length
    first_member: np.ndarray       # absolute position of first non-marker member
    last_member: np.ndarray
    member_count: np.ndarray
    complete: np.ndarray           # bool: both flanking runs lie inside the window

    def __len__(self) -> int:
        return len(self.first_member)


@dataclass
class GapStructure:
    levels: List[GapLevel] = field(default_factory=list)

    def level(self, j: int) -> GapLevel:
        return self.levels[j - 1]

    @property
    def max_level(self) -> int:
        return len(self.levels)


def marker_runs(symbols: np.ndarray, marker: int = 0):
    """Start indices and lengths of maximal marker runs (window-relative)."""
    is_marker = symbols == marker
    if not is_marker.any():
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    padded = np.concatenate(([False], is_marker, [False]))
    d = np.diff(padded.astype(np.int8))
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0]
    return starts.astype(np.int64), (ends - starts).astype(np.int64)


def segment_gaps(window: Window, n: int, jmax: Optional[int] = None,
                 marker: int = 0) -> GapStructure:
    """Gap structure of a window for levels 1..jmax.

    A level-j gap is the set of non-marker positions between neighboring
    marker runs of length >= 2*n*j; gaps touching the window boundary are
    flagged incomplete.  ``jmax`` defaults to the deepest level for which
    the window contains a qualifying run.
    """
    if n < 1:
        raise ValueError("n must be positive")
    syms = window.symbols
    starts, lengths = marker_runs(syms, marker)
    longest = int(lengths.max()) if len(lengths) else 0
    # levels past the longest run still report one incomplete whole-window gap
    depth = jmax if jmax is not None else longest // (2 * n)
    nonmarker = np.nonzero(syms != marker)[0].astype(np.int64)
    nm_cum = np.zeros(len(syms) + 1, dtype=np.int64)
    np.cumsum(syms != marker, out=nm_cum[1:])
    structure = GapStructure()
    for j in range(1, depth + 1):
        thr = 2 * n * j
        structure.levels.append(
            _gap_level(j, thr, starts, lengths, nonmarker, nm_cum, len(syms), window.lo)
        )
    return structure


def _gap_level(j, thr, starts, lengths, nonmarker, nm_cum, size, lo) -> GapLevel:
    qual = lengths >= thr
    qs = starts[qual]
    ql = lengths[qual]
    # intervals between consecutive qualifying runs, plus the two edges
    bounds_lo = np.concatenate(([0], qs + ql))
    bounds_hi = np.concatenate((qs, [size]))
    complete = np.ones(len(bounds_lo), dtype=bool)
    complete[0] = False
    complete[-1] = False
    first = []
    last = []
    count = []
    comp = []
    for blo, bhi, c in zip(bounds_lo, bounds_hi, complete):
        if bhi <= blo:
            continue
        members = nm_cum[bhi] - nm_cum[blo]
        if members == 0:
            continue
        i0 = np.searchsorted(nonmarker, blo, side="left")
        first.append(int(nonmarker[i0]) + lo)
        last.append(int(nonmarker[i0 + members - 1]) + lo)
        count.append(int(members))
        comp.append(bool(c))
    return GapLevel(
        level=j,
        threshold=thr,
        first_member=np.array(first, dtype=np.int64),
        last_member=np.array(last, dtype=np.int64),
        member_count=np.array(count, dtype=np.int64),
        complete=np.array(comp, dtype=bool),
    )
