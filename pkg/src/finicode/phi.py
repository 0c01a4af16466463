"""The marker-family coder: encode/decode over finite windows.

Step 0 sends markers to markers.  At step j, within each complete level-j
gap, live tuples pair left to right rank by rank; a matched pair is
replaced by the equal-rank tuple of the other alphabet and its member
positions are emitted with a radius certificate covering the gap span plus
the flanking marker allowance.  Ranks the engine has materialized run
inside the jit kernel; deeper tuples overflow to an exact python-int path
that replays the same schedule.

Decoding runs the identical schedule on the target alphabet and inverts
each matched tuple; an optional ``unknown`` mask (for round-tripping
partially censored windows) keeps unresolved tuples unresolved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ._kernels import DirectionTables, _code_window_kernel, build_direction_tables
from .codebook import CodebookFamily, construct_family
from .ladder import DEFAULT_LEVEL_CAP, SRC, TGT, LadderEngine, Node
from .windows import CodedWindow, Window, marker_runs


class LadderUnavailable(RuntimeError):
    """A required matching rung exceeded the engine's materialization cap."""


@dataclass
class _DeepTuple:
    node: Optional[Node]          # None when the tuple contains unknown positions
    positions: np.ndarray         # member positions (window-relative, structural order)

    @property
    def leftpos(self) -> int:
        return int(self.positions[0])


class MarkerCoder:
    """Encoder/decoder pair for one family, with shared matching tables."""

    def __init__(self, family, level_cap: int = DEFAULT_LEVEL_CAP):
        if isinstance(family, int):
            family = construct_family(family)
        self.family: CodebookFamily = family
        self.n = family.n
        self.engine = LadderEngine(family.r, family.s, level_cap=level_cap)
        a_syms = family.p.symbols
        b_syms = family.q.symbols
        cond_p = np.full(max(a_syms) + 1, -1, dtype=np.int32)
        for idx, sym in enumerate(family.r.symbols):
            cond_p[sym] = idx
        cond_q = np.full(max(b_syms) + 1, -1, dtype=np.int32)
        for idx, sym in enumerate(family.s.symbols):
            cond_q[sym] = idx
        sym_q = np.array(family.s.symbols, dtype=np.int32)
        sym_p = np.array(family.r.symbols, dtype=np.int32)
        self._enc = build_direction_tables(self.engine, SRC, cond_p, sym_q)
        self._dec = build_direction_tables(self.engine, TGT, cond_q, sym_p)
        self._alpha_size = (max(a_syms) + 1, max(b_syms) + 1)

    # ------------------------------------------------------------------
    def encode(self, window: Window) -> CodedWindow:
        return self._code(window, None, self._enc, SRC)

    def decode(self, window: Window, unknown=None) -> CodedWindow:
        return self._code(window, unknown, self._dec, TGT)

    # ------------------------------------------------------------------
    def _code(self, window: Window, unknown, tables: DirectionTables,
              side_a: int) -> CodedWindow:
        xw = window.symbols
        W = len(xw)
        if unknown is None:
            unknown = np.zeros(W, dtype=bool)
        else:
            unknown = np.asarray(unknown, dtype=bool)
        known = ~unknown
        amax = self._alpha_size[0] if side_a == SRC else self._alpha_size[1]
        if known.any():
            ks = xw[known]
            if ks.min() < 0 or ks.max() >= amax:
                raise ValueError("window symbol outside the coder's alphabet")

        eff = np.where(unknown, np.int32(-1), xw)  # unknowns are never markers
        runs_start, runs_len = marker_runs(eff, 0)
        nonmarker = (eff != 0)
        nm_pos = np.nonzero(nonmarker)[0].astype(np.int64)
        nm_cum = np.zeros(W + 1, dtype=np.int64)
        np.cumsum(nonmarker, out=nm_cum[1:])
        longest = int(runs_len.max()) if len(runs_len) else 0
        jmax = longest // (2 * self.n)

        out = np.full(W, -1, dtype=np.int32)
        step_arr = np.full(W, -1, dtype=np.int16)
        radius_arr = np.zeros(W, dtype=np.int32)
        rank_arr = np.full(W, -1, dtype=np.int8)
        matchid_arr = np.full(W, -1, dtype=np.int32)

        kmat = tables.kmat
        ov_cap = W // (1 << kmat) + 8
        ov_step = np.empty(ov_cap, dtype=np.int16)
        ov_uelem = np.empty(ov_cap, dtype=np.int64)
        ov_velem = np.empty(ov_cap, dtype=np.int64)
        ov_utree = np.empty(ov_cap, dtype=np.int32)
        ov_vtree = np.empty(ov_cap, dtype=np.int32)
        tree_cap = 2 * W + 8
        tree_left = np.empty(tree_cap, dtype=np.int32)
        tree_right = np.empty(tree_cap, dtype=np.int32)
        tree_pos = np.empty(tree_cap, dtype=np.int32)

        next_match, n_ov, _ = _code_window_kernel(
            xw, unknown, self.n, jmax,
            runs_start, runs_len, nm_pos, nm_cum,
            tables.a.sizes, tables.a.rowoff, tables.a.cls, tables.a.pref, tables.a.ncls,
            tables.b.sizes, tables.b.rowoff, tables.b.cls, tables.b.pref, tables.b.ncls,
            tables.b.left, tables.b.right, tables.b.ibc_off, tables.b.ibc,
            tables.pairs.npair, tables.pairs.pidx_a, tables.pairs.matched,
            tables.pairs.cnt_a, tables.pairs.cnt_b, tables.pairs.sec_a, tables.pairs.sec_b,
            tables.cond_of_symbol, tables.symbol_of_cond,
            kmat,
            out, step_arr, radius_arr, rank_arr, matchid_arr,
            ov_step, ov_uelem, ov_velem, ov_utree, ov_vtree,
            tree_left, tree_right, tree_pos,
        )

        if n_ov:
            self._finish_deep(
                side_a, tables, jmax, runs_start, runs_len, nm_pos, nm_cum, W,
                ov_step[:n_ov], ov_uelem[:n_ov], ov_velem[:n_ov],
                ov_utree[:n_ov], ov_vtree[:n_ov],
                tree_left, tree_right, tree_pos,
                out, step_arr, radius_arr, rank_arr, matchid_arr, next_match,
            )

        out_win = Window(window.lo, window.hi, out, seed=window.seed,
                         vector_id=window.vector_id)
        return CodedWindow(input=window, output=out_win, step=step_arr,
                           radius=radius_arr, rank=rank_arr, match_id=matchid_arr)

    # ------------------------------------------------------------------
    def _finish_deep(self, side_a, tables, jmax, runs_start, runs_len,
                     nm_pos, nm_cum, W,
                     ov_step, ov_uelem, ov_velem, ov_utree, ov_vtree,
                     tree_left, tree_right, tree_pos,
                     out, step_arr, radius_arr, rank_arr, matchid_arr,
                     next_match) -> None:
        engine = self.engine
        side_b = TGT if side_a == SRC else SRC
        kmat = engine.kmat

        def tree_positions(t: int) -> List[int]:
            res: List[int] = []
            stack = [t]
            while stack:
                node = stack.pop()
                if tree_left[node] < 0:
                    res.append(int(tree_pos[node]))
                else:
                    stack.append(int(tree_right[node]))
                    stack.append(int(tree_left[node]))
            return res

        by_step: Dict[int, List[_DeepTuple]] = {}
        for i in range(len(ov_step)):
            pos = np.array(tree_positions(int(ov_utree[i])) +
                           tree_positions(int(ov_vtree[i])), dtype=np.int64)
            if ov_uelem[i] < 0 or ov_velem[i] < 0:
                node = None
            else:
                u = engine.leaf(side_a, kmat, int(ov_uelem[i]))
                v = engine.leaf(side_a, kmat, int(ov_velem[i]))
                node = engine.combine(side_a, u, v)
            by_step.setdefault(int(ov_step[i]), []).append(_DeepTuple(node, pos))

        pools: Dict[int, List[_DeepTuple]] = {}
        first_step = min(by_step)
        for j in range(first_step, jmax + 1):
            incoming = by_step.get(j, [])
            if not incoming and not any(pools.values()):
                break
            thr = 2 * self.n * j
            gaps = _gap_bounds(runs_start, runs_len, nm_pos, nm_cum, W, thr)
            if gaps is None:
                pools.clear()
                break
            gfirst, glast, gcomplete = gaps
            # assign tuples to gaps
            per_gap: Dict[int, Dict[int, List[_DeepTuple]]] = {}
            for rank, entries in pools.items():
                for e in entries:
                    gi = int(np.searchsorted(gfirst, e.leftpos, side="right")) - 1
                    per_gap.setdefault(gi, {}).setdefault(rank, []).append(e)
            for e in incoming:
                gi = int(np.searchsorted(gfirst, e.leftpos, side="right")) - 1
                per_gap.setdefault(gi, {}).setdefault(kmat + 1, []).append(e)
            pools = {}
            for gi in sorted(per_gap):
                if not gcomplete[gi]:
                    continue  # censored: members stay undetermined
                ranks = per_gap[gi]
                k = min(ranks)
                carry: List[_DeepTuple] = []
                while True:
                    entries = sorted(ranks.pop(k, []) + carry, key=lambda e: e.leftpos)
                    carry = []
                    i = 0
                    while i + 1 < len(entries):
                        u, v = entries[i], entries[i + 1]
                        i += 2
                        merged_pos = np.concatenate((u.positions, v.positions))
                        if u.node is None or v.node is None:
                            carry.append(_DeepTuple(None, merged_pos))
                            continue
                        matched, t, rank_val = (
                            engine.is_matched(u.node, v.node)
                            if side_a == SRC
                            else self._matched_on(side_a, u.node, v.node)
                        )
                        if matched:
                            wu, wv = engine.select_pair(side_b, u.node.level, t, rank_val)
                            conds = engine.flatten(side_b, wu) + engine.flatten(side_b, wv)
                            for pq, cond in zip(merged_pos, conds):
                                out[pq] = tables.symbol_of_cond[cond]
                                step_arr[pq] = j
                                radius_arr[pq] = max(
                                    int(pq) - int(gfirst[gi]), int(glast[gi]) - int(pq)
                                ) + thr
                                rank_arr[pq] = min(u.node.level, 127)
                                matchid_arr[pq] = next_match
                            next_match += 1
                        else:
                            carry.append(
                                _DeepTuple(engine.combine(side_a, u.node, v.node), merged_pos)
                            )
                    if i < len(entries):
                        pools.setdefault(k, []).append(entries[i])
                    if not carry and not ranks:
                        break
                    k = min([k + 1] + [r for r in ranks if r > k]) if ranks else k + 1
        # anything left in pools stays censored

    def _matched_on(self, side: int, u: Node, v: Node):
        t, rank = self.engine.pair_rank(side, u, v)
        return rank < self.engine.matched_counts(u.level).get(t, 0), t, rank


def _gap_bounds(runs_start, runs_len, nm_pos, nm_cum, W, thr):
    """Complete/incomplete gap member bounds for one threshold, or None if
    no qualifying run exists."""
    qual = runs_len >= thr
    if not qual.any():
        return None
    qs = runs_start[qual]
    ql = runs_len[qual]
    lo = np.concatenate(([0], qs + ql))
    hi = np.concatenate((qs - 1, [W - 1]))
    complete = np.ones(len(lo), dtype=bool)
    complete[0] = False
    complete[-1] = False
    first = []
    last = []
    comp = []
    for b_lo, b_hi, c in zip(lo, hi, complete):
        if b_hi < b_lo:
            continue
        members = nm_cum[b_hi + 1] - nm_cum[b_lo]
        if members == 0:
            continue
        first.append(int(nm_pos[nm_cum[b_lo]]))
        last.append(int(nm_pos[nm_cum[b_hi + 1] - 1]))
        comp.append(bool(c))
    return np.array(first), np.array(last), np.array(comp)


_coder_cache: Dict[int, MarkerCoder] = {}


def get_coder(n: int) -> MarkerCoder:
    if n not in _coder_cache:
        _coder_cache[n] = MarkerCoder(n)
    return _coder_cache[n]


def phi_encode(family, window: Window) -> CodedWindow:
    """Encode a source window under the family's marker code."""
    coder = family if isinstance(family, MarkerCoder) else get_coder(
        family if isinstance(family, int) else family.n
    )
    return coder.encode(window)


def phi_decode(family, window: Window, unknown=None) -> CodedWindow:
    """Decode a target window (optionally with an unknown-position mask)."""
    coder = family if isinstance(family, MarkerCoder) else get_coder(
        family if isinstance(family, int) else family.n
    )
    return coder.decode(window, unknown=unknown)
