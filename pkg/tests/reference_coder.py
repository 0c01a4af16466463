"""Slow, independent reference implementation of the marker code.

Built directly on the explicit pair tables of the matching module (a
separate code path from the ladder engine): elements are indices into
explicit leftover lists, matching is dict lookup, and the schedule is
plain python lists.  Raises if a window needs a deeper rung than the
explicit tables cover, so tests fail loudly rather than compare nothing.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np

from finicode.matching import TupleAlphabet, iterate_matchings
from finicode.windows import marker_runs


class ReferenceDepthExceeded(RuntimeError):
    pass


class ReferencePhiCoder:
    def __init__(self, family, depth: int):
        self.family = family
        self.n = family.n
        res = iterate_matchings(
            TupleAlphabet.from_vector(family.r),
            TupleAlphabet.from_vector(family.s),
            depth=depth,
            explicit_cap=600_000_000,
        )
        assert not res.exhausted and all(m.explicit for m in res.matchings)
        self.matchings = res.matchings
        self.depth = depth
        # position of each leftover pair within the next level's alphabet
        self.src_index: List[Dict[Tuple[int, int], int]] = [
            {pair: i for i, pair in enumerate(m.source_leftover)} for m in self.matchings
        ]

    def _flatten_tgt(self, k: int, elem: int) -> List[int]:
        """Target element of level k -> conditional indices."""
        if k == 1:
            return [elem]
        a, b = self.matchings[k - 2].target_leftover[elem]
        return self._flatten_tgt(k - 1, a) + self._flatten_tgt(k - 1, b)

    def encode(self, symbols: np.ndarray):
        n = self.n
        W = len(symbols)
        out = np.full(W, -1, dtype=np.int64)
        step_arr = np.full(W, -1, dtype=np.int64)
        runs_start, runs_len = marker_runs(symbols, 0)
        out[symbols == 0] = 0
        step_arr[symbols == 0] = 0
        longest = int(runs_len.max()) if len(runs_len) else 0
        jmax = longest // (2 * n)
        # pools: list of (level, elem, positions) per rank
        pools: Dict[int, List[Tuple[int, List[int]]]] = {1: []}
        for i in range(W):
            if symbols[i] != 0:
                pools[1].append((int(symbols[i]) - 1, [i]))
        for j in range(1, jmax + 1):
            thr = 2 * n * j
            qual = [(int(s), int(l)) for s, l in zip(runs_start, runs_len) if l >= thr]
            intervals = []
            prev = 0
            have_prev = False
            for s, l in qual:
                intervals.append((prev, s - 1, have_prev))
                prev = s + l
                have_prev = True
            intervals.append((prev, W - 1, False))
            new_pools: Dict[int, List[Tuple[int, List[int]]]] = {}
            for glo, ghi, complete in intervals:
                members = [p for p in range(glo, ghi + 1) if symbols[p] != 0]
                if not members:
                    continue
                gfirst, glast = members[0], members[-1]
                in_gap = {}
                for k, entries in pools.items():
                    sel = [e for e in entries if glo <= e[1][0] <= ghi]
                    if sel:
                        in_gap[k] = sel
                if not complete:
                    continue  # censored
                k = 1
                carry: List[Tuple[int, List[int]]] = []
                max_rank = max(in_gap) if in_gap else 1
                while k <= max_rank or carry:
                    entries = sorted(in_gap.pop(k, []) + carry, key=lambda e: e[1][0])
                    carry = []
                    i = 0
                    while i + 1 < len(entries):
                        (ue, upos), (ve, vpos) = entries[i], entries[i + 1]
                        i += 2
                        if k > self.depth:
                            # beyond the explicit tables: mark indeterminate
                            # (such tuples never influence lower-rank output)
                            for pq in upos + vpos:
                                out[pq] = -2
                                step_arr[pq] = -2
                            continue
                        m = self.matchings[k - 1]
                        if (ue, ve) in m.pairs:
                            wu, wv = m.pairs[(ue, ve)]
                            conds = self._flatten_tgt(k, wu) + self._flatten_tgt(k, wv)
                            for pq, cond in zip(upos + vpos, conds):
                                out[pq] = self.family.s.symbols[cond]
                                step_arr[pq] = j
                        else:
                            carry.append((self.src_index[k - 1][(ue, ve)], upos + vpos))
                    if i < len(entries):
                        new_pools.setdefault(k, []).append(entries[i])
                    k += 1
                    max_rank = max([max_rank] + list(in_gap)) if in_gap else max_rank
            pools = new_pools
            if not pools:
                break
        return out, step_arr
