"""Scalable matching-ladder engine behind the marker coder.

The coder consults rung k of the ladder to decide whether two adjacent
2**(k-1)-tuples form a matched pair and, if so, which target tuple they map
to.  Explicit alphabets square in size at every rung, so the engine keeps
two representations:

* levels up to a size cap are *materialized* as numpy tables (element
  order, class ids, per-class prefix counts, child links), which also feed
  the jit-compiled coding kernels;
* deeper levels exist only as exact per-class count tables (python ints),
  and individual elements are handled as trees whose leaves are
  materialized-level ids.

Everything reduces to three exact primitives on an ordered alphabet whose
elements at level k+1 are the unmatched pairs of level k:

* ``prefv``  -- for an element, the number of strictly smaller elements in
  each probability class (computed once per tree node, from its children);
* ``pair_rank`` -- the lexicographic position of a pair within its
  probability class of the product space;
* ``select_pair`` -- the inverse: recover the pair at a given class rank.

Ranks grow beyond machine words after a few rungs (an element's rank
encodes its whole leaf word), hence the python-int arithmetic on the deep
path.  All base probabilities must be powers of 1/2, so probability
classes are keyed by integer surprisal exponents throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .dyadic import ProbabilityVector

DEFAULT_LEVEL_CAP = 300_000

SRC = 0
TGT = 1


class Node:
    """One alphabet element at some rung, with its cached class-prefix counts.

    ``payload`` is a local element id at materialized levels and a
    ``(Node, Node)`` pair above them.  ``prefv`` maps each class exponent of
    the element's level to the number of strictly smaller same-level
    elements in that class.
    """

    __slots__ = ("level", "exp", "payload", "prefv")

    def __init__(self, level: int, exp: int, payload, prefv: Dict[int, int]):
        self.level = level
        self.exp = exp
        self.payload = payload
        self.prefv = prefv

    def __repr__(self):
        return f"Node(level={self.level}, exp={self.exp})"


def node_compare(a: Node, b: Node) -> int:
    """Lexicographic order of same-level elements: -1, 0, or 1."""
    if a.level != b.level:
        raise ValueError("comparing nodes of different levels")
    if isinstance(a.payload, int):
        return (a.payload > b.payload) - (a.payload < b.payload)
    c = node_compare(a.payload[0], b.payload[0])
    if c:
        return c
    return node_compare(a.payload[1], b.payload[1])


@dataclass
class _Level:
    """One materialized rung of one side."""

    size: int
    cls: np.ndarray               # (size,) int16 class index
    pref: np.ndarray              # (size+1, ncls) int64 prefix counts
    left: np.ndarray              # (size,) int32 child id at level-1 (level 1: base index)
    right: np.ndarray             # (size,) int32, -1 at level 1
    class_exps: List[int]         # surprisal exponent per class index
    ids_by_class: List[np.ndarray]

    @property
    def ncls(self) -> int:
        return len(self.class_exps)

    def counts(self) -> Dict[int, int]:
        return {e: len(ids) for e, ids in zip(self.class_exps, self.ids_by_class)}


class LadderEngine:
    """Exact rung-by-rung matching structure for one (r, s) family.

    ``r`` and ``s`` are the conditional non-marker vectors; every
    probability must be a power of 1/2.
    """

    def __init__(self, r: ProbabilityVector, s: ProbabilityVector,
                 level_cap: int = DEFAULT_LEVEL_CAP, max_level: int = 64):
        self.level_cap = level_cap
        self.max_level = max_level
        self._levels: Tuple[List[_Level], List[_Level]] = ([], [])
        self._counts: Tuple[Dict[int, Dict[int, int]], Dict[int, Dict[int, int]]] = ({}, {})
        self._pair_counts: Tuple[Dict[int, Dict[int, int]], Dict[int, Dict[int, int]]] = ({}, {})
        self._matched: Dict[int, Dict[int, int]] = {}
        self._straddle: Dict[Tuple[int, int, int], Tuple[Node, Node]] = {}
        self._build_level1(SRC, r)
        self._build_level1(TGT, s)
        self._materialize()

    # ------------------------------------------------------------------
    # construction of materialized levels
    # ------------------------------------------------------------------
    def _build_level1(self, side: int, pv: ProbabilityVector) -> None:
        exps = pv.surprisal_exponents()
        size = len(exps)
        class_exps = sorted(set(exps))
        cls_of = {e: i for i, e in enumerate(class_exps)}
        cls = np.array([cls_of[e] for e in exps], dtype=np.int16)
        self._levels[side].append(
            self._finish_level(size, cls, np.arange(size, dtype=np.int32),
                               np.full(size, -1, dtype=np.int32), class_exps)
        )

    @staticmethod
    def _finish_level(size, cls, left, right, class_exps) -> _Level:
        ncls = len(class_exps)
        onehot = np.zeros((size + 1, ncls), dtype=np.int64)
        if size:
            onehot[np.arange(1, size + 1), cls] = 1
        pref = np.cumsum(onehot, axis=0)
        ids_by_class = [np.where(cls == c)[0].astype(np.int64) for c in range(ncls)]
        return _Level(size=size, cls=cls, pref=pref, left=left, right=right,
                      class_exps=list(class_exps), ids_by_class=ids_by_class)

    @property
    def kmat(self) -> int:
        return len(self._levels[SRC])

    def _materialize(self) -> None:
        while True:
            k = self.kmat
            matched = self.matched_counts(k)
            sizes = []
            for side in (SRC, TGT):
                pc = self.pair_counts(side, k)
                sizes.append(sum(pc.values()) - sum(min(matched.get(t, 0), c) for t, c in pc.items()))
            if max(sizes) > self.level_cap or max(sizes) == 0 or k >= self.max_level:
                return
            for side in (SRC, TGT):
                self._levels[side].append(self._build_next_level(side, k, matched))

    def _build_next_level(self, side: int, k: int, matched: Dict[int, int]) -> _Level:
        lvl = self._levels[side][k - 1]
        counts = lvl.counts()
        # running per-pair-class count of pairs whose first component was
        # already passed; the surviving partners of u in one v-class form a
        # tail slice of that class's id list
        pair_exps = sorted({cu + cv for cu in lvl.class_exps for cv in lvl.class_exps})
        b_run = {t: 0 for t in pair_exps}
        out_left: List[np.ndarray] = []
        out_right: List[np.ndarray] = []
        out_exps: List[np.ndarray] = []
        for u in range(lvl.size):
            eu = int(lvl.class_exps[lvl.cls[u]])
            vids = []
            vexps = []
            for ci, cv in enumerate(lvl.class_exps):
                t = eu + cv
                m = matched.get(t, 0)
                start = m - b_run[t]
                total = len(lvl.ids_by_class[ci])
                if start < 0:
                    start = 0
                elif start > total:
                    start = total
                if start < total:
                    vids.append(lvl.ids_by_class[ci][start:])
                    vexps.append(np.full(total - start, cv, dtype=np.int64))
            for t in pair_exps:
                cv = t - eu
                if cv in counts:
                    b_run[t] += counts[cv]
            if not vids:
                continue
            v = np.concatenate(vids)
            e = np.concatenate(vexps)
            order = np.argsort(v, kind="stable")
            out_left.append(np.full(len(v), u, dtype=np.int32))
            out_right.append(v[order].astype(np.int32))
            out_exps.append(e[order] + eu)
        if out_left:
            left = np.concatenate(out_left)
            right = np.concatenate(out_right)
            exps = np.concatenate(out_exps)
        else:
            left = np.empty(0, dtype=np.int32)
            right = np.empty(0, dtype=np.int32)
            exps = np.empty(0, dtype=np.int64)
        class_exps = sorted(set(int(x) for x in np.unique(exps)))
        cls_of = {e: i for i, e in enumerate(class_exps)}
        cls = np.array([cls_of[int(x)] for x in exps], dtype=np.int16)
        return self._finish_level(len(left), cls, left, right, class_exps)

    # ------------------------------------------------------------------
    # exact class-count tables (any level)
    # ------------------------------------------------------------------
    def class_counts(self, side: int, k: int) -> Dict[int, int]:
        if k <= self.kmat:
            return self._levels[side][k - 1].counts()
        memo = self._counts[side]
        if k not in memo:
            matched = self.matched_counts(k - 1)
            pc = self.pair_counts(side, k - 1)
            memo[k] = {
                t: c - min(matched.get(t, 0), c)
                for t, c in pc.items()
                if c - min(matched.get(t, 0), c) > 0
            }
        return memo[k]

    def pair_counts(self, side: int, k: int) -> Dict[int, int]:
        memo = self._pair_counts[side]
        if k not in memo:
            counts = self.class_counts(side, k)
            out: Dict[int, int] = {}
            for e1, c1 in counts.items():
                for e2, c2 in counts.items():
                    out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
            memo[k] = out
        return memo[k]

    def matched_counts(self, k: int) -> Dict[int, int]:
        if k not in self._matched:
            sp = self.pair_counts(SRC, k)
            tp = self.pair_counts(TGT, k)
            self._matched[k] = {
                t: min(sp.get(t, 0), tp.get(t, 0)) for t in set(sp) | set(tp)
            }
        return self._matched[k]

    # ------------------------------------------------------------------
    # nodes
    # ------------------------------------------------------------------
    def leaf(self, side: int, k: int, local_id: int) -> Node:
        lvl = self._levels[side][k - 1]
        ci = int(lvl.cls[local_id])
        prefv = {
            e: int(lvl.pref[local_id, c]) for c, e in enumerate(lvl.class_exps)
        }
        return Node(k, int(lvl.class_exps[ci]), int(local_id), prefv)

    def combine(self, side: int, a: Node, b: Node) -> Node:
        """The level-(k+1) element formed by the unmatched pair (a, b)."""
        k = a.level
        t = a.exp + b.exp
        counts = self.class_counts(side, k)
        matched = self.matched_counts(k)
        prefv: Dict[int, int] = {}
        for tx in self.class_counts(side, k + 1):
            bsum = 0
            for c, cnt in counts.items():
                pa = a.prefv.get(c)
                if pa:
                    bsum += pa * counts.get(tx - c, 0)
            val = bsum + b.prefv.get(tx - a.exp, 0) - matched.get(tx, 0)
            prefv[tx] = val if val > 0 else 0
        return Node(k + 1, t, (a, b), prefv)

    def pair_rank(self, side: int, u: Node, v: Node) -> Tuple[int, int]:
        """Class exponent and in-class lexicographic rank of the pair (u, v)."""
        k = u.level
        counts = self.class_counts(side, k)
        t = u.exp + v.exp
        rank = v.prefv.get(t - u.exp, 0)
        for c, pu in u.prefv.items():
            if pu:
                rank += pu * counts.get(t - c, 0)
        return t, rank

    def is_matched(self, u: Node, v: Node) -> Tuple[bool, int, int]:
        """Match decision for a source-side pair; returns (matched, t, rank)."""
        t, rank = self.pair_rank(SRC, u, v)
        return rank < self.matched_counts(u.level).get(t, 0), t, rank

    # ------------------------------------------------------------------
    # selection (inverse ranking)
    # ------------------------------------------------------------------
    def select_class(self, side: int, k: int, c: int, j: int) -> Node:
        """The j-th smallest level-k element of class exponent c (0-based)."""
        if k <= self.kmat:
            lvl = self._levels[side][k - 1]
            ci = lvl.class_exps.index(c)
            return self.leaf(side, k, int(lvl.ids_by_class[ci][j]))
        m = self.matched_counts(k - 1).get(c, 0)
        a, b = self.select_pair(side, k - 1, c, m + j)
        return self.combine(side, a, b)

    def select_pair(self, side: int, k: int, t: int, rank: int) -> Tuple[Node, Node]:
        """The pair of class exponent t at the given in-class rank."""
        counts = self.class_counts(side, k)
        weights = {c: counts.get(t - c, 0) for c in counts}
        u, before = self._select_weighted(side, k, weights, rank)
        v = self.select_class(side, k, t - u.exp, rank - before)
        return u, v

    def _select_weighted(self, side: int, k: int, weights: Dict[int, int],
                         target: int) -> Tuple[Node, int]:
        """Element u with sum(w(class(u')) for u' < u) <= target < ... + w(class(u)).

        Weights are per class exponent of level k; the weighted prefix is
        monotone in the element order.
        """
        if k <= self.kmat:
            lvl = self._levels[side][k - 1]
            wvec = [weights.get(e, 0) for e in lvl.class_exps]

            def cum(idx: int) -> int:
                row = lvl.pref[idx]
                return sum(int(row[c]) * wvec[c] for c in range(lvl.ncls))

            lo, hi = 0, lvl.size - 1
            # smallest id with cum(id+1) > target
            while lo < hi:
                mid = (lo + hi) // 2
                if cum(mid + 1) > target:
                    hi = mid
                else:
                    lo = mid + 1
            return self.leaf(side, k, lo), cum(lo)

        # deep level: elements are unmatched pairs (a, b) of level k-1
        km = k - 1
        counts = self.class_counts(side, km)
        matched = self.matched_counts(km)
        classes_k = self.class_counts(side, k)

        def b_of(node: Node, t: int) -> int:
            total = 0
            for c, p in node.prefv.items():
                if p:
                    total += p * counts.get(t - c, 0)
            return total

        # ----- phase A: first component ---------------------------------
        def f_at(a: Node, after: bool) -> int:
            total = 0
            for t, w in weights.items():
                if t not in classes_k or w == 0:
                    continue
                b = b_of(a, t)
                if after:
                    b += counts.get(t - a.exp, 0)
                b -= matched.get(t, 0)
                if b > 0:
                    total += w * b
            return total

        clamped = [t for t in classes_k
                   if weights.get(t, 0) and matched.get(t, 0) > 0]
        boundaries = []
        for t in clamped:
            s = self._straddle_pair(side, km, t)[0]
            boundaries.append((s, t))
        boundaries.sort(key=_NodeKey)
        first_a: Optional[Node] = None
        active: List[int] = []
        w_before = 0
        for s, t in boundaries:
            fs = f_at(s, after=False)
            if target < fs:
                break
            fn = f_at(s, after=True)
            if target < fn:
                first_a, w_before = s, fs
                break
            active.append(t)
        if first_a is None:
            wprime: Dict[int, int] = {}
            const = 0
            for t, w in weights.items():
                if t not in classes_k or w == 0:
                    continue
                if matched.get(t, 0) > 0 and t not in active:
                    continue
                const += w * matched.get(t, 0)
                for c in counts:
                    wprime[c] = wprime.get(c, 0) + w * counts.get(t - c, 0)
            first_a, _ = self._select_weighted(side, km, wprime, target + const)
            w_before = f_at(first_a, after=False)

        a = first_a
        remainder = target - w_before

        # ----- phase B: second component --------------------------------
        b_vals = {t: b_of(a, t) for t in classes_k}

        def g_at(b: Node, bump_cls: Optional[int]) -> int:
            total = 0
            for t, w in weights.items():
                if t not in classes_k or w == 0:
                    continue
                c2 = t - a.exp
                if c2 not in counts:
                    continue
                base = b_vals[t] - matched.get(t, 0)
                lo_part = base if base > 0 else 0
                p = b.prefv.get(c2, 0)
                if bump_cls is not None and c2 == bump_cls:
                    p += 1
                hi_part = base + p
                if hi_part > 0:
                    total += w * (hi_part - lo_part)
            return total

        bounds_b = []
        for t in classes_k:
            w = weights.get(t, 0)
            if not w:
                continue
            c2 = t - a.exp
            if c2 not in counts:
                continue
            theta = matched.get(t, 0) - b_vals[t]
            if theta <= 0:
                continue  # clamp never engages: pure linear term
            if theta >= counts[c2]:
                continue  # clamp never releases: term is identically zero
            bounds_b.append((self.select_class(side, km, c2, theta), t))
        bounds_b.sort(key=_NodeKey)
        found_b: Optional[Node] = None
        active_b: List[int] = []
        for s, t in bounds_b:
            gs = g_at(s, None)
            if remainder < gs:
                break
            gn = g_at(s, int(s.exp))
            if remainder < gn and s.exp == t - a.exp:
                found_b = s
                break
            active_b.append(t)
        if found_b is None:
            wsec: Dict[int, int] = {}
            const = 0
            for t, w in weights.items():
                if t not in classes_k or w == 0:
                    continue
                c2 = t - a.exp
                if c2 not in counts:
                    continue
                theta = matched.get(t, 0) - b_vals[t]
                if theta >= counts[c2]:
                    continue
                if theta > 0 and t not in active_b:
                    continue
                const += w * max(theta, 0)
                wsec[c2] = wsec.get(c2, 0) + w
            found_b, _ = self._select_weighted(side, km, wsec, remainder + const)

        b = found_b
        node = self.combine(side, a, b)
        before = 0
        for t, w in weights.items():
            if w:
                p = node.prefv.get(t)
                if p:
                    before += w * p
        return node, before

    def _straddle_pair(self, side: int, k: int, t: int) -> Tuple[Node, Node]:
        """The first unmatched class-t pair of level k (memoized)."""
        key = (side, k, t)
        if key not in self._straddle:
            self._straddle[key] = self.select_pair(side, k, t, self.matched_counts(k)[t])
        return self._straddle[key]

    # ------------------------------------------------------------------
    # flattening
    # ------------------------------------------------------------------
    def flatten(self, side: int, node: Node) -> List[int]:
        """Base-alphabet conditional indices of the element, left to right."""
        out: List[int] = []
        self._flatten_into(side, node, out)
        return out

    def _flatten_into(self, side: int, node: Node, out: List[int]) -> None:
        if isinstance(node.payload, tuple):
            self._flatten_into(side, node.payload[0], out)
            self._flatten_into(side, node.payload[1], out)
            return
        lvl_idx = node.level
        stack = [(lvl_idx, node.payload)]
        while stack:
            k, e = stack.pop()
            if k == 1:
                out.append(int(self._levels[side][0].left[e]))
                continue
            lvl = self._levels[side][k - 1]
            stack.append((k - 1, int(lvl.right[e])))
            stack.append((k - 1, int(lvl.left[e])))


class _NodeKey:
    """Sort key adapter for (Node, tag) tuples ordered by node."""

    __slots__ = ("node",)

    def __init__(self, item):
        self.node = item[0]

    def __lt__(self, other):
        return node_compare(self.node, other.node) < 0
