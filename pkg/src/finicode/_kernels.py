"""Packed tables and the hot scheduling kernel for the marker coder.

The kernel runs the whole gap/pairing schedule over a window for tuple
ranks the engine has materialized, using nothing but int64 array lookups:
class ids, per-class prefix counts, pair-class tables with matched counts,
id-by-class lists for selection, and child links for flattening.  Tuples
that survive past the deepest materialized rank are emitted to an overflow
buffer together with their position trees; the driver finishes them on the
exact python-int path.

Tables are direction-specific: side A is the window's alphabet (ranked),
side B is the emitted alphabet (selected).  Encoding and decoding use the
same kernel with the two table packs swapped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ._accel import maybe_jit
from .ladder import SRC, TGT, LadderEngine


@dataclass
class SidePack:
    """Flattened per-level tables of one side (levels 1..kmat)."""

    sizes: np.ndarray      # int64[kmat+1], sizes[k]
    rowoff: np.ndarray     # int64[kmat+2]: row offset of level k (rows = size+1)
    cls: np.ndarray        # int16[rows]
    pref: np.ndarray       # int64[rows, CMAX]
    left: np.ndarray       # int32[rows]
    right: np.ndarray      # int32[rows]
    ncls: np.ndarray       # int16[kmat+1]
    ibc_off: np.ndarray    # int64[kmat+1, CMAX+1]
    ibc: np.ndarray        # int32[total elements]


@dataclass
class PairPack:
    """Per-level pair-class tables for one direction (A ranked, B selected)."""

    npair: np.ndarray      # int16[kmat+1]
    pidx_a: np.ndarray     # int16[kmat+1, CMAX, CMAX]
    matched: np.ndarray    # int64[kmat+1, PMAX]
    cnt_a: np.ndarray      # int64[kmat+1, PMAX, CMAX]  count of A-elems of class t-c
    cnt_b: np.ndarray      # int64[kmat+1, PMAX, CMAX]
    sec_a: np.ndarray      # int16[kmat+1, PMAX, CMAX]  A-class index of t-c, or -1
    sec_b: np.ndarray      # int16[kmat+1, PMAX, CMAX]


@dataclass
class DirectionTables:
    """Everything the kernel needs for one coding direction."""

    kmat: int
    a: SidePack
    b: SidePack
    pairs: PairPack
    cond_of_symbol: np.ndarray   # int32[a_alphabet]: window symbol -> level-1 id
    symbol_of_cond: np.ndarray   # int32[|B1|]: level-1 B id -> emitted symbol


def _build_side_pack(engine: LadderEngine, side: int, cmax: int) -> SidePack:
    kmat = engine.kmat
    levels = engine._levels[side]
    sizes = np.zeros(kmat + 1, dtype=np.int64)
    rowoff = np.zeros(kmat + 2, dtype=np.int64)
    total_rows = 0
    total_elems = 0
    for k in range(1, kmat + 1):
        sizes[k] = levels[k - 1].size
        rowoff[k] = total_rows
        total_rows += levels[k - 1].size + 1
        total_elems += levels[k - 1].size
    rowoff[kmat + 1] = total_rows
    cls = np.zeros(total_rows, dtype=np.int16)
    pref = np.zeros((total_rows, cmax), dtype=np.int64)
    left = np.full(total_rows, -1, dtype=np.int32)
    right = np.full(total_rows, -1, dtype=np.int32)
    ncls = np.zeros(kmat + 1, dtype=np.int16)
    ibc_off = np.zeros((kmat + 1, cmax + 1), dtype=np.int64)
    ibc = np.zeros(total_elems, dtype=np.int32)
    pos = 0
    for k in range(1, kmat + 1):
        lvl = levels[k - 1]
        r0 = rowoff[k]
        ncls[k] = lvl.ncls
        cls[r0: r0 + lvl.size] = lvl.cls
        pref[r0: r0 + lvl.size + 1, : lvl.ncls] = lvl.pref
        left[r0: r0 + lvl.size] = lvl.left
        right[r0: r0 + lvl.size] = lvl.right
        for c in range(lvl.ncls):
            ibc_off[k, c] = pos
            ids = lvl.ids_by_class[c]
            ibc[pos: pos + len(ids)] = ids
            pos += len(ids)
        ibc_off[k, lvl.ncls:] = pos
    return SidePack(sizes=sizes, rowoff=rowoff, cls=cls, pref=pref, left=left,
                    right=right, ncls=ncls, ibc_off=ibc_off, ibc=ibc)


def build_direction_tables(engine: LadderEngine, side_a: int,
                           cond_of_symbol: np.ndarray,
                           symbol_of_cond: np.ndarray) -> DirectionTables:
    side_b = TGT if side_a == SRC else SRC
    kmat = engine.kmat
    cmax = 1
    for side in (SRC, TGT):
        for lvl in engine._levels[side]:
            cmax = max(cmax, lvl.ncls)
    pair_lists = []
    pmax = 1
    for k in range(1, kmat + 1):
        exps = sorted(engine.matched_counts(k))
        pair_lists.append(exps)
        pmax = max(pmax, len(exps))

    npair = np.zeros(kmat + 1, dtype=np.int16)
    pidx_a = np.full((kmat + 1, cmax, cmax), -1, dtype=np.int16)
    matched = np.zeros((kmat + 1, pmax), dtype=np.int64)
    cnt_a = np.zeros((kmat + 1, pmax, cmax), dtype=np.int64)
    cnt_b = np.zeros((kmat + 1, pmax, cmax), dtype=np.int64)
    sec_a = np.full((kmat + 1, pmax, cmax), -1, dtype=np.int16)
    sec_b = np.full((kmat + 1, pmax, cmax), -1, dtype=np.int16)
    for k in range(1, kmat + 1):
        exps = pair_lists[k - 1]
        npair[k] = len(exps)
        mt = engine.matched_counts(k)
        la = engine._levels[side_a][k - 1]
        lb = engine._levels[side_b][k - 1]
        counts_a = {e: len(ids) for e, ids in zip(la.class_exps, la.ids_by_class)}
        counts_b = {e: len(ids) for e, ids in zip(lb.class_exps, lb.ids_by_class)}
        for p, t in enumerate(exps):
            matched[k, p] = mt[t]
            for ci, ce in enumerate(la.class_exps):
                rest = t - ce
                cnt_a[k, p, ci] = counts_a.get(rest, 0)
                if rest in la.class_exps:
                    sec_a[k, p, ci] = la.class_exps.index(rest)
            for ci, ce in enumerate(lb.class_exps):
                rest = t - ce
                cnt_b[k, p, ci] = counts_b.get(rest, 0)
                if rest in lb.class_exps:
                    sec_b[k, p, ci] = lb.class_exps.index(rest)
        pe_index = {t: p for p, t in enumerate(exps)}
        for ci, ce in enumerate(la.class_exps):
            for cj, cf in enumerate(la.class_exps):
                pidx_a[k, ci, cj] = pe_index[ce + cf]
    pairs = PairPack(npair=npair, pidx_a=pidx_a, matched=matched, cnt_a=cnt_a,
                     cnt_b=cnt_b, sec_a=sec_a, sec_b=sec_b)
    return DirectionTables(
        kmat=kmat,
        a=_build_side_pack(engine, side_a, cmax),
        b=_build_side_pack(engine, side_b, cmax),
        pairs=pairs,
        cond_of_symbol=cond_of_symbol,
        symbol_of_cond=symbol_of_cond,
    )


# ----------------------------------------------------------------------
# the scheduling kernel
# ----------------------------------------------------------------------

@maybe_jit
def _code_window_kernel(
    xw, unknown, nparam, jmax,
    runs_start, runs_len, nm_pos, nm_cum,
    # side A
    a_sizes, a_rowoff, a_cls, a_pref, a_ncls,
    # side B
    b_sizes, b_rowoff, b_cls, b_pref, b_ncls, b_left, b_right, b_ibc_off, b_ibc,
    # pair tables
    npair, pidx_a, matched, cnt_a, cnt_b, sec_a, sec_b,
    cond_of_symbol, symbol_of_cond,
    kmat,
    # outputs
    out, step_arr, radius_arr, rank_arr, matchid_arr,
    ov_step, ov_uelem, ov_velem, ov_utree, ov_vtree,
    tree_left, tree_right, tree_pos,
):
    W = xw.size
    cmax = a_pref.shape[1]
    next_match = 0
    n_ov = 0
    n_tree = 0

    # step 0: markers map to markers, radius 0
    for i in range(W):
        if not unknown[i] and xw[i] == 0:
            out[i] = 0
            step_arr[i] = 0
            radius_arr[i] = 0
            rank_arr[i] = 0

    # pools: per rank 1..kmat, double-buffered flat segments
    cap = np.zeros(kmat + 2, dtype=np.int64)
    poff = np.zeros(kmat + 2, dtype=np.int64)
    total_cap = 0
    for k in range(1, kmat + 1):
        cap[k] = W // (1 << (k - 1)) + 2
        poff[k] = total_cap
        total_cap += cap[k]
    pool_elem = np.empty(total_cap, dtype=np.int64)
    pool_tree = np.empty(total_cap, dtype=np.int32)
    pool_left = np.empty(total_cap, dtype=np.int32)
    new_elem = np.empty(total_cap, dtype=np.int64)
    new_tree = np.empty(total_cap, dtype=np.int32)
    new_left = np.empty(total_cap, dtype=np.int32)
    carry_elem = np.empty(total_cap, dtype=np.int64)
    carry_tree = np.empty(total_cap, dtype=np.int32)
    carry_left = np.empty(total_cap, dtype=np.int32)
    pool_n = np.zeros(kmat + 2, dtype=np.int64)
    new_n = np.zeros(kmat + 2, dtype=np.int64)
    carry_n = np.zeros(kmat + 2, dtype=np.int64)

    # singles: every non-marker position seeds rank 1
    cnt1 = 0
    for i in range(W):
        if unknown[i] or xw[i] != 0:
            tree_left[n_tree] = -1
            tree_right[n_tree] = -1
            tree_pos[n_tree] = i
            if unknown[i]:
                pool_elem[poff[1] + cnt1] = -1
            else:
                pool_elem[poff[1] + cnt1] = cond_of_symbol[xw[i]]
            pool_tree[poff[1] + cnt1] = n_tree
            pool_left[poff[1] + cnt1] = i
            n_tree += 1
            cnt1 += 1
    pool_n[1] = cnt1

    nqual = runs_start.size
    posbuf = np.empty(1 << (kmat + 1), dtype=np.int64)
    symbuf = np.empty(1 << (kmat + 1), dtype=np.int64)
    stack = np.empty(64, dtype=np.int64)
    stack_lvl = np.empty(64, dtype=np.int64)

    for j in range(1, jmax + 1):
        thr = 2 * nparam * j
        # read pointers into the old pools
        ptr = np.zeros(kmat + 2, dtype=np.int64)
        for k in range(1, kmat + 1):
            new_n[k] = 0
        # iterate intervals between qualifying runs (plus window edges)
        prev_end = np.int64(0)
        have_prev = False  # whether the left boundary is a real run
        ri = 0
        while True:
            # find the next qualifying run at or after ri
            nxt = -1
            for r in range(ri, nqual):
                if runs_len[r] >= thr:
                    nxt = r
                    break
            if nxt >= 0:
                glo = prev_end
                ghi = runs_start[nxt] - 1
                complete = have_prev
            else:
                glo = prev_end
                ghi = np.int64(W - 1)
                complete = False
            members = nm_cum[ghi + 1] - nm_cum[glo] if ghi >= glo else np.int64(0)
            if members > 0:
                gfirst = nm_pos[nm_cum[glo]]
                glast = nm_pos[nm_cum[ghi + 1] - 1]
                for k in range(1, kmat + 1):
                    carry_n[k] = 0
                for k in range(1, kmat + 1):
                    # stream-merge the old-pool slice with this gap's carries
                    i0 = ptr[k]
                    base = poff[k]
                    n_old = pool_n[k]
                    while i0 < n_old and pool_left[base + i0] < glo:
                        i0 += 1  # defensive; earlier gaps consumed these
                    i1 = i0
                    while i1 < n_old and pool_left[base + i1] <= ghi:
                        i1 += 1
                    ptr[k] = i1
                    ci = np.int64(0)
                    cn = carry_n[k]
                    if not complete:
                        continue  # entries in incomplete gaps stay undetermined
                    pend_elem = np.int64(-2)
                    pend_tree = np.int64(-1)
                    pend_left = np.int64(-1)
                    oi = i0
                    while oi < i1 or ci < cn:
                        if oi < i1 and (ci >= cn or pool_left[base + oi] <= carry_left[base + ci]):
                            e = pool_elem[base + oi]
                            tr = pool_tree[base + oi]
                            lp = pool_left[base + oi]
                            oi += 1
                        else:
                            e = carry_elem[base + ci]
                            tr = carry_tree[base + ci]
                            lp = carry_left[base + ci]
                            ci += 1
                        if pend_elem == -2:
                            pend_elem = e
                            pend_tree = tr
                            pend_left = lp
                            continue
                        # we have a pair (pend, current)
                        ue = pend_elem
                        ut = pend_tree
                        ul = pend_left
                        pend_elem = np.int64(-2)
                        if ue < 0 or e < 0:
                            # unknown-containing tuples never match
                            tree_left[n_tree] = ut
                            tree_right[n_tree] = tr
                            tree_pos[n_tree] = -1
                            if k < kmat:
                                nb = poff[k + 1] + carry_n[k + 1]
                                carry_elem[nb] = -1
                                carry_tree[nb] = n_tree
                                carry_left[nb] = ul
                                carry_n[k + 1] += 1
                            else:
                                ov_step[n_ov] = j
                                ov_uelem[n_ov] = ue
                                ov_velem[n_ov] = e
                                ov_utree[n_ov] = ut
                                ov_vtree[n_ov] = tr
                                n_ov += 1
                            n_tree += 1
                            continue
                        arow = a_rowoff[k] + ue
                        brow = a_rowoff[k] + e
                        ca = a_cls[arow]
                        cb = a_cls[brow]
                        p = pidx_a[k, ca, cb]
                        rank = np.int64(0)
                        for c in range(a_ncls[k]):
                            pu = a_pref[arow, c]
                            if pu > 0:
                                rank += pu * cnt_a[k, p, c]
                        s2 = sec_a[k, p, ca]
                        if s2 >= 0:
                            rank += a_pref[brow, s2]
                        if rank < matched[k, p]:
                            # matched: select the pair at the same rank on side B
                            lo = np.int64(0)
                            hi = b_sizes[k] - 1
                            while lo < hi:
                                mid = (lo + hi) // 2
                                bsum = np.int64(0)
                                mrow = b_rowoff[k] + mid + 1
                                for c in range(b_ncls[k]):
                                    pv = b_pref[mrow, c]
                                    if pv > 0:
                                        bsum += pv * cnt_b[k, p, c]
                                if bsum > rank:
                                    hi = mid
                                else:
                                    lo = mid + 1
                            wu = lo
                            wrow = b_rowoff[k] + wu
                            bw = np.int64(0)
                            for c in range(b_ncls[k]):
                                pv = b_pref[wrow, c]
                                if pv > 0:
                                    bw += pv * cnt_b[k, p, c]
                            c2 = sec_b[k, p, b_cls[wrow]]
                            wv = b_ibc[b_ibc_off[k, c2] + (rank - bw)]
                            # flatten positions (A tree) and symbols (B elements)
                            np_cnt = 0
                            for half in range(2):
                                top = 0
                                stack[top] = ut if half == 0 else tr
                                top += 1
                                while top > 0:
                                    top -= 1
                                    node = stack[top]
                                    if tree_left[node] < 0:
                                        posbuf[np_cnt] = tree_pos[node]
                                        np_cnt += 1
                                    else:
                                        stack[top] = tree_right[node]
                                        top += 1
                                        stack[top] = tree_left[node]
                                        top += 1
                            ns_cnt = 0
                            for half in range(2):
                                top = 0
                                stack[top] = wu if half == 0 else wv
                                stack_lvl[top] = k
                                top += 1
                                while top > 0:
                                    top -= 1
                                    node = stack[top]
                                    lv = stack_lvl[top]
                                    row = b_rowoff[lv] + node
                                    if lv == 1:
                                        symbuf[ns_cnt] = b_left[row]
                                        ns_cnt += 1
                                    else:
                                        stack[top] = b_right[row]
                                        stack_lvl[top] = lv - 1
                                        top += 1
                                        stack[top] = b_left[row]
                                        stack_lvl[top] = lv - 1
                                        top += 1
                            for q in range(np_cnt):
                                pq = posbuf[q]
                                out[pq] = symbol_of_cond[symbuf[q]]
                                step_arr[pq] = j
                                d1 = pq - gfirst
                                d2 = glast - pq
                                radius_arr[pq] = (d1 if d1 > d2 else d2) + thr
                                rank_arr[pq] = k
                                matchid_arr[pq] = next_match
                            next_match += 1
                        else:
                            # unmatched: push the combined tuple one rank up
                            tree_left[n_tree] = ut
                            tree_right[n_tree] = tr
                            tree_pos[n_tree] = -1
                            if k < kmat:
                                nid = np.int64(0)
                                for p2 in range(npair[k]):
                                    bu = np.int64(0)
                                    for c in range(a_ncls[k]):
                                        pu = a_pref[arow, c]
                                        if pu > 0:
                                            bu += pu * cnt_a[k, p2, c]
                                    s22 = sec_a[k, p2, ca]
                                    if s22 >= 0:
                                        bu += a_pref[brow, s22]
                                    bu -= matched[k, p2]
                                    if bu > 0:
                                        nid += bu
                                nb = poff[k + 1] + carry_n[k + 1]
                                carry_elem[nb] = nid
                                carry_tree[nb] = n_tree
                                carry_left[nb] = ul
                                carry_n[k + 1] += 1
                            else:
                                ov_step[n_ov] = j
                                ov_uelem[n_ov] = ue
                                ov_velem[n_ov] = e
                                ov_utree[n_ov] = ut
                                ov_vtree[n_ov] = tr
                                n_ov += 1
                            n_tree += 1
                    if pend_elem != -2:
                        # odd tuple out waits for the next step
                        nb = poff[k] + new_n[k]
                        new_elem[nb] = pend_elem
                        new_tree[nb] = pend_tree
                        new_left[nb] = pend_left
                        new_n[k] += 1
            if nxt < 0:
                break
            prev_end = runs_start[nxt] + runs_len[nxt]
            have_prev = True
            ri = nxt + 1
        # swap pools
        total_live = np.int64(0)
        for k in range(1, kmat + 1):
            pool_n[k] = new_n[k]
            base = poff[k]
            for i in range(new_n[k]):
                pool_elem[base + i] = new_elem[base + i]
                pool_tree[base + i] = new_tree[base + i]
                pool_left[base + i] = new_left[base + i]
            total_live += new_n[k]
        if total_live == 0:
            break
    return next_match, n_ov, n_tree
