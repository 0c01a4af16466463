"""Meshalkin's dyadic code between a (1/2, 1/8 x4) shift and a uniform 4-shift.

Source symbols carry 1 or 3 bits, target symbols 2 bits.  Treating 1-bit
symbols as down-steps and 3-bit symbols as up-steps of a +-1 walk, each
1-bit position i is paired with the first position m >= i where the walk
returns to its starting height; the bottom bit of the symbol at m moves
beneath the symbol at i, leaving two 2-bit symbols.  Pairing is exactly
first-return (equivalently, bracket) matching, so the numba kernel is a
stack scan and the numpy fallback groups positions by walk height.

Positions whose partner falls outside the window are censored.  On the
decode side, censored positions may be marked unknown; unknown positions
are exactly the unmatched ones, and removing unmatched positions from a
bracket sequence preserves every match, so the decoder simply skips them.
"""

from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, maybe_jit
from .windows import CodedWindow, Window


class InvalidSymbol(ValueError):
    """A window symbol outside the coder's alphabet (markers included)."""


@maybe_jit
def _match_kernel(opener, skip, partner):
    """Stack-based first-return matching.

    opener[i] True for down-steps; skip[i] marks positions excluded from
    the walk entirely.  partner[i] = j for matched pairs both ways, else -1.
    """
    n = opener.size
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        if skip[i]:
            continue
        if opener[i]:
            stack[top] = i
            top += 1
        else:
            if top > 0:
                top -= 1
                j = stack[top]
                partner[j] = i
                partner[i] = j


def _match_numpy(opener, skip, partner):
    """Vectorized matching: group positions by walk height.

    Within one height the positions alternate strictly (unmatched closers,
    then opener/closer pairs, then at most one unmatched opener), so after
    a lexsort by (height, position) each group pairs adjacently from its
    first opener.
    """
    live = ~skip
    idx = np.nonzero(live)[0]
    if idx.size == 0:
        return
    op = opener[idx]
    inc = np.where(op, -1, 1)
    depth = np.cumsum(inc)
    height = depth + op  # openers keyed by pre-step height, closers by post-step
    order = np.lexsort((idx, height))
    h_sorted = height[order]
    group_start = np.nonzero(np.concatenate(([True], h_sorted[1:] != h_sorted[:-1])))[0]
    group_end = np.concatenate((group_start[1:], [len(order)]))
    op_sorted = op[order]
    pos_sorted = idx[order]
    for s, e in zip(group_start, group_end):
        ops = op_sorted[s:e]
        first = np.argmax(ops) if ops.any() else e - s
        k = s + first
        # strict alternation: opener at even offsets from first, closer after
        m = (e - k) // 2
        if m > 0:
            o_pos = pos_sorted[k: k + 2 * m: 2]
            c_pos = pos_sorted[k + 1: k + 2 * m + 1: 2]
            partner[o_pos] = c_pos
            partner[c_pos] = o_pos


def first_return_partners(opener: np.ndarray, skip: np.ndarray) -> np.ndarray:
    partner = np.full(opener.size, -1, dtype=np.int64)
    if NUMBA_ENABLED:
        _match_kernel(opener, skip, partner)
    else:
        _match_numpy(opener, skip, partner)
    return partner


@maybe_jit
def _inductive_kernel(opener, partner, limit):
    """Independent reference matcher: repeatedly match a down-step at i with
    an up-step at i+step, both still unconsumed, for step = 1, 2, ...

    Quadratic-flavored but prunes consumed positions, so the cost is
    sum over steps of the surviving opener count.
    """
    n = opener.size
    live_open = np.nonzero(opener)[0]
    closer_live = ~opener
    for step in range(1, limit + 1):
        if live_open.size == 0:
            break
        keep = np.empty(live_open.size, dtype=np.int64)
        kn = 0
        for t in range(live_open.size):
            i = live_open[t]
            m = i + step
            if m < n and closer_live[m]:
                partner[i] = m
                partner[m] = i
                closer_live[m] = False
            else:
                keep[kn] = i
                kn += 1
        live_open = keep[:kn]
    return partner


def inductive_reference_partners(opener: np.ndarray) -> np.ndarray:
    """Oracle partner map built by the stepwise construction."""
    partner = np.full(opener.size, -1, dtype=np.int64)
    _inductive_kernel(opener, partner, opener.size)
    return partner


def _assemble(win_in: Window, out_syms, partner, det, step_no) -> CodedWindow:
    n = len(win_in)
    step = np.where(det, np.int16(step_no), np.int16(-1)).astype(np.int16)
    radius = np.zeros(n, dtype=np.int32)
    matched = partner >= 0
    radius[matched] = np.abs(partner[matched] - np.arange(n)[matched]).astype(np.int32)
    rank = np.where(det, np.int8(1), np.int8(-1)).astype(np.int8)
    match_id = np.full(n, -1, dtype=np.int32)
    if matched.any():
        openers = np.nonzero(matched & (partner > np.arange(n)))[0]
        ids = np.arange(len(openers), dtype=np.int32)
        match_id[openers] = ids
        match_id[partner[openers]] = ids
    out_win = Window(win_in.lo, win_in.hi, out_syms, seed=win_in.seed,
                     vector_id=win_in.vector_id)
    return CodedWindow(input=win_in, output=out_win, step=step, radius=radius,
                       rank=rank, match_id=match_id)


def meshalkin_encode(window: Window, use_reference_matcher: bool = False) -> CodedWindow:
    """Encode a window over the 5-symbol source alphabet (ids 1..5).

    Raises InvalidSymbol on any id outside 1..5 (the marker id 0 does not
    belong to this alphabet).
    """
    syms = window.symbols
    if syms.size and (syms.min() < 1 or syms.max() > 5):
        raise InvalidSymbol("source symbols must be ids 1..5")
    opener = syms == 1
    if use_reference_matcher:
        partner = inductive_reference_partners(opener)
    else:
        partner = first_return_partners(opener, np.zeros(len(syms), dtype=bool))
    det = partner >= 0
    out = np.full(len(syms), -1, dtype=np.int32)
    bits3 = syms + 2  # 3-bit value of ids 2..5: 4..7
    openers = np.nonzero(det & opener)[0]
    closers = partner[openers]
    out[openers] = (bits3[closers] & 1) + 1          # "0" + moved bit
    out[closers] = (bits3[closers] >> 1) + 1          # remaining top bits
    return _assemble(window, out, partner, det, step_no=1)


def meshalkin_decode(window: Window, unknown=None) -> CodedWindow:
    """Decode a window over the 4-symbol target alphabet (ids 1..4).

    ``unknown`` optionally marks positions whose symbol is unavailable
    (censored upstream); they are skipped by the matcher and left censored.
    """
    syms = window.symbols
    if unknown is None:
        unknown = np.zeros(len(syms), dtype=bool)
    else:
        unknown = np.asarray(unknown, dtype=bool)
    known = ~unknown
    if known.any():
        k = syms[known]
        if k.min() < 1 or k.max() > 4:
            raise InvalidSymbol("target symbols must be ids 1..4")
    vals = syms - 1
    opener = (vals < 2) & known   # top bit 0: came from a 1-bit symbol
    partner = first_return_partners(opener, unknown)
    det = partner >= 0
    out = np.full(len(syms), -1, dtype=np.int32)
    openers = np.nonzero(det & opener)[0]
    closers = partner[openers]
    out[openers] = 1
    out[closers] = ((vals[closers] << 1) | (vals[openers] & 1)) - 2
    return _assemble(window, out, partner, det, step_no=1)
