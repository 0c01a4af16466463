"""Ladder engine: materialized tables vs deep exact machinery vs explicit matchings.

The engine is exercised three ways against independent references:

* a low-cap engine (forced onto the deep python-int path) must agree with
  a high-cap engine (materialized numpy tables) on ranks, match decisions,
  selections, and flattenings;
* both must agree with the explicit pair tables produced by the matching
  module, which is a separate implementation.
"""

import random

import numpy as np
import pytest

from finicode.codebook import construct_family
from finicode.dyadic import ProbabilityVector
from finicode.ladder import SRC, TGT, LadderEngine, node_compare
from finicode.matching import TupleAlphabet, iterate_matchings


def build_engines(n, lo_cap=6):
    fam = construct_family(n)
    hi = LadderEngine(fam.r, fam.s)
    lo = LadderEngine(fam.r, fam.s, level_cap=lo_cap)
    return fam, hi, lo


def tree_node(engine, hi, side, k, elem_id):
    """Build the engine's node for element elem_id of hi's level k, going
    through the deep (tree) representation wherever engine lacks tables."""
    if k <= engine.kmat:
        return engine.leaf(side, k, elem_id)
    lvl = hi._levels[side][k - 1]
    a = tree_node(engine, hi, side, k - 1, int(lvl.left[elem_id]))
    b = tree_node(engine, hi, side, k - 1, int(lvl.right[elem_id]))
    return engine.combine(side, a, b)


@pytest.mark.parametrize("n", [1, 2])
class TestDeepAgainstMaterialized:
    def test_class_tables_agree(self, n):
        _, hi, lo = build_engines(n)
        assert lo.kmat < hi.kmat
        for side in (SRC, TGT):
            for k in range(1, hi.kmat + 1):
                assert lo.class_counts(side, k) == hi.class_counts(side, k)
        for k in range(1, hi.kmat + 1):
            assert lo.matched_counts(k) == hi.matched_counts(k)

    def test_prefv_agrees(self, n):
        _, hi, lo = build_engines(n)
        rng = random.Random(7 + n)
        for side in (SRC, TGT):
            for k in range(lo.kmat + 1, hi.kmat + 1):
                size = hi._levels[side][k - 1].size
                for elem in rng.sample(range(size), min(25, size)):
                    deep = tree_node(lo, hi, side, k, elem)
                    flat = hi.leaf(side, k, elem)
                    assert deep.exp == flat.exp
                    for c, v in flat.prefv.items():
                        assert deep.prefv.get(c, 0) == v

    def test_pair_rank_and_match_agree(self, n):
        _, hi, lo = build_engines(n)
        rng = random.Random(13 * n)
        for k in range(lo.kmat + 1, hi.kmat + 1):
            size = hi._levels[SRC][k - 1].size
            for _ in range(40):
                i, j = rng.randrange(size), rng.randrange(size)
                u_d = tree_node(lo, hi, SRC, k, i)
                v_d = tree_node(lo, hi, SRC, k, j)
                u_m = hi.leaf(SRC, k, i)
                v_m = hi.leaf(SRC, k, j)
                assert lo.pair_rank(SRC, u_d, v_d) == hi.pair_rank(SRC, u_m, v_m)
                assert lo.is_matched(u_d, v_d) == hi.is_matched(u_m, v_m)

    def test_select_class_agrees(self, n):
        _, hi, lo = build_engines(n)
        rng = random.Random(101 + n)
        for side in (SRC, TGT):
            for k in range(lo.kmat + 1, hi.kmat + 1):
                counts = hi.class_counts(side, k)
                for c, total in counts.items():
                    for j in {0, total - 1, rng.randrange(total), rng.randrange(total)}:
                        deep = lo.select_class(side, k, c, j)
                        flat = hi.select_class(side, k, c, j)
                        assert lo.flatten(side, deep) == hi.flatten(side, flat)

    def test_select_pair_agrees(self, n):
        _, hi, lo = build_engines(n)
        rng = random.Random(55 + n)
        for side in (SRC, TGT):
            for k in range(lo.kmat + 1, hi.kmat + 1):
                pc = hi.pair_counts(side, k)
                for t, total in pc.items():
                    ranks = {0, total - 1} | {rng.randrange(total) for _ in range(4)}
                    for r in ranks:
                        ud, vd = lo.select_pair(side, k, t, r)
                        um, vm = hi.select_pair(side, k, t, r)
                        assert lo.flatten(side, ud) == hi.flatten(side, um)
                        assert lo.flatten(side, vd) == hi.flatten(side, vm)

    def test_select_inverts_rank(self, n):
        _, hi, lo = build_engines(n)
        rng = random.Random(99 - n)
        for k in range(lo.kmat + 1, hi.kmat + 1):
            size = hi._levels[SRC][k - 1].size
            for _ in range(25):
                i, j = rng.randrange(size), rng.randrange(size)
                u = tree_node(lo, hi, SRC, k, i)
                v = tree_node(lo, hi, SRC, k, j)
                t, r = lo.pair_rank(SRC, u, v)
                u2, v2 = lo.select_pair(SRC, k, t, r)
                assert lo.flatten(SRC, u2) == lo.flatten(SRC, u)
                assert lo.flatten(SRC, v2) == lo.flatten(SRC, v)


@pytest.mark.parametrize("n", [1, 2])
class TestAgainstExplicitMatchings:
    def test_levels_match_explicit_ladder(self, n):
        fam = construct_family(n)
        engine = LadderEngine(fam.r, fam.s)
        res = iterate_matchings(
            TupleAlphabet.from_vector(fam.r), TupleAlphabet.from_vector(fam.s), depth=2
        )
        m1 = res.matchings[0]
        lvl2 = engine._levels[SRC][1]
        got = [(int(lvl2.left[e]), int(lvl2.right[e])) for e in range(lvl2.size)]
        assert got == m1.source_leftover
        lvl2t = engine._levels[TGT][1]
        gott = [(int(lvl2t.left[e]), int(lvl2t.right[e])) for e in range(lvl2t.size)]
        assert gott == m1.target_leftover

    def test_matched_images_match_explicit_pairs(self, n):
        fam = construct_family(n)
        engine = LadderEngine(fam.r, fam.s)
        res = iterate_matchings(
            TupleAlphabet.from_vector(fam.r), TupleAlphabet.from_vector(fam.s), depth=2
        )
        for k, matching in enumerate(res.matchings, start=1):
            size = engine._levels[SRC][k - 1].size
            rng = random.Random(17 * n + k)
            pairs = [(i, j) for i in range(size) for j in range(size)]
            if len(pairs) > 400:
                pairs = rng.sample(pairs, 400)
            for i, j in pairs:
                u = engine.leaf(SRC, k, i)
                v = engine.leaf(SRC, k, j)
                matched, t, r = engine.is_matched(u, v)
                assert matched == ((i, j) in matching.pairs)
                if matched:
                    wu, wv = engine.select_pair(TGT, k, t, r)
                    assert (wu.payload, wv.payload) == matching.pairs[(i, j)]

    def test_deep_matched_images_match_explicit_pairs(self, n):
        # the same check, forcing the engine onto the deep path at level 2
        fam = construct_family(n)
        engine = LadderEngine(fam.r, fam.s, level_cap=6)
        assert engine.kmat == 1
        full = LadderEngine(fam.r, fam.s)
        res = iterate_matchings(
            TupleAlphabet.from_vector(fam.r), TupleAlphabet.from_vector(fam.s), depth=2
        )
        matching2 = res.matchings[1]
        lvl2 = full._levels[SRC][1]
        size = lvl2.size
        rng = random.Random(5 * n)
        for _ in range(150):
            i, j = rng.randrange(size), rng.randrange(size)
            u = tree_node(engine, full, SRC, 2, i)
            v = tree_node(engine, full, SRC, 2, j)
            matched, t, r = engine.is_matched(u, v)
            assert matched == ((i, j) in matching2.pairs)
            if matched:
                wu, wv = engine.select_pair(TGT, 2, t, r)
                ewu, ewv = matching2.pairs[(i, j)]
                lvl2t = full._levels[TGT][1]
                assert engine.flatten(TGT, wu) == [
                    int(lvl2t.left[ewu]), int(lvl2t.right[ewu])
                ]
                assert engine.flatten(TGT, wv) == [
                    int(lvl2t.left[ewv]), int(lvl2t.right[ewv])
                ]


def test_node_compare_orders_flattenings():
    fam = construct_family(1)
    engine = LadderEngine(fam.r, fam.s, level_cap=6)
    full = LadderEngine(fam.r, fam.s)
    k = 3
    size = full._levels[SRC][k - 1].size
    rng = random.Random(4)
    for _ in range(60):
        i, j = rng.randrange(size), rng.randrange(size)
        a = tree_node(engine, full, SRC, k, i)
        b = tree_node(engine, full, SRC, k, j)
        cmp = node_compare(a, b)
        assert cmp == (i > j) - (i < j)
