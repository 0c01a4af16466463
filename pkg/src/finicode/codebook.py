"""Construction of the marker codebook families and the Meshalkin alphabets.

For each n >= 1 the family consists of a source vector p and a target
vector q, both with a marker symbol (id 0) of probability 1/2, chosen so
that the conditional non-marker vectors r = 2p and s = 2q have
mass-by-surprisal generating functions

    G(z) = (((1+z)/2)**2n + ((1-z)/2)**2n) * z**(2n-1)      (odd degrees)
    D(z) = (((1+z)/2)**2n - ((1-z)/2)**2n) * z**(2n-1)      (even degrees)

which satisfy G^2 - D^2 = 2**-(2n-1) * (G(z^2) - D(z^2)), so every rung of
the matching ladder reduces mass by exactly 2**-(2n-1).  At n=1 this is the
marker-augmented Meshalkin pair; entropies agree for every n and the
informational variances agree exactly when n >= 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Dict, List, Optional, Tuple

from .dyadic import (
    D_ONE,
    DyadicPolynomial,
    DyadicRational,
    ProbabilityVector,
    entropy,
    generating_function,
    informational_variance,
)
from .matching import LadderResult, TupleAlphabet, iterate_matchings, verify_ladder

MAX_FAMILY_N = 6  # alphabet and ladder growth cap; configurable per call


@dataclass
class CodebookFamily:
    """One member of the marker family: vectors plus conditional alphabets."""

    n: int
    p: ProbabilityVector          # source, marker id 0 at probability 1/2
    q: ProbabilityVector          # target, marker id 0 at probability 1/2
    r: ProbabilityVector          # conditional non-marker source (r = 2p)
    s: ProbabilityVector          # conditional non-marker target (s = 2q)

    @property
    def mass_reduction(self) -> DyadicRational:
        return DyadicRational.pow2(2 * self.n - 1)

    def source_gf(self) -> DyadicPolynomial:
        return generating_function(self.r)

    def target_gf(self) -> DyadicPolynomial:
        return generating_function(self.s)

    def ladder(self, depth: int, **kwargs) -> LadderResult:
        return iterate_matchings(
            TupleAlphabet.from_vector(self.r),
            TupleAlphabet.from_vector(self.s),
            depth,
            **kwargs,
        )

    def to_json(self) -> Dict:
        return {
            "n": self.n,
            "p": self.p.to_json(),
            "q": self.q.to_json(),
            "entropy": entropy(self.p).to_json(),
            "source_variance": informational_variance(self.p).to_json(),
            "target_variance": informational_variance(self.q).to_json(),
            "source_gf": self.source_gf().to_json(),
            "target_gf": self.target_gf().to_json(),
        }


def construct_family(n: int, max_n: int = MAX_FAMILY_N) -> CodebookFamily:
    """Build the n-th family member.

    p has, for each m in [0, n], exactly comb(2n, 2m) * 4**m symbols of
    probability 2**-(2m+2n), after the marker; q has, for each m in
    [0, n-1], comb(2n, 2m+1) * 2**(2m+1) symbols of probability
    2**-(2m+2n+1).
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n > max_n:
        raise ValueError(f"n={n} exceeds the family cap {max_n}")
    p_exps = [1]
    for m in range(n + 1):
        p_exps.extend([2 * m + 2 * n] * (comb(2 * n, 2 * m) << (2 * m)))
    q_exps = [1]
    for m in range(n):
        q_exps.extend([2 * m + 2 * n + 1] * (comb(2 * n, 2 * m + 1) << (2 * m + 1)))
    p = ProbabilityVector.from_pow2_exponents(range(len(p_exps)), p_exps)
    q = ProbabilityVector.from_pow2_exponents(range(len(q_exps)), q_exps)
    r = ProbabilityVector.from_pow2_exponents(
        range(1, len(p_exps)), [k - 1 for k in p_exps[1:]]
    )
    s = ProbabilityVector.from_pow2_exponents(
        range(1, len(q_exps)), [k - 1 for k in q_exps[1:]]
    )
    return CodebookFamily(n=n, p=p, q=q, r=r, s=s)


def binomial_form_gfs(n: int) -> Tuple[DyadicPolynomial, DyadicPolynomial]:
    """The conditional gfs expanded directly from their binomial closed form.

    Serves as an independent oracle for the counting construction above.
    """
    half = DyadicRational.pow2(1)
    plus = DyadicPolynomial({0: half, 1: half})     # (1+z)/2
    minus = DyadicPolynomial({0: half, 1: -half})   # (1-z)/2
    pw_plus = _poly_pow(plus, 2 * n)
    pw_minus = _poly_pow(minus, 2 * n)
    g = (pw_plus + pw_minus).shift_degrees(2 * n - 1)
    d = (pw_plus - pw_minus).shift_degrees(2 * n - 1)
    return g, d


def _poly_pow(p: DyadicPolynomial, k: int) -> DyadicPolynomial:
    out = DyadicPolynomial({0: D_ONE})
    for _ in range(k):
        out = out * p
    return out


@dataclass
class FamilyReport:
    """Exact invariant checks for one family member."""

    n: int
    checks: Dict[str, bool]
    entropy: DyadicRational
    source_variance: DyadicRational
    target_variance: DyadicRational
    variances_equal: bool
    coding_length_bound_applies: bool  # unequal variances: the sqrt-n lower bound is active
    reductions: List[DyadicRational]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> Dict:
        return {
            "n": self.n,
            "ok": self.ok,
            "checks": dict(self.checks),
            "entropy": self.entropy.to_json(),
            "source_variance": self.source_variance.to_json(),
            "target_variance": self.target_variance.to_json(),
            "variances_equal": self.variances_equal,
            "coding_length_bound_applies": self.coding_length_bound_applies,
            "reductions": [r.to_json() for r in self.reductions],
        }


def family_invariants_report(fam: CodebookFamily, ladder_depth: int = 3) -> FamilyReport:
    """Verify, exactly: unit masses, entropy equality, the variance
    dichotomy (equal iff n >= 2), the binomial factorization of the
    conditional gfs, and the per-rung mass reduction."""
    checks: Dict[str, bool] = {}
    h_p, h_q = entropy(fam.p), entropy(fam.q)
    v_p, v_q = informational_variance(fam.p), informational_variance(fam.q)
    checks["entropy_equal"] = h_p == h_q
    checks["marker_probability_half"] = (
        fam.p.probs[0] == DyadicRational.pow2(1) and fam.q.probs[0] == DyadicRational.pow2(1)
    )
    variances_equal = v_p == v_q
    checks["variance_dichotomy"] = variances_equal == (fam.n >= 2)
    g, d = fam.source_gf(), fam.target_gf()
    bg, bd = binomial_form_gfs(fam.n)
    checks["binomial_factorization"] = g == bg and d == bd
    checks["gf_unit_mass"] = g.eval_at_one() == D_ONE and d.eval_at_one() == D_ONE
    checks["gf_mean_degree_equal"] = g.derivative_at_one() == d.derivative_at_one()
    checks["gf_second_derivative_dichotomy"] = (
        (g.second_derivative_at_one() == d.second_derivative_at_one()) == (fam.n >= 2)
    )
    t = fam.mass_reduction
    ladder = verify_ladder(g, d, t, ladder_depth)
    checks["ladder_identities"] = ladder.ok
    checks["mass_reduction_per_rung"] = ladder.reductions == [t] * ladder_depth
    return FamilyReport(
        n=fam.n,
        checks=checks,
        entropy=h_p,
        source_variance=v_p,
        target_variance=v_q,
        variances_equal=variances_equal,
        coding_length_bound_applies=not variances_equal,
        reductions=ladder.reductions,
    )


# ----------------------------------------------------------------------
# Meshalkin's alphabets (fixed bit representations)
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MeshalkinAlphabet:
    """The classic dyadic code alphabets with their bit columns.

    Source symbols (ids 1..5) read top to bottom: "0", "100", "101",
    "110", "111"; a symbol of bit length L has probability 2**-L.
    Target symbols (ids 1..4): "00", "01", "10", "11", all 1/4.
    """

    source_bits: Dict[int, Tuple[int, ...]]
    target_bits: Dict[int, Tuple[int, ...]]

    def source_vector(self) -> ProbabilityVector:
        return ProbabilityVector.from_pow2_exponents(
            sorted(self.source_bits), [len(self.source_bits[i]) for i in sorted(self.source_bits)]
        )

    def target_vector(self) -> ProbabilityVector:
        return ProbabilityVector.from_pow2_exponents(
            sorted(self.target_bits), [len(self.target_bits[i]) for i in sorted(self.target_bits)]
        )

    def drop_bottom_bit(self, source_id: int) -> Tuple[Tuple[int, ...], int]:
        """Remove the bottom bit of a 3-bit source symbol; returns the
        remaining 2-bit column and the removed bit."""
        bits = self.source_bits[source_id]
        if len(bits) != 3:
            raise ValueError("only 3-bit symbols lose their bottom bit")
        return bits[:-1], bits[-1]

    def append_bit(self, source_id: int, bit: int) -> Tuple[int, ...]:
        """Append a bit below a 1-bit source symbol, producing a 2-bit column."""
        bits = self.source_bits[source_id]
        if len(bits) != 1:
            raise ValueError("bits are appended only below 1-bit symbols")
        return bits + (bit,)

    def target_id_of_bits(self, bits: Tuple[int, ...]) -> int:
        for tid, tb in self.target_bits.items():
            if tb == bits:
                return tid
        raise KeyError(bits)


def meshalkin_alphabets() -> MeshalkinAlphabet:
    return MeshalkinAlphabet(
        source_bits={
            1: (0,),
            2: (1, 0, 0),
            3: (1, 0, 1),
            4: (1, 1, 0),
            5: (1, 1, 1),
        },
        target_bits={
            1: (0, 0),
            2: (0, 1),
            3: (1, 0),
            4: (1, 1),
        },
    )
