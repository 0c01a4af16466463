"""Maximal ordered measure-preserving matchings on product alphabets.

A matching pairs equal-probability elements of two ordered product
alphabets C x C and D x D, order-preserving within each probability class
and maximal (per class, everything up to the shorter count is matched).
The leftovers on each side, renormalized, seed the next rung of the
ladder; iterating produces the sequence of matchings the coders consult.

Element counts square at every rung, so explicit pair tables are built
only while the product space stays below a cap; past the cap the ladder
continues on exact per-class count tables, which is all the polynomial
identities and mass-reduction checks need.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .dyadic import (
    D_ONE,
    D_ZERO,
    DyadicPolynomial,
    DyadicRational,
    ProbabilityVector,
)

DEFAULT_EXPLICIT_CAP = 2_000_000   # max product-space size for explicit pair tables
DEFAULT_ELEMENT_CAP = 10_000_000   # max materialized alphabet size before truncation


def exact_dyadic_div(a: DyadicRational, b: DyadicRational) -> Optional[DyadicRational]:
    """a / b when the quotient is dyadic, else None."""
    if b.is_zero:
        raise ZeroDivisionError("division by zero mass")
    q = Fraction(a.num, 1 << a.exp) / Fraction(b.num, 1 << b.exp)
    den = q.denominator
    if den & (den - 1):
        return None
    return DyadicRational(q.numerator, den.bit_length() - 1)


@dataclass
class TupleAlphabet:
    """An ordered alphabet whose elements are 2**rank-tuples of base symbols.

    ``elements`` lists, in the alphabet's total order, either base symbol
    ids (rank 0) or pairs of indices into the rank-1 alphabet.  ``probs``
    carries one exact dyadic probability per element.
    """

    rank: int
    elements: List          # ints at rank 0, (i, j) index pairs at rank >= 1
    probs: List[DyadicRational]

    def __post_init__(self):
        if len(self.elements) != len(self.probs):
            raise ValueError("elements and probs must have equal length")
        total = D_ZERO
        for p in self.probs:
            if not p.is_positive:
                raise ValueError("probabilities must be strictly positive")
            total = total + p
        if total != D_ONE:
            raise ValueError(f"tuple alphabet mass is {total}, not 1")

    @staticmethod
    def from_vector(pv: ProbabilityVector) -> "TupleAlphabet":
        return TupleAlphabet(0, list(pv.symbols), list(pv.probs))

    def __len__(self) -> int:
        return len(self.elements)

    def mass_gf(self) -> DyadicPolynomial:
        """Mass-by-surprisal generating function (powers of 1/2 only)."""
        coeffs: Dict[int, DyadicRational] = {}
        for p in self.probs:
            k = p.log2_if_power_of_half()
            if k is not None:
                coeffs[k] = coeffs.get(k, D_ZERO) + p
        return DyadicPolynomial(coeffs)


@dataclass
class ClassRow:
    """Per-probability-class bookkeeping for one matching."""

    mass: DyadicRational       # probability of a single product element
    src_count: int
    tgt_count: int

    @property
    def matched(self) -> int:
        return min(self.src_count, self.tgt_count)

    @property
    def src_leftover(self) -> int:
        return self.src_count - self.matched

    @property
    def tgt_leftover(self) -> int:
        return self.tgt_count - self.matched


@dataclass
class Matching:
    """One maximal ordered measure-preserving matching C x C -> D x D.

    ``pairs`` maps matched source index pairs to target index pairs and is
    populated only when the product space fits under the explicit cap;
    the class table is always exact.  ``source_leftover`` / ``target_leftover``
    list the unmatched product elements (in lexicographic order) when
    explicit, and ``r_induced`` / ``s_induced`` are the renormalized
    leftover vectors (indexed densely in leftover order).
    """

    class_table: List[ClassRow]
    mass_reduction: DyadicRational
    explicit: bool
    pairs: Optional[Dict[Tuple[int, int], Tuple[int, int]]] = None
    source_leftover: Optional[List[Tuple[int, int]]] = None
    target_leftover: Optional[List[Tuple[int, int]]] = None
    r_induced: Optional[ProbabilityVector] = None
    s_induced: Optional[ProbabilityVector] = None
    # exact per-class count tables of the leftover alphabets (mass -> count),
    # where mass is the induced (renormalized) probability of one element;
    # None when renormalization leaves the dyadic rationals
    induced_src_classes: Optional[Dict[DyadicRational, int]] = None
    induced_tgt_classes: Optional[Dict[DyadicRational, int]] = None

    def pair_source_gf(self) -> DyadicPolynomial:
        return _classes_gf({row.mass: row.src_count for row in self.class_table})

    def pair_target_gf(self) -> DyadicPolynomial:
        return _classes_gf({row.mass: row.tgt_count for row in self.class_table})

    def leftover_source_gf(self) -> DyadicPolynomial:
        return _classes_gf({row.mass: row.src_leftover for row in self.class_table})

    def leftover_target_gf(self) -> DyadicPolynomial:
        return _classes_gf({row.mass: row.tgt_leftover for row in self.class_table})

    def to_json(self, include_pairs: bool = False) -> Dict:
        out = {
            "mass_reduction": self.mass_reduction.to_json(),
            "classes": [
                {
                    "prob": row.mass.to_json(),
                    "source_count": row.src_count,
                    "target_count": row.tgt_count,
                    "matched_count": row.matched,
                }
                for row in self.class_table
            ],
            "explicit": self.explicit,
        }
        if include_pairs and self.pairs is not None:
            out["pairs"] = [
                {"source": list(k), "target": list(v)} for k, v in sorted(self.pairs.items())
            ]
        return out


def _classes_gf(classes: Dict[DyadicRational, int]) -> DyadicPolynomial:
    coeffs: Dict[int, DyadicRational] = {}
    for mass, count in classes.items():
        if count == 0:
            continue
        k = mass.log2_if_power_of_half()
        if k is not None:
            coeffs[k] = coeffs.get(k, D_ZERO) + mass.scale_int(count)
    return DyadicPolynomial(coeffs)


def _class_counts(probs: Sequence[DyadicRational]) -> Dict[DyadicRational, int]:
    out: Dict[DyadicRational, int] = {}
    for p in probs:
        out[p] = out.get(p, 0) + 1
    return out


def _convolve_counts(counts: Dict[DyadicRational, int]) -> Dict[DyadicRational, int]:
    items = list(counts.items())
    out: Dict[DyadicRational, int] = {}
    for m1, c1 in items:
        for m2, c2 in items:
            t = m1 * m2
            out[t] = out.get(t, 0) + c1 * c2
    return out


def build_mompm(src: TupleAlphabet, tgt: TupleAlphabet,
                explicit_cap: int = DEFAULT_EXPLICIT_CAP) -> Matching:
    """Match the product space src x src against tgt x tgt.

    Per probability value, the i-th smallest source product element is
    matched with the i-th smallest target product element, up to the
    shorter count; the remainder on each side is left over.  The pair
    table is explicit when |src|^2 + |tgt|^2 <= explicit_cap.
    """
    explicit = len(src) ** 2 + len(tgt) ** 2 <= explicit_cap
    src_classes = _convolve_counts(_class_counts(src.probs))
    tgt_classes = _convolve_counts(_class_counts(tgt.probs))
    all_masses = sorted(set(src_classes) | set(tgt_classes), reverse=True)
    table = [
        ClassRow(m, src_classes.get(m, 0), tgt_classes.get(m, 0)) for m in all_masses
    ]
    reduction = D_ZERO
    for row in table:
        reduction = reduction + row.mass.scale_int(row.src_leftover)

    m = Matching(class_table=table, mass_reduction=reduction, explicit=explicit)
    m.induced_src_classes, m.induced_tgt_classes = _induced_class_tables(table, reduction)

    if explicit:
        _populate_explicit(m, src, tgt, reduction, m.induced_src_classes is not None)
    return m


def _induced_class_tables(table: List[ClassRow], reduction: DyadicRational):
    """Leftover class tables renormalized by the leftover mass.

    Returns (src, tgt) dicts, or (None, None) when renormalization is not
    dyadic-exact (the matching is still valid; only ladder continuation
    becomes unavailable).
    """
    src: Dict[DyadicRational, int] = {}
    tgt: Dict[DyadicRational, int] = {}
    tgt_reduction = D_ZERO
    for row in table:
        tgt_reduction = tgt_reduction + row.mass.scale_int(row.tgt_leftover)
    for row in table:
        if row.src_leftover:
            q = exact_dyadic_div(row.mass, reduction)
            if q is None:
                return None, None
            src[q] = src.get(q, 0) + row.src_leftover
        if row.tgt_leftover:
            q = exact_dyadic_div(row.mass, tgt_reduction)
            if q is None:
                return None, None
            tgt[q] = tgt.get(q, 0) + row.tgt_leftover
    return src, tgt


def _populate_explicit(m: Matching, src: TupleAlphabet, tgt: TupleAlphabet,
                       reduction: DyadicRational, induced_dyadic: bool) -> None:
    def product_classes(alpha: TupleAlphabet):
        classes: Dict[DyadicRational, List[Tuple[int, int]]] = {}
        n = len(alpha)
        for i in range(n):
            pi = alpha.probs[i]
            for j in range(n):
                t = pi * alpha.probs[j]
                classes.setdefault(t, []).append((i, j))
        return classes  # lists are in lexicographic order by construction

    sc = product_classes(src)
    tc = product_classes(tgt)
    pairs: Dict[Tuple[int, int], Tuple[int, int]] = {}
    leftover_src: List[Tuple[Tuple[int, int], DyadicRational]] = []
    leftover_tgt: List[Tuple[Tuple[int, int], DyadicRational]] = []
    for t in set(sc) | set(tc):
        xs = sc.get(t, [])
        ys = tc.get(t, [])
        k = min(len(xs), len(ys))
        for i in range(k):
            pairs[xs[i]] = ys[i]
        leftover_src.extend((x, t) for x in xs[k:])
        leftover_tgt.extend((y, t) for y in ys[k:])
    leftover_src.sort(key=lambda e: e[0])
    leftover_tgt.sort(key=lambda e: e[0])
    m.pairs = pairs
    m.source_leftover = [x for x, _ in leftover_src]
    m.target_leftover = [y for y, _ in leftover_tgt]
    if leftover_src and induced_dyadic:
        probs = [exact_dyadic_div(t, reduction) for _, t in leftover_src]
        m.r_induced = ProbabilityVector(range(len(probs)), probs)
    if leftover_tgt and induced_dyadic:
        tgt_red = D_ZERO
        for _, t in leftover_tgt:
            tgt_red = tgt_red + t
        probs = [exact_dyadic_div(t, tgt_red) for _, t in leftover_tgt]
        m.s_induced = ProbabilityVector(range(len(probs)), probs)


@dataclass
class LadderResult:
    """Outcome of iterating matchings: the rungs plus an early-stop report."""

    matchings: List[Matching]
    requested_depth: int
    stopped_at: Optional[int] = None      # level at which iteration stopped early
    stop_reason: Optional[str] = None

    @property
    def exhausted(self) -> bool:
        return self.stopped_at is not None


def iterate_matchings(src: TupleAlphabet, tgt: TupleAlphabet, depth: int,
                      explicit_cap: int = DEFAULT_EXPLICIT_CAP,
                      element_cap: int = DEFAULT_ELEMENT_CAP) -> LadderResult:
    """Build the ladder of matchings, feeding each rung's leftovers to the next.

    Rungs are explicit while the product space fits ``explicit_cap``; past
    that the ladder continues on exact class-count tables.  Stops early
    (reported, not raised) when a side runs out of leftovers, when an
    induced vector leaves the dyadic rationals, or when a materialized
    alphabet would exceed ``element_cap``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    out: List[Matching] = []
    cur_src: Optional[TupleAlphabet] = src
    cur_tgt: Optional[TupleAlphabet] = tgt
    src_classes = _class_counts(src.probs)
    tgt_classes = _class_counts(tgt.probs)
    for level in range(1, depth + 1):
        explicit_possible = cur_src is not None and cur_tgt is not None
        if explicit_possible and max(len(cur_src), len(cur_tgt)) > element_cap:
            explicit_possible = False
        if explicit_possible:
            m = build_mompm(cur_src, cur_tgt, explicit_cap=explicit_cap)
        else:
            m = _aggregate_matching(src_classes, tgt_classes)
        out.append(m)
        if level == depth:
            return LadderResult(out, depth)
        if m.mass_reduction.is_zero or not m.induced_tgt_classes:
            reason = (
                "no leftovers to match"
                if m.induced_src_classes is not None
                else "induced vectors are not dyadic"
            )
            return LadderResult(out, depth, stopped_at=level + 1, stop_reason=reason)
        # advance: leftovers become the next alphabets
        if m.explicit and m.r_induced is not None and m.s_induced is not None:
            nxt_rank = (cur_src.rank if cur_src else 0) + 1
            cur_src = TupleAlphabet(nxt_rank, list(m.source_leftover), list(m.r_induced.probs))
            cur_tgt = TupleAlphabet(nxt_rank, list(m.target_leftover), list(m.s_induced.probs))
        else:
            cur_src = cur_tgt = None
        src_classes = m.induced_src_classes
        tgt_classes = m.induced_tgt_classes
    return LadderResult(out, depth)


def _aggregate_matching(src_classes: Dict[DyadicRational, int],
                        tgt_classes: Dict[DyadicRational, int]) -> Matching:
    sc = _convolve_counts(src_classes)
    tc = _convolve_counts(tgt_classes)
    masses = sorted(set(sc) | set(tc), reverse=True)
    table = [ClassRow(m, sc.get(m, 0), tc.get(m, 0)) for m in masses]
    reduction = D_ZERO
    for row in table:
        reduction = reduction + row.mass.scale_int(row.src_leftover)
    m = Matching(class_table=table, mass_reduction=reduction, explicit=False)
    m.induced_src_classes, m.induced_tgt_classes = _induced_class_tables(table, reduction)
    return m


@dataclass
class LadderReport:
    """Exact polynomial verification of the ladder identities."""

    ok: bool
    levels_checked: int
    failures: List[str] = field(default_factory=list)
    reductions: List[DyadicRational] = field(default_factory=list)

    def to_json(self) -> Dict:
        return {
            "ok": self.ok,
            "levels_checked": self.levels_checked,
            "failures": list(self.failures),
            "reductions": [r.to_json() for r in self.reductions],
        }


def verify_ladder(source_gf: DyadicPolynomial, target_gf: DyadicPolynomial,
                  t: DyadicRational, depth: int) -> LadderReport:
    """Check, exactly and at every rung, the square-difference identity.

    At each level: G^2 - D^2 must equal t*(G(z^2) - D(z^2)); the leftover
    polynomials (positive parts of G^2 - D^2 and its negation) must equal
    t*G(z^2) and t*D(z^2); and the leftover mass must be exactly t.  The
    next rung's generating functions are the leftovers rescaled by 1/t.
    """
    failures: List[str] = []
    reductions: List[DyadicRational] = []
    g, d = source_gf, target_gf
    if t.is_zero:
        if g == d:
            return LadderReport(True, depth, [], [D_ZERO] * depth)
        return LadderReport(False, 1, ["level 1: zero reduction requires equal gfs"], [])
    inv_t = exact_dyadic_div(D_ONE, t)
    if inv_t is None:
        return LadderReport(False, 0, ["mass reduction is not a power of 1/2"], [])
    for level in range(1, depth + 1):
        pair_src = g.square()
        pair_tgt = d.square()
        diff = pair_src - pair_tgt
        want = (g.substitute_z_squared() - d.substitute_z_squared()).scale(t)
        if diff != want:
            failures.append(f"level {level}: squared-difference identity fails")
            break
        leftover_src = diff.positive_part()
        leftover_tgt = (pair_tgt - pair_src).positive_part()
        if leftover_src != g.substitute_z_squared().scale(t):
            failures.append(f"level {level}: source leftover != t*G(z^2)")
            break
        if leftover_tgt != d.substitute_z_squared().scale(t):
            failures.append(f"level {level}: target leftover != t*D(z^2)")
            break
        red = leftover_src.eval_at_one()
        reductions.append(red)
        if red != t:
            failures.append(f"level {level}: mass reduction {red} != {t}")
            break
        # next rung: induced gfs; dividing each mass by t = 2**-s scales
        # coefficients by 2**s and lowers every surprisal degree by s
        g = leftover_src.scale(inv_t).shift_degrees(-t.exp)
        d = leftover_tgt.scale(inv_t).shift_degrees(-t.exp)
    levels = len(reductions)
    return LadderReport(not failures, levels, failures, reductions)
