"""Exact dyadic-rational arithmetic, probability vectors, and generating functions.

Everything in this module is exact: values are integers scaled by powers of
two, arithmetic never rounds, and numerators are arbitrary-precision Python
ints.  Floating point only appears at the very edge (``float()`` conversions
for the statistics layer).

Conventions
-----------
* All logarithms are base 2; entropies are in bits, variances in bits^2.
* A probability vector lists symbol ids together with strictly positive
  dyadic probabilities summing exactly to 1.  The listed order of the
  symbols defines the total order used by the matching machinery.
* Symbol id 0 is reserved for the marker symbol in marker alphabets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple


class NonDyadicProbability(ValueError):
    """A probability was not an exact power of 1/2 where one was required."""


@dataclass(frozen=True)
class DyadicRational:
    """An exact rational of the form num / 2**exp, kept in canonical form.

    Canonical form: ``num`` is odd or zero, ``exp >= 0``, and ``exp == 0``
    whenever ``num == 0``.  Instances are immutable and hashable, so they
    can serve as exact grouping keys.
    """

    num: int
    exp: int

    def __post_init__(self):
        num, exp = self.num, self.exp
        if exp < 0:
            num <<= -exp
            exp = 0
        if num == 0:
            exp = 0
        else:
            while num % 2 == 0 and exp > 0:
                num //= 2
                exp -= 1
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    # --- constructors -------------------------------------------------
    @staticmethod
    def zero() -> "DyadicRational":
        return DyadicRational(0, 0)

    @staticmethod
    def one() -> "DyadicRational":
        return DyadicRational(1, 0)

    @staticmethod
    def pow2(k: int) -> "DyadicRational":
        """2**(-k) for any integer k."""
        if k >= 0:
            return DyadicRational(1, k)
        return DyadicRational(1 << (-k), 0)

    @staticmethod
    def from_int(n: int) -> "DyadicRational":
        return DyadicRational(n, 0)

    # --- arithmetic ---------------------------------------------------
    def __add__(self, other: "DyadicRational") -> "DyadicRational":
        e = max(self.exp, other.exp)
        num = (self.num << (e - self.exp)) + (other.num << (e - other.exp))
        return DyadicRational(num, e)

    def __sub__(self, other: "DyadicRational") -> "DyadicRational":
        e = max(self.exp, other.exp)
        num = (self.num << (e - self.exp)) - (other.num << (e - other.exp))
        return DyadicRational(num, e)

    def __neg__(self) -> "DyadicRational":
        return DyadicRational(-self.num, self.exp)

    def __mul__(self, other: "DyadicRational") -> "DyadicRational":
        return DyadicRational(self.num * other.num, self.exp + other.exp)

    def __lt__(self, other: "DyadicRational") -> bool:
        e = max(self.exp, other.exp)
        return (self.num << (e - self.exp)) < (other.num << (e - other.exp))

    def __le__(self, other: "DyadicRational") -> bool:
        return self == other or self < other

    def __gt__(self, other: "DyadicRational") -> bool:
        return other < self

    def __ge__(self, other: "DyadicRational") -> bool:
        return self == other or other < self

    def scale_int(self, n: int) -> "DyadicRational":
        return DyadicRational(self.num * n, self.exp)

    # --- predicates and conversions ------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.num == 0

    @property
    def is_positive(self) -> bool:
        return self.num > 0

    def log2_if_power_of_half(self):
        """Return k when the value equals 2**(-k) for a non-negative k, else None."""
        if self.num == 1 and self.exp >= 0:
            return self.exp
        return None

    def __float__(self) -> float:
        return self.num / (1 << self.exp)

    def __str__(self) -> str:
        if self.exp == 0:
            return str(self.num)
        return f"{self.num}/2^{self.exp}"

    def to_json(self) -> Dict[str, int]:
        return {"num": self.num, "exp": self.exp}

    @staticmethod
    def from_json(obj) -> "DyadicRational":
        return DyadicRational(int(obj["num"]), int(obj["exp"]))


D_ZERO = DyadicRational.zero()
D_ONE = DyadicRational.one()
D_HALF = DyadicRational.pow2(1)


class DyadicPolynomial:
    """A polynomial in z with dyadic coefficients, stored sparsely by degree.

    Only nonzero coefficients are stored.  Supports the handful of exact
    operations the matching ladder needs: add/subtract/multiply, squaring,
    the substitution z -> z^2, pointwise clamps, and evaluation at z = 1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Dict[int, DyadicRational] | None = None):
        cleaned: Dict[int, DyadicRational] = {}
        if coeffs:
            for deg, c in coeffs.items():
                if not c.is_zero:
                    cleaned[int(deg)] = c
        self.coeffs = cleaned

    @staticmethod
    def zero() -> "DyadicPolynomial":
        return DyadicPolynomial()

    @staticmethod
    def monomial(deg: int, coeff: DyadicRational) -> "DyadicPolynomial":
        return DyadicPolynomial({deg: coeff})

    def __eq__(self, other) -> bool:
        return isinstance(other, DyadicPolynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted((d, c.num, c.exp) for d, c in self.coeffs.items())))

    def __add__(self, other: "DyadicPolynomial") -> "DyadicPolynomial":
        out = dict(self.coeffs)
        for deg, c in other.coeffs.items():
            out[deg] = out.get(deg, D_ZERO) + c
        return DyadicPolynomial(out)

    def __sub__(self, other: "DyadicPolynomial") -> "DyadicPolynomial":
        out = dict(self.coeffs)
        for deg, c in other.coeffs.items():
            out[deg] = out.get(deg, D_ZERO) - c
        return DyadicPolynomial(out)

    def __mul__(self, other: "DyadicPolynomial") -> "DyadicPolynomial":
        out: Dict[int, DyadicRational] = {}
        for d1, c1 in self.coeffs.items():
            for d2, c2 in other.coeffs.items():
                deg = d1 + d2
                out[deg] = out.get(deg, D_ZERO) + c1 * c2
        return DyadicPolynomial(out)

    def square(self) -> "DyadicPolynomial":
        return self * self

    def substitute_z_squared(self) -> "DyadicPolynomial":
        """P(z) -> P(z^2): the coefficient at degree k moves to degree 2k."""
        return DyadicPolynomial({2 * d: c for d, c in self.coeffs.items()})

    def shift_degrees(self, delta: int) -> "DyadicPolynomial":
        """Multiply by z**delta (delta may be negative if no degree drops below 0)."""
        out = {d + delta: c for d, c in self.coeffs.items()}
        if any(d < 0 for d in out):
            raise ValueError("degree shift would create negative degrees")
        return DyadicPolynomial(out)

    def scale(self, factor: DyadicRational) -> "DyadicPolynomial":
        return DyadicPolynomial({d: c * factor for d, c in self.coeffs.items()})

    def positive_part(self) -> "DyadicPolynomial":
        """Keep only the strictly positive coefficients."""
        return DyadicPolynomial({d: c for d, c in self.coeffs.items() if c.is_positive})

    def coefficient(self, deg: int) -> DyadicRational:
        return self.coeffs.get(deg, D_ZERO)

    def eval_at_one(self) -> DyadicRational:
        total = D_ZERO
        for c in self.coeffs.values():
            total = total + c
        return total

    def derivative_at_one(self) -> DyadicRational:
        total = D_ZERO
        for d, c in self.coeffs.items():
            total = total + c.scale_int(d)
        return total

    def second_derivative_at_one(self) -> DyadicRational:
        total = D_ZERO
        for d, c in self.coeffs.items():
            total = total + c.scale_int(d * (d - 1))
        return total

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def degrees(self) -> List[int]:
        return sorted(self.coeffs)

    def items(self) -> List[Tuple[int, DyadicRational]]:
        return sorted(self.coeffs.items())

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c})z^{d}" for d, c in self.items())

    def to_json(self) -> List[List[int]]:
        """Sorted [degree, num, exp] triples."""
        return [[d, c.num, c.exp] for d, c in self.items()]

    @staticmethod
    def from_json(triples) -> "DyadicPolynomial":
        return DyadicPolynomial(
            {int(d): DyadicRational(int(n), int(e)) for d, n, e in triples}
        )


class ProbabilityVector:
    """An ordered alphabet of symbol ids with exact dyadic probabilities.

    The order of ``symbols`` is the total order the matching machinery
    uses; probabilities must be strictly positive and sum to exactly 1.
    """

    __slots__ = ("symbols", "probs")

    def __init__(self, symbols: Sequence[int], probs: Sequence[DyadicRational]):
        symbols = list(int(s) for s in symbols)
        probs = list(probs)
        if len(symbols) != len(probs):
            raise ValueError("symbols and probs must have equal length")
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbol ids")
        total = D_ZERO
        for p in probs:
            if not p.is_positive:
                raise ValueError("probabilities must be strictly positive")
            total = total + p
        if total != D_ONE:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.symbols = symbols
        self.probs = probs

    @staticmethod
    def from_pow2_exponents(symbols: Sequence[int], exponents: Sequence[int]) -> "ProbabilityVector":
        return ProbabilityVector(symbols, [DyadicRational.pow2(k) for k in exponents])

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ProbabilityVector)
            and self.symbols == other.symbols
            and self.probs == other.probs
        )

    def prob_of(self, symbol: int) -> DyadicRational:
        return self.probs[self.symbols.index(symbol)]

    def surprisal_exponents(self) -> List[int]:
        """The integers k_i with p_i = 2**(-k_i); raises if any p_i is not one."""
        exps = []
        for p in self.probs:
            k = p.log2_if_power_of_half()
            if k is None:
                raise NonDyadicProbability(f"probability {p} is not a power of 1/2")
            exps.append(k)
        return exps

    def float_probs(self) -> List[float]:
        return [float(p) for p in self.probs]

    def to_json(self) -> Dict:
        return {
            "symbols": list(self.symbols),
            "probs": [p.to_json() for p in self.probs],
        }

    @staticmethod
    def from_json(obj) -> "ProbabilityVector":
        return ProbabilityVector(
            obj["symbols"], [DyadicRational.from_json(p) for p in obj["probs"]]
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{s}:{p}" for s, p in zip(self.symbols, self.probs))
        return f"ProbabilityVector({body})"


# ----------------------------------------------------------------------
# Information statistics (exact)
# ----------------------------------------------------------------------

def entropy(pv: ProbabilityVector) -> DyadicRational:
    """Exact entropy in bits: sum of p_i * k_i for p_i = 2**(-k_i)."""
    total = D_ZERO
    for p, k in zip(pv.probs, pv.surprisal_exponents()):
        total = total + p.scale_int(k)
    return total


def informational_variance(pv: ProbabilityVector) -> DyadicRational:
    """Exact variance of the surprisal about the entropy, in bits^2."""
    h = entropy(pv)
    total = D_ZERO
    for p, k in zip(pv.probs, pv.surprisal_exponents()):
        dev = DyadicRational.from_int(k) - h
        total = total + p * dev * dev
    return total


def log_moment(pv: ProbabilityVector, k: int) -> DyadicRational:
    """Exact k-th log moment: sum of p_i * (log2 p_i)**k, so (-k_i)**k."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    total = D_ZERO
    for p, e in zip(pv.probs, pv.surprisal_exponents()):
        total = total + p.scale_int((-e) ** k)
    return total


def generating_function(pv: ProbabilityVector) -> DyadicPolynomial:
    """Mass-by-surprisal generating function.

    The coefficient at degree k is the total mass of symbols whose
    probability is exactly 2**(-k).  For an all-power-of-1/2 vector the
    value at z = 1 is exactly 1.
    """
    coeffs: Dict[int, DyadicRational] = {}
    for p in pv.probs:
        k = p.log2_if_power_of_half()
        if k is None:
            raise NonDyadicProbability(f"probability {p} is not a power of 1/2")
        coeffs[k] = coeffs.get(k, D_ZERO) + p
    return DyadicPolynomial(coeffs)
