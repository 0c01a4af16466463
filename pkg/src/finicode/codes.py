"""Uniform handle on the implemented finitary codes for experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .codebook import construct_family, meshalkin_alphabets
from .dyadic import ProbabilityVector
from .meshalkin import meshalkin_decode, meshalkin_encode
from .phi import MarkerCoder, get_coder
from .windows import CodedWindow, Window


@dataclass
class CodeSpec:
    """One encode/decode pair together with its source and target laws."""

    kind: str                 # "meshalkin" or "phi"
    n: Optional[int] = None   # family parameter for "phi"

    def __post_init__(self):
        if self.kind == "meshalkin":
            alpha = meshalkin_alphabets()
            self._p = alpha.source_vector()
            self._q = alpha.target_vector()
            self._coder = None
        elif self.kind == "phi":
            if not self.n or self.n < 1:
                raise ValueError("phi requires n >= 1")
            self._coder = get_coder(self.n)
            self._p = self._coder.family.p
            self._q = self._coder.family.q
        else:
            raise ValueError(f"unknown code kind {self.kind!r}")

    @property
    def name(self) -> str:
        return self.kind if self.kind == "meshalkin" else f"phi(n={self.n})"

    @property
    def source_vector(self) -> ProbabilityVector:
        return self._p

    @property
    def target_vector(self) -> ProbabilityVector:
        return self._q

    def encode(self, window: Window) -> CodedWindow:
        if self.kind == "meshalkin":
            return meshalkin_encode(window)
        return self._coder.encode(window)

    def decode(self, window: Window, unknown=None) -> CodedWindow:
        if self.kind == "meshalkin":
            return meshalkin_decode(window, unknown=unknown)
        return self._coder.decode(window, unknown=unknown)


def resolve_code(code, n: Optional[int] = None) -> CodeSpec:
    if isinstance(code, CodeSpec):
        return code
    return CodeSpec(kind=str(code), n=n)
