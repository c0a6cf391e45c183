"""Places of Q, exact p-adic logarithms, Gauss norms and the product formula."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Union

from sympy import factorint, isprime

from .algebra import BinaryForm, MapLift, UniPoly, as_fraction
from .errors import RejectedInput


@dataclass(frozen=True, order=True)
class Place:
    """``prime=None`` is the archimedean place; every place of Q has weight 1."""

    prime: int | None = None

    def __post_init__(self) -> None:
        if self.prime is not None and not isprime(self.prime):
            raise RejectedInput(f"{self.prime} is not prime")

    @property
    def is_infinite(self) -> bool:
        return self.prime is None

    @property
    def weight(self) -> int:
        return 1

    def __str__(self) -> str:
        return "inf" if self.prime is None else str(self.prime)

    @classmethod
    def parse(cls, text: str) -> "Place":
        t = text.strip().lower()
        return cls(None) if t in {"inf", "infinity", "oo"} else cls(int(t))


INFINITY = Place(None)


@dataclass(frozen=True)
class PlaceSet:
    finite_primes: tuple[int, ...] = ()
    includes_infinite: bool = True

    def __iter__(self) -> Iterator[Place]:
        if self.includes_infinite:
            yield INFINITY
        for p in self.finite_primes:
            yield Place(p)

    def __contains__(self, v: object) -> bool:
        if not isinstance(v, Place):
            return False
        return self.includes_infinite if v.is_infinite else v.prime in self.finite_primes

    def union(self, other: "PlaceSet") -> "PlaceSet":
        return PlaceSet(
            tuple(sorted(set(self.finite_primes) | set(other.finite_primes))),
            self.includes_infinite or other.includes_infinite,
        )

    def labels(self) -> list[str]:
        return [str(v) for v in self]


# ---------------------------------------------------------------------------
# exact logarithms


@dataclass(frozen=True)
class LogCombination:
    """Exact real number ``sum_p c_p log p`` with rational ``c_p``."""

    terms: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def of(cls, mapping: dict[int, Fraction]) -> "LogCombination":
        return cls(tuple(sorted((p, Fraction(c)) for p, c in mapping.items() if c)))

    def __add__(self, other: "LogCombination") -> "LogCombination":
        out = dict(self.terms)
        for p, c in other.terms:
            out[p] = out.get(p, Fraction(0)) + c
        return LogCombination.of(out)

    def __neg__(self) -> "LogCombination":
        return LogCombination(tuple((p, -c) for p, c in self.terms))

    def __sub__(self, other: "LogCombination") -> "LogCombination":
        return self + (-other)

    def scale(self, k: Fraction | int) -> "LogCombination":
        return LogCombination.of({p: c * k for p, c in self.terms})

    def is_zero(self) -> bool:
        return not self.terms

    def __float__(self) -> float:
        return math.fsum(float(c) * math.log(p) for p, c in self.terms)

    def coefficient(self, p: int) -> Fraction:
        return dict(self.terms).get(p, Fraction(0))


def valuation(x: Fraction | int, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = as_fraction(x)
    if x == 0:
        raise RejectedInput("valuation of zero")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def abs_value(x: Fraction | int, v: Place) -> float | Fraction:
    """``|x|_v``; exact (a Fraction) at finite places."""
    x = as_fraction(x)
    if v.is_infinite:
        return abs(float(x)) if abs(x.numerator).bit_length() < 1000 else math.inf
    if x == 0:
        return Fraction(0)
    return Fraction(v.prime) ** (-valuation(x, v.prime))


def log_abs_exact(x: Fraction | int, v: Place) -> LogCombination:
    """``log|x|_v`` as an exact combination of ``log p`` (the archimedean one via factorization)."""
    x = as_fraction(x)
    if x == 0:
        raise RejectedInput("log of |0| is -inf")
    if v.is_infinite:
        out: dict[int, Fraction] = {}
        for p, e in factor_rational(x).items():
            out[p] = Fraction(e)
        return LogCombination.of(out)
    return LogCombination.of({v.prime: Fraction(-valuation(x, v.prime))})


def log_abs(x: Fraction | int, v: Place) -> float:
    """Floating ``log|x|_v``, safe for huge integers; ``-inf`` at zero."""
    x = as_fraction(x)
    if x == 0:
        return -math.inf
    if v.is_infinite:
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    return -valuation(x, v.prime) * math.log(v.prime)


def factor_rational(x: Fraction) -> dict[int, int]:
    """Exponents ``{p: v_p(x)}`` of a nonzero rational."""
    x = as_fraction(x)
    out: dict[int, int] = {}
    for p, e in factorint(abs(x.numerator)).items():
        out[p] = out.get(p, 0) + e
    for p, e in factorint(x.denominator).items():
        out[p] = out.get(p, 0) - e
    return {p: e for p, e in out.items() if e}


def primes_of(x: Fraction | int) -> set[int]:
    x = as_fraction(x)
    if x == 0:
        return set()
    return set(factorint(abs(x.numerator))) | set(factorint(x.denominator))


def product_formula_check(x: Fraction | int) -> LogCombination:
    """``sum_v log|x|_v`` computed exactly; the product formula makes it zero."""
    x = as_fraction(x)
    if x == 0:
        raise RejectedInput("product formula needs a nonzero rational")
    total = log_abs_exact(x, INFINITY)
    for p in sorted(primes_of(x)):
        total = total + log_abs_exact(x, Place(p))
    return total


def gauss_norm_exponent(P: BinaryForm, p: int) -> Fraction:
    """``c`` with ``log max_j |a_j|_p = c log p``."""
    if P.is_zero():
        raise RejectedInput("Gauss norm of the zero form")
    return Fraction(-min(valuation(c, p) for _, c in P.terms))


def gauss_norm_log(P: BinaryForm, p: int) -> float:
    return float(gauss_norm_exponent(P, p)) * math.log(p)


Relevant = Union[Fraction, int, BinaryForm, UniPoly, MapLift]


def _coefficients(item: Relevant) -> Iterable[Fraction]:
    if isinstance(item, BinaryForm):
        return [c for _, c in item.terms]
    if isinstance(item, UniPoly):
        return [c for c in item.coeffs if c]
    if isinstance(item, MapLift):
        return [c for _, c in item.F0.terms] + [c for _, c in item.F1.terms] + [item.resultant]
    return [as_fraction(item)]


def relevant_places(inputs: Iterable[Relevant]) -> PlaceSet:
    """Infinity plus every prime of a numerator or denominator of the listed data."""
    primes: set[int] = set()
    for item in inputs:
        for c in _coefficients(item):
            if c:
                primes |= primes_of(c)
    return PlaceSet(tuple(sorted(primes)), True)


@dataclass(frozen=True)
class MSharpSum:
    value: float
    error: float
    finite: LogCombination
    archimedean: float


def msharp_sum(P: BinaryForm) -> MSharpSum:
    """``sum_v M#(P)_v``: exact Gauss norms plus the numeric archimedean term."""
    from .archimedean import msharp_inf

    finite = LogCombination()
    for p in relevant_places([P]).finite_primes:
        finite = finite + LogCombination.of({p: gauss_norm_exponent(P, p)})
    arch, err = msharp_inf(P)
    return MSharpSum(float(finite) + arch, err, finite, arch)
