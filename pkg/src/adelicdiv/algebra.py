"""Exact algebra over Q: polynomials, binary forms, resultants, strata and D*.

A binary form of degree ``d`` is stored sparsely as ``{j: a_j}`` meaning
``sum_j a_j * p0**(d - j) * p1**j``.  Its dehomogenization is ``P(1, z)``,
so the coefficient of ``z**j`` is ``a_j`` and the root at infinity has
multiplicity ``d - max{j : a_j != 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .errors import BudgetExceeded, DegenerateEquation, RejectedInput

Number = Union[int, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_DIGIT_BUDGET = 10**7


def as_fraction(x: Number | str) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def fraction_str(x: Fraction) -> str:
    """Decimal-string form used for JSON export: ``"a"`` or ``"a/b"``."""
    x = as_fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _digits(x: Fraction) -> int:
    # decimal digit count, estimated from bit lengths
    bits = abs(x.numerator).bit_length() + x.denominator.bit_length()
    return 1 + int(bits * 0.30103)


def _common_denominator(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return den


def _int_convolve(a: Mapping[int, int], b: Mapping[int, int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for i, x in a.items():
        for j, y in b.items():
            k = i + j
            out[k] = out.get(k, 0) + x * y
    return {k: v for k, v in out.items() if v}


def _sparse_mul(a: Mapping[int, Fraction], b: Mapping[int, Fraction]) -> dict[int, Fraction]:
    """Product of sparse rational polynomials via integer arithmetic."""
    if not a or not b:
        return {}
    da = _common_denominator(a.values())
    db = _common_denominator(b.values())
    ia = {k: int(v * da) for k, v in a.items()}
    ib = {k: int(v * db) for k, v in b.items()}
    den = da * db
    return {k: Fraction(v, den) for k, v in _int_convolve(ia, ib).items()}


# ---------------------------------------------------------------------------
# univariate polynomials


@dataclass(frozen=True)
class UniPoly:
    """Dense polynomial in ``z`` with rational coefficients, constant term first."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        cs = [as_fraction(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_sparse(cls, terms: Mapping[int, Number]) -> "UniPoly":
        if not terms:
            return cls(())
        top = max(k for k, v in terms.items() if v) if any(terms.values()) else -1
        cs = [ZERO] * (top + 1)
        for k, v in terms.items():
            if v:
                cs[k] = as_fraction(v)
        return cls(tuple(cs))

    @classmethod
    def constant(cls, c: Number) -> "UniPoly":
        return cls((as_fraction(c),))

    @classmethod
    def z(cls) -> "UniPoly":
        return cls((ZERO, ONE))

    @classmethod
    def from_roots(cls, roots: Sequence[Number], lead: Number = 1) -> "UniPoly":
        out = cls.constant(lead)
        for r in roots:
            out = out * cls((-as_fraction(r), ONE))
        return out

    # basic data -----------------------------------------------------------
    @property
    def degree(self) -> int:
        """Degree, with ``-1`` standing in for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lc(self) -> Fraction:
        if not self.coeffs:
            raise RejectedInput("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def nonzero_terms(self) -> dict[int, Fraction]:
        return {k: c for k, c in enumerate(self.coeffs) if c}

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other: "UniPoly") -> "UniPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return UniPoly(tuple(x + b[i] if i < len(b) else x for i, x in enumerate(a)))

    def __neg__(self) -> "UniPoly":
        return UniPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __mul__(self, other: "UniPoly | Number") -> "UniPoly":
        if not isinstance(other, UniPoly):
            return self.scale(other)
        return UniPoly.from_sparse(_sparse_mul(self.nonzero_terms(), other.nonzero_terms()))

    __rmul__ = __mul__

    def scale(self, c: Number) -> "UniPoly":
        c = as_fraction(c)
        return UniPoly(tuple(c * x for x in self.coeffs))

    def __pow__(self, e: int) -> "UniPoly":
        out, base = UniPoly.constant(1), self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other: object) -> bool:
        return isinstance(other, UniPoly) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def divmod(self, other: "UniPoly") -> tuple["UniPoly", "UniPoly"]:
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        dg = other.degree
        if self.degree < dg:
            return UniPoly(()), self
        inv = 1 / other.lc
        support = [(j, c) for j, c in enumerate(other.coeffs[:-1]) if c]
        r = list(self.coeffs)
        q = [ZERO] * (self.degree - dg + 1)
        for i in range(self.degree, dg - 1, -1):
            c = r[i]
            if not c:
                continue
            t = c * inv
            q[i - dg] = t
            r[i] = ZERO
            shift = i - dg
            for j, gj in support:
                r[shift + j] -= t * gj
        return UniPoly(tuple(q)), UniPoly(tuple(r[:dg]))

    def __floordiv__(self, other: "UniPoly") -> "UniPoly":
        return self.divmod(other)[0]

    def __mod__(self, other: "UniPoly") -> "UniPoly":
        return self.divmod(other)[1]

    def exact_div(self, other: "UniPoly") -> "UniPoly":
        q, r = self.divmod(other)
        if r:
            raise ArithmeticError("division is not exact")
        return q

    def derivative(self) -> "UniPoly":
        return UniPoly(tuple(k * c for k, c in enumerate(self.coeffs) if k))

    def monic(self) -> "UniPoly":
        return self.scale(1 / self.lc)

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + (c if isinstance(x, Fraction) or isinstance(x, int) else float(c))
        return acc

    def __repr__(self) -> str:
        return f"UniPoly({self.to_string()})"

    def to_string(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if not c:
                continue
            mag = abs(c)
            sign = "-" if c < 0 else "+"
            if k == 0:
                body = fraction_str(mag)
            else:
                mono = "z" if k == 1 else f"z^{k}"
                body = mono if mag == 1 else f"{fraction_str(mag)}*{mono}"
            parts.append((sign, body))
        head_sign, head = parts[0]
        text = ("-" if head_sign == "-" else "") + head
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text


def poly_gcd(a: UniPoly, b: UniPoly) -> UniPoly:
    """Monic gcd (the zero polynomial only when both inputs vanish)."""
    while b:
        a, b = b, a % b
    return a.monic() if a else a


def resultant_uni(p: UniPoly, q: UniPoly) -> Fraction:
    """Resultant ``lc(p)**deg(q) * prod_{p(a)=0} q(a)`` (Sylvester convention)."""
    if p.is_zero() or q.is_zero():
        raise RejectedInput("resultant needs nonzero polynomials")
    acc = ONE
    while True:
        dp, dq = p.degree, q.degree
        if dp == 0:
            return acc * p.lc**dq
        if dq == 0:
            return acc * q.lc**dp
        r = q % p
        if r.is_zero():
            return ZERO
        dr = r.degree
        # Res(p,q) = lc(p)^(dq-dr) Res(p,r);  Res(p,r) = (-1)^(dp*dr) Res(r,p)
        acc *= p.lc ** (dq - dr)
        if (dp * dr) % 2:
            acc = -acc
        p, q = r, p


# ---------------------------------------------------------------------------
# squarefree strata


@dataclass(frozen=True)
class MultiplicityStrata:
    """Grouping of the finite roots of ``P(1, z)`` by multiplicity."""

    strata: tuple[tuple[UniPoly, int], ...]
    content: Fraction
    infinity_multiplicity: int = 0

    def reconstruct(self) -> UniPoly:
        out = UniPoly.constant(self.content)
        for q, m in self.strata:
            out = out * q**m
        return out

    @property
    def finite_degree(self) -> int:
        return sum(q.degree * m for q, m in self.strata)

    @property
    def distinct_finite(self) -> int:
        return sum(q.degree for q, _ in self.strata)


_CHECK_PRIMES = (2**61 - 1, 2**31 - 1, 1_000_000_007)


def _gcd_degree_mod(a: list[int], b: list[int], q: int) -> int:
    """Degree of ``gcd(a, b)`` over ``F_q``; coefficient lists run low to high."""
    def trim(x):
        while x and x[-1] == 0:
            x.pop()
        return x

    a, b = trim([c % q for c in a]), trim([c % q for c in b])
    while b:
        inv = pow(b[-1], -1, q)
        while len(a) >= len(b):
            k = a[-1] * inv % q
            shift = len(a) - len(b)
            for i, c in enumerate(b):
                a[shift + i] = (a[shift + i] - k * c) % q
            trim(a)
            if not a:
                break
        a, b = b, a
    return len(a) - 1


def _squarefree_mod_prime(f: UniPoly) -> bool:
    """Sound shortcut: a trivial gcd of ``f`` and ``f'`` modulo a prime not dividing the leading
    coefficient or any denominator forces a trivial gcd over Q."""
    den = math.lcm(*(c.denominator for c in f.coeffs))
    ints = [int(c * den) for c in f.coeffs]
    deriv = [i * c for i, c in enumerate(ints)][1:]
    for q in _CHECK_PRIMES:
        if den % q == 0 or ints[-1] % q == 0:
            continue
        if _gcd_degree_mod(ints, deriv, q) == 0:
            return True
    return False


def squarefree_strata(p: UniPoly, infinity_multiplicity: int = 0) -> MultiplicityStrata:
    """Yun decomposition: ``p = content * prod q_m**m`` with monic squarefree coprime ``q_m``."""
    if p.is_zero():
        raise RejectedInput("squarefree decomposition of the zero polynomial")
    content = p.lc
    if p.degree == 0:
        return MultiplicityStrata((), content, infinity_multiplicity)
    f = p.monic()
    if _squarefree_mod_prime(f):
        return MultiplicityStrata(((f, 1),), content, infinity_multiplicity)
    df = f.derivative()
    a = poly_gcd(f, df)
    b = f.exact_div(a)
    c = df.exact_div(a)
    d = c - b.derivative()
    strata: list[tuple[UniPoly, int]] = []
    m = 1
    while b.degree > 0:
        a = poly_gcd(b, d)
        if a.degree > 0:
            strata.append((a, m))
        b = b.exact_div(a)
        c = d.exact_div(a)
        d = c - b.derivative()
        m += 1
    return MultiplicityStrata(tuple(strata), content, infinity_multiplicity)


def dstar_from_strata(strata: MultiplicityStrata) -> Fraction:
    """prod_j prod_{i != j} (z_j - z_i)**(d_i d_j) over the finite roots."""
    parts = strata.strata
    out = ONE
    for q, m in parts:
        if q.degree > 1:
            out *= resultant_uni(q, q.derivative()) ** (m * m)
    for i, (q, m) in enumerate(parts):
        for j, (r, n) in enumerate(parts):
            if i != j:
                out *= resultant_uni(q, r) ** (m * n)
    return out


def dstar(p: UniPoly) -> Fraction:
    if p.degree < 1:
        raise RejectedInput("dstar needs a nonconstant polynomial")
    return dstar_from_strata(squarefree_strata(p))


# ---------------------------------------------------------------------------
# binary forms


def _clean(terms: Mapping[int, Number]) -> tuple[tuple[int, Fraction], ...]:
    return tuple(sorted((int(k), as_fraction(v)) for k, v in terms.items() if v))


@dataclass(frozen=True)
class BinaryForm:
    """Homogeneous ``sum_j a_j p0^(d-j) p1^j``; the zero form is allowed as a map component."""

    degree: int
    terms: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise RejectedInput("negative form degree")
        cleaned = _clean(dict(self.terms))
        for j, _ in cleaned:
            if not 0 <= j <= self.degree:
                raise RejectedInput(f"p1-exponent {j} outside degree {self.degree}")
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def from_dict(cls, degree: int, coeffs: Mapping[int, Number]) -> "BinaryForm":
        return cls(degree, tuple(coeffs.items()))

    @classmethod
    def from_unipoly(cls, p: UniPoly, degree: int | None = None) -> "BinaryForm":
        """Homogenize ``p`` to the given degree (default: its own degree)."""
        d = p.degree if degree is None else degree
        if d < p.degree:
            raise RejectedInput("homogenization degree below polynomial degree")
        return cls(max(d, 0), tuple(p.nonzero_terms().items()))

    @classmethod
    def point(cls, x0: Number, x1: Number) -> "BinaryForm":
        """Linear form ``(p0,p1) ^ (x0,x1) = x1 p0 - x0 p1`` vanishing at ``(x0:x1)``."""
        return cls(1, ((0, as_fraction(x1)), (1, -as_fraction(x0))))

    @cached_property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self.terms)

    def coeff(self, i: int, j: int) -> Fraction:
        if i + j != self.degree:
            raise RejectedInput("index pair does not match the degree")
        return self.coeffs.get(j, ZERO)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def infinity_multiplicity(self) -> int:
        if not self.terms:
            raise RejectedInput("zero form has no divisor")
        return self.degree - self.terms[-1][0]

    @property
    def p1_multiplicity(self) -> int:
        """Order of vanishing at the point 0, i.e. the power of p1 dividing P."""
        return self.terms[0][0]

    def dehomogenize(self) -> UniPoly:
        return UniPoly.from_sparse(self.coeffs)

    def leading_finite(self) -> Fraction:
        """``L(P(1, .))``: leading coefficient of the dehomogenization."""
        return self.terms[-1][1]

    def __add__(self, other: "BinaryForm") -> "BinaryForm":
        self._same_degree(other)
        out = dict(self.coeffs)
        for j, c in other.terms:
            out[j] = out.get(j, ZERO) + c
        return BinaryForm.from_dict(self.degree, out)

    def __neg__(self) -> "BinaryForm":
        return BinaryForm(self.degree, tuple((j, -c) for j, c in self.terms))

    def __sub__(self, other: "BinaryForm") -> "BinaryForm":
        return self + (-other)

    def __mul__(self, other: "BinaryForm | Number") -> "BinaryForm":
        if not isinstance(other, BinaryForm):
            c = as_fraction(other)
            return BinaryForm(self.degree, tuple((j, c * a) for j, a in self.terms))
        return BinaryForm.from_dict(self.degree + other.degree, _sparse_mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "BinaryForm":
        out, base = BinaryForm(0, ((0, ONE),)), self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def _same_degree(self, other: "BinaryForm") -> None:
        if self.degree != other.degree:
            raise RejectedInput("forms of different degrees")

    def evaluate(self, x0, x1):
        """Evaluate at a point; works for Fractions, ints, floats or complex numbers."""
        exact = all(isinstance(v, (int, Fraction)) for v in (x0, x1))
        acc = 0
        for j, c in self.terms:
            coef = c if exact else complex(c) if isinstance(x0, complex) or isinstance(x1, complex) else float(c)
            acc = acc + coef * x0 ** (self.degree - j) * x1**j
        return acc

    def content_digits(self) -> int:
        return sum(_digits(c) for _, c in self.terms)

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for j, c in reversed(self.terms):
            i = self.degree - j
            mono = "*".join(
                s for s in (
                    "" if i == 0 else ("p0" if i == 1 else f"p0^{i}"),
                    "" if j == 0 else ("p1" if j == 1 else f"p1^{j}"),
                ) if s
            )
            mag = abs(c)
            body = mono if (mag == 1 and mono) else (fraction_str(mag) if not mono else f"{fraction_str(mag)}*{mono}")
            pieces.append(("-" if c < 0 else "+", body))
        text = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"BinaryForm({self.to_string()})"


def wedge(a0: BinaryForm, a1: BinaryForm, b0: BinaryForm, b1: BinaryForm) -> BinaryForm:
    """``(a0, a1) ^ (b0, b1) = a0*b1 - a1*b0``."""
    return a0 * b1 - a1 * b0


def _t_poly(form: BinaryForm) -> UniPoly:
    # polynomial in t = p0/p1: coefficient of t^k is the p0^k p1^(d-k) coefficient
    d = form.degree
    return UniPoly.from_sparse({d - j: c for j, c in form.terms})


def resultant_forms(f: BinaryForm, g: BinaryForm) -> Fraction:
    """Homogeneous resultant: Sylvester determinant with rows ordered from ``p0^d`` down."""
    df, dg = f.degree, g.degree
    if df == 0 and dg == 0:
        return ONE
    if f.is_zero() or g.is_zero():
        return ZERO
    ft, gt = _t_poly(f), _t_poly(g)
    if ft.degree == df:
        if gt.degree <= 0:
            return ft.lc ** (dg - max(gt.degree, 0)) * gt.lc**df
        return ft.lc ** (dg - gt.degree) * resultant_uni(ft, gt)
    if gt.degree == dg:
        sign = -1 if (df * dg) % 2 else 1
        if ft.degree <= 0:
            return sign * gt.lc ** (df - max(ft.degree, 0)) * ft.lc**dg
        return sign * gt.lc ** (df - ft.degree) * resultant_uni(gt, ft)
    return ZERO


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class MapLift:
    """A lift ``F = (F0, F1)`` of a rational map; ``z = p1/p0`` maps to ``F1/F0``."""

    F0: BinaryForm
    F1: BinaryForm

    def __post_init__(self) -> None:
        if self.F0.degree != self.F1.degree:
            raise RejectedInput("map components must share a degree")
        if self.F0.is_zero() and self.F1.is_zero():
            raise RejectedInput("both map components vanish")
        if self.degree > 0 and self.resultant == 0:
            raise RejectedInput("map lift has vanishing resultant")

    @property
    def degree(self) -> int:
        return self.F0.degree

    @cached_property
    def resultant(self) -> Fraction:
        return resultant_forms(self.F0, self.F1)

    @classmethod
    def from_polynomial(cls, p: UniPoly) -> "MapLift":
        d = p.degree
        return cls(BinaryForm(d, ((0, ONE),)), BinaryForm.from_unipoly(p, d))

    @classmethod
    def identity(cls) -> "MapLift":
        return cls(BinaryForm(1, ((0, ONE),)), BinaryForm(1, ((1, ONE),)))

    @classmethod
    def constant(cls, c: Fraction | None) -> "MapLift":
        """Constant map with value ``c`` (``None`` for infinity)."""
        if c is None:
            return cls(BinaryForm(0), BinaryForm(0, ((0, ONE),)))
        return cls(BinaryForm(0, ((0, ONE),)), BinaryForm(0, ((0, as_fraction(c)),)))

    def compose(self, inner: "MapLift") -> "MapLift":
        """Lift of ``self o inner``."""
        d = self.degree
        g0 = [BinaryForm(0, ((0, ONE),))]
        g1 = [BinaryForm(0, ((0, ONE),))]
        for _ in range(d):
            g0.append(g0[-1] * inner.F0)
            g1.append(g1[-1] * inner.F1)
        out_deg = d * inner.degree

        def sub(form: BinaryForm) -> BinaryForm:
            acc = BinaryForm(out_deg)
            for j, c in form.terms:
                acc = acc + (g0[d - j] * g1[j]) * c
            return acc

        return MapLift._trusted(sub(self.F0), sub(self.F1))

    @classmethod
    def _trusted(cls, F0: BinaryForm, F1: BinaryForm) -> "MapLift":
        # composites of nondegenerate lifts are nondegenerate; keep the resultant lazy
        out = object.__new__(cls)
        object.__setattr__(out, "F0", F0)
        object.__setattr__(out, "F1", F1)
        return out

    def __call__(self, x0, x1):
        return self.F0.evaluate(x0, x1), self.F1.evaluate(x0, x1)

    def content_digits(self) -> int:
        return self.F0.content_digits() + self.F1.content_digits()

    def to_string(self) -> str:
        return f"({self.F0.to_string()} ; {self.F1.to_string()})"


def lift_iterate(F: MapLift, n: int, budget: int = DEFAULT_DIGIT_BUDGET) -> MapLift:
    """Exact lift of the ``n``-th iterate, refusing to exceed ``budget`` decimal digits."""
    if n < 1:
        raise RejectedInput("iterate index must be at least 1")
    if F.degree < 1:
        raise RejectedInput("iteration needs a map of degree at least 1")
    G = F
    for k in range(2, n + 1):
        projected = G.content_digits() * F.degree**2
        if projected > budget:
            raise BudgetExceeded(
                f"iterate {k} projected at ~{projected} digits, budget {budget}"
            )
        G = F.compose(G)
        if G.content_digits() > budget:
            raise BudgetExceeded(f"iterate {k} has {G.content_digits()} digits, budget {budget}")
    return G


# ---------------------------------------------------------------------------
# divisors


@dataclass(frozen=True)
class ZerosDivisor:
    """Root divisor of a nonzero binary form, with exact multiplicities."""

    form: BinaryForm
    strata: MultiplicityStrata = field(repr=False)

    @classmethod
    def of(cls, form: BinaryForm) -> "ZerosDivisor":
        if form.is_zero():
            raise RejectedInput("the zero form has no divisor")
        strata = squarefree_strata(form.dehomogenize(), form.infinity_multiplicity)
        return cls(form, strata)

    @property
    def degree(self) -> int:
        return self.form.degree

    @property
    def infinity_multiplicity(self) -> int:
        return self.strata.infinity_multiplicity

    @property
    def diagonal(self) -> int:
        return diagonal(self)

    def has_finite_root(self) -> bool:
        return bool(self.strata.strata)


def diagonal(Z: ZerosDivisor) -> int:
    s = Z.strata
    return sum(m * m * q.degree for q, m in s.strata) + s.infinity_multiplicity**2


def dstar_divisor(Z: ZerosDivisor) -> Fraction:
    """D* over the finite support of ``Z``; an empty product gives 1."""
    return dstar_from_strata(Z.strata)


def divisor_fn_eq_a(F: MapLift, A: MapLift, n: int, budget: int = DEFAULT_DIGIT_BUDGET) -> ZerosDivisor:
    """Divisor ``[f^n = a]`` represented by ``F^n ^ A``."""
    Fn = lift_iterate(F, n, budget)
    P = wedge(Fn.F0, Fn.F1, A.F0, A.F1)
    if P.is_zero():
        raise DegenerateEquation(f"f^{n} coincides with a")
    return ZerosDivisor.of(P)
