"""Exact p-adic potential theory on finite subtrees of the Berkovich line.

A point ``zeta(c, p^k)`` is the closed disk of center ``c`` and diameter
``p^k``; ``k = None`` marks a classical point.  All kernels take values in
``p^Q`` and are returned as exponents, so logarithms are exact rational
multiples of ``log p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .algebra import MapLift, UniPoly, ZerosDivisor, as_fraction
from .errors import RejectedInput, UnsupportedInput
from .places import LogCombination, relevant_places, valuation

Exponent = Fraction | None  # None encodes the value 0 (log = -inf)


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def abs_exponent(x: Fraction, p: int) -> Exponent:
    """``log_p |x|_p``."""
    return None if x == 0 else Fraction(-valuation(x, p))


def _emax(*es: Exponent) -> Exponent:
    vals = [e for e in es if e is not None]
    return max(vals) if vals else None


def _truncate(c: Fraction, p: int, k: Fraction) -> Fraction:
    """Canonical center: p-adic expansion of ``c`` with digits of size ``<= p^k`` dropped."""
    m = _ceil(-k)  # disk = c + p^m Z_p
    if c == 0 or valuation(c, p) >= m:
        return Fraction(0)
    v = valuation(c, p)
    unit = c / Fraction(p) ** v
    mod = p ** (m - v)
    rep = (unit.numerator * pow(unit.denominator, -1, mod)) % mod
    return Fraction(rep) * Fraction(p) ** v


@dataclass(frozen=True)
class SkeletonPoint:
    """Disk ``zeta(center, p^diam_exp)``; ``diam_exp=None`` is a classical point, ``center=None`` is infinity."""

    center: Fraction | None
    diam_exp: Fraction | None
    p: int

    def __post_init__(self) -> None:
        if self.center is None:
            if self.diam_exp is not None:
                raise RejectedInput("infinity is a classical point")
            return
        object.__setattr__(self, "center", as_fraction(self.center))
        if self.diam_exp is not None:
            k = as_fraction(self.diam_exp)
            object.__setattr__(self, "diam_exp", k)
            object.__setattr__(self, "center", _truncate(self.center, self.p, k))

    @classmethod
    def classical(cls, z: Fraction | int | None, p: int) -> "SkeletonPoint":
        return cls(None if z is None else as_fraction(z), None, p)

    @classmethod
    def gauss(cls, p: int) -> "SkeletonPoint":
        return cls(Fraction(0), Fraction(0), p)

    @property
    def is_infinity(self) -> bool:
        return self.center is None

    @property
    def is_classical(self) -> bool:
        return self.diam_exp is None

    @property
    def abs_exp(self) -> Exponent:
        """``log_p |S|`` with ``|S| = max(|center|_p, diam S)``."""
        if self.is_infinity:
            raise RejectedInput("|infinity| is unbounded")
        return _emax(abs_exponent(self.center, self.p), self.diam_exp)

    def contains(self, other: "SkeletonPoint") -> bool:
        """``other`` lies below (or equals) this point in the tree order."""
        if self.is_infinity or other.is_infinity:
            return self == other
        if self.diam_exp is None:
            return other == self
        if other.diam_exp is not None and other.diam_exp > self.diam_exp:
            return False
        d = abs_exponent(self.center - other.center, self.p)
        return d is None or d <= self.diam_exp

    def to_json(self) -> dict:
        return {
            "center": "inf" if self.center is None else str(self.center),
            "diam_exponent": None if self.diam_exp is None else str(self.diam_exp),
            "p": self.p,
        }


def _check_prime(*points: SkeletonPoint) -> int:
    ps = {s.p for s in points}
    if len(ps) != 1:
        raise RejectedInput("points live over different primes")
    return ps.pop()


def join(S: SkeletonPoint, T: SkeletonPoint, p: int | None = None) -> SkeletonPoint:
    """Smallest disk containing both points."""
    p = _check_prime(S, T) if p is None else p
    if S.is_infinity or T.is_infinity:
        raise RejectedInput("join is defined on the affine line only")
    k = _emax(abs_exponent(S.center - T.center, p), S.diam_exp, T.diam_exp)
    return SkeletonPoint(S.center, k, p)


def hsia_affine(S: SkeletonPoint, T: SkeletonPoint) -> Exponent:
    """``log_p |S - T|_inf``: the diameter of the join."""
    return join(S, T).diam_exp


def _pos(e: Exponent) -> Fraction:
    return Fraction(0) if e is None else max(Fraction(0), e)


def _add(*es: Exponent) -> Exponent:
    if any(e is None for e in es):
        return None
    return sum(es, Fraction(0))


def hsia_can(S: SkeletonPoint, T: SkeletonPoint) -> Exponent:
    """``log_p [S, T]_can`` via the normalized affine kernel."""
    _check_prime(S, T)
    if S.is_infinity and T.is_infinity:
        return None
    if S.is_infinity or T.is_infinity:
        other = T if S.is_infinity else S
        return -_pos(other.abs_exp)
    return _add(hsia_affine(S, T), -_pos(S.abs_exp), -_pos(T.abs_exp))


def tree_distance_exp(lower: SkeletonPoint, upper: SkeletonPoint) -> Fraction:
    """``rho / log p`` between two comparable points (``lower`` below ``upper``)."""
    if lower.diam_exp is None:
        raise RejectedInput("classical points are infinitely far away")
    return upper.diam_exp - lower.diam_exp


def rho(S: SkeletonPoint, T: SkeletonPoint) -> Fraction | None:
    """Hyperbolic distance in units of ``log p`` (None when infinite)."""
    if S.is_classical or T.is_classical:
        return None if S != T else Fraction(0)
    J = join(S, T)
    return (J.diam_exp - S.diam_exp) + (J.diam_exp - T.diam_exp)


def gromov_median(S: SkeletonPoint, T: SkeletonPoint) -> SkeletonPoint:
    """Point where the paths from ``S`` and ``T`` to the Gauss point meet."""
    G = SkeletonPoint.gauss(S.p)
    cands = [join(S, T), join(S, G), join(T, G)]
    return min(cands, key=lambda c: (c.diam_exp is not None, c.diam_exp if c.diam_exp is not None else 0))


def hsia_can_gromov(S: SkeletonPoint, T: SkeletonPoint) -> Exponent:
    """``log_p [S, T]_can = -rho(median, Gauss point) / log p`` (infinity via the inversion)."""
    if S.is_infinity and T.is_infinity:
        return None
    if S.is_infinity or T.is_infinity:
        # the path from infinity reaches the Gauss point along zeta(0, r), r >= 1
        other = T if S.is_infinity else S
        M = join(other, SkeletonPoint.gauss(S.p))
    else:
        M = gromov_median(S, T)
    if M.is_classical:
        return None
    d = rho(M, SkeletonPoint.gauss(S.p))
    return -d


def iota(S: SkeletonPoint) -> SkeletonPoint:
    """Image under ``z -> 1/z``."""
    p = S.p
    if S.is_infinity:
        return SkeletonPoint(Fraction(0), None, p)
    if S.is_classical:
        return SkeletonPoint(None, None, p) if S.center == 0 else SkeletonPoint(1 / S.center, None, p)
    a = abs_exponent(S.center, p)
    if a is not None and a > S.diam_exp:
        return SkeletonPoint(1 / S.center, S.diam_exp - 2 * a, p)
    return SkeletonPoint(Fraction(0), -S.diam_exp, p)


def p_value(e: Exponent, p: int) -> float:
    return 0.0 if e is None else float(p) ** float(e)


def small_metric(S: SkeletonPoint, T: SkeletonPoint) -> float:
    """``[S,T] - ([S,S] + [T,T]) / 2``."""
    p = _check_prime(S, T)
    return p_value(hsia_can(S, T), p) - (p_value(hsia_can(S, S), p) + p_value(hsia_can(T, T), p)) / 2


def eps_exponent(eps: Fraction | float | int, p: int, round_down: bool = True) -> tuple[Fraction, bool]:
    """``log_p eps`` when ``eps`` lies on the grid ``p^Z``; otherwise rounded down (flag True)."""
    if isinstance(eps, (Fraction, int)):
        e = as_fraction(eps)
        if e <= 0:
            raise RejectedInput("eps must be positive")
        num, den = e.numerator, e.denominator
        k = 0
        while num % p == 0:
            num //= p
            k += 1
        while den % p == 0:
            den //= p
            k -= 1
        if num == den == 1:
            return Fraction(k), False
        val = math.log(e.numerator) - math.log(e.denominator)
    else:
        if eps <= 0:
            raise RejectedInput("eps must be positive")
        val = math.log(eps)
    if not round_down:
        raise RejectedInput(f"eps={eps} is not a power of {p}")
    return Fraction(math.floor(val / math.log(p) + 1e-12)), True


def pi_eps(S: SkeletonPoint, eps_exp: Fraction) -> SkeletonPoint:
    """Retraction to diameter at least ``p^eps_exp`` (infinity via the inversion)."""
    if S.is_infinity:
        return iota(pi_eps(SkeletonPoint(Fraction(0), None, S.p), eps_exp))
    k = eps_exp if S.diam_exp is None else max(eps_exp, S.diam_exp)
    return SkeletonPoint(S.center, k, S.p)


# ---------------------------------------------------------------------------
# skeletons and tree functions


@dataclass(frozen=True)
class SkeletonTree:
    """Finite tree spanned by given non-classical affine points, their joins and the Gauss point."""

    vertices: tuple[SkeletonPoint, ...]
    parent: Mapping[SkeletonPoint, SkeletonPoint | None]
    p: int

    @classmethod
    def span(cls, points: Iterable[SkeletonPoint], p: int) -> "SkeletonTree":
        base = {SkeletonPoint.gauss(p)}
        for s in points:
            if s.is_infinity or s.is_classical:
                raise RejectedInput("skeleton vertices must be non-classical affine points")
            base.add(s)
        verts = set(base)
        items = list(base)
        for i, a in enumerate(items):
            for b in items[i + 1 :]:
                verts.add(join(a, b))
        ordered = tuple(sorted(verts, key=lambda s: (s.diam_exp, s.center)))
        parent: dict[SkeletonPoint, SkeletonPoint | None] = {}
        for v in ordered:
            above = [w for w in ordered if w != v and w.contains(v)]
            parent[v] = min(above, key=lambda w: w.diam_exp) if above else None
        return cls(ordered, parent, p)

    @property
    def root(self) -> SkeletonPoint:
        return next(v for v in self.vertices if self.parent[v] is None)

    def edges(self) -> list[tuple[SkeletonPoint, SkeletonPoint, Fraction]]:
        """``(child, parent, length / log p)``."""
        return [(v, w, w.diam_exp - v.diam_exp) for v, w in self.parent.items() if w is not None]

    def retract(self, S: SkeletonPoint) -> SkeletonPoint:
        """Closest point of the tree on the path from ``S`` towards infinity."""
        if S.is_infinity:
            return self.root
        best = min((join(S, v) for v in self.vertices), key=lambda j: j.diam_exp)
        top = self.root
        return top if best.diam_exp > top.diam_exp else best

    def to_json(self) -> list[dict]:
        out = []
        for v in self.vertices:
            w = self.parent[v]
            row = v.to_json()
            row["parent"] = None if w is None else self.vertices.index(w)
            row["edge_length_log_p"] = None if w is None else str(w.diam_exp - v.diam_exp)
            out.append(row)
        return out


@dataclass(frozen=True)
class TreeFunction:
    """Edgewise affine function in the hyperbolic length, constant off the tree.

    Values are rational multiples of ``log p`` so that all derived quantities stay exact.
    """

    tree: SkeletonTree
    values: Mapping[SkeletonPoint, Fraction]

    def __call__(self, S: SkeletonPoint) -> Fraction:
        r = self.tree.retract(S)
        if r in self.values:
            return self.values[r]
        below = [v for v in self.tree.vertices if r.contains(v)]
        c = max(below, key=lambda v: v.diam_exp)
        up = self.tree.parent[c]
        t = (r.diam_exp - c.diam_exp) / (up.diam_exp - c.diam_exp)
        return self.values[c] + t * (self.values[up] - self.values[c])

    def scale(self, c: Fraction | int) -> "TreeFunction":
        return TreeFunction(self.tree, {v: c * x for v, x in self.values.items()})

    def slopes(self) -> list[Fraction]:
        return [(self.values[w] - self.values[v]) / length for v, w, length in self.tree.edges()]

    @property
    def lipschitz(self) -> float:
        """Lipschitz bound for the small model metric: ``2 max|slope| max(1/min diam, max diam)`` times ``log p``."""
        sl = [abs(s) for s in self.slopes()]
        if not sl or max(sl) == 0:
            return 0.0
        active = [e for e, s in zip(self.tree.edges(), self.slopes()) if s != 0]
        diams = [float(self.tree.p) ** float(v.diam_exp) for e in active for v in e[:2]]
        return 2 * float(max(sl)) * math.log(self.tree.p) * max(1 / min(diams), max(diams))


def dirichlet_norm(phi: TreeFunction) -> Fraction:
    """``int (phi')^2 d rho`` as a multiple of ``log p``."""
    total = Fraction(0)
    for v, w, length in phi.tree.edges():
        total += (phi.values[w] - phi.values[v]) ** 2 / length
    return total


def c1_log_kernel(w0: Fraction | int, eps_exp: Fraction, p: int) -> TreeFunction:
    """``log[w0, .]_can`` above ``pi_eps(w0)`` and frozen below it (requires ``eps <= 1``)."""
    if eps_exp > 0:
        raise RejectedInput("eps must be at most 1")
    w0 = as_fraction(w0)
    base = pi_eps(SkeletonPoint.classical(w0, p), eps_exp)
    pts = [base]
    a = abs_exponent(w0, p)
    if a is not None and a > 0:
        pts.append(SkeletonPoint(Fraction(0), a, p))
    tree = SkeletonTree.span(pts, p)
    z = SkeletonPoint.classical(w0, p)
    values = {v: hsia_can(z, v) for v in tree.vertices}
    values = {v: (val if v.contains(base) else _frozen_value(tree, v, base, values)) for v, val in values.items()}
    return TreeFunction(tree, values)


def _frozen_value(tree, v, base, values):
    # vertices off the active path take the value at their retraction onto it
    path = [u for u in tree.vertices if u.contains(base)]
    meet = min((u for u in path if u.contains(v)), key=lambda u: u.diam_exp)
    return values[meet]


@dataclass(frozen=True)
class CauchySchwarz:
    integral: Fraction  # int phi d mu, in units of log p
    dirichlet: Fraction  # in units of log p
    energy: Fraction  # int int -log|S-S'| d mu d mu, in units of log p

    @property
    def lhs_sq(self) -> Fraction:
        return self.integral**2

    @property
    def rhs(self) -> Fraction:
        return self.dirichlet * self.energy

    @property
    def holds(self) -> bool:
        return self.lhs_sq <= self.rhs


def measure_energy(mu: Mapping[SkeletonPoint, Fraction]) -> Fraction:
    """``int int -log|S - S'|_inf d mu d mu`` over a discrete measure on non-classical points."""
    pts = list(mu.items())
    total = Fraction(0)
    for a, ma in pts:
        for b, mb in pts:
            total -= ma * mb * join(a, b).diam_exp
    return total


def measure_energy_edges(tree: SkeletonTree, mu: Mapping[SkeletonPoint, Fraction]) -> Fraction:
    """Same energy for a mass-zero measure on tree vertices, as ``sum_e length * (mass below e)^2``."""
    total = Fraction(0)
    for v, w, length in tree.edges():
        below = sum((m for s, m in mu.items() if v.contains(s)), Fraction(0))
        total += length * below**2
    return total


def cauchy_schwarz_check(phi: TreeFunction, mu: Mapping[SkeletonPoint, Fraction]) -> CauchySchwarz:
    if sum(mu.values(), Fraction(0)) != 0:
        raise RejectedInput("the measure must have total mass zero")
    for s in mu:
        if s.is_classical or s.is_infinity:
            raise RejectedInput("measure must sit on non-classical points")
    integral = sum((m * phi(s) for s, m in mu.items()), Fraction(0))
    return CauchySchwarz(integral, dirichlet_norm(phi), measure_energy(mu))


# ---------------------------------------------------------------------------
# rational roots and Fekete sums at a finite place


def rational_roots(q: UniPoly) -> list[Fraction]:
    """All roots of a squarefree polynomial if they are rational, else raise."""
    import numpy as np

    if q.degree <= 0:
        return []
    if q.degree == 1:
        return [-q.coeffs[0] / q.coeffs[1]]
    den = 1
    for c in q.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in q.coeffs]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    ints = [c // g for c in ints]
    lead = abs(ints[-1])
    out: list[Fraction] = []
    rest = UniPoly(tuple(Fraction(c) for c in ints))
    if ints[0] == 0:
        out.append(Fraction(0))
        rest = rest.exact_div(UniPoly.z())
    if rest.degree > 0:
        numeric = np.roots([float(c) for c in reversed(rest.coeffs)])
        for r in numeric:
            if abs(r.imag) > 1e-6 * max(1.0, abs(r)):
                raise UnsupportedInput("divisor has non-rational roots at this place")
            cand = Fraction(float(r.real)).limit_denominator(max(lead, 1))
            if rest(cand) != 0:
                raise UnsupportedInput("divisor has non-rational roots at this place")
            out.append(cand)
    if len(set(out)) != q.degree:
        raise UnsupportedInput("could not recover all rational roots")
    return out


def rational_support(Z: ZerosDivisor) -> list[tuple[Fraction | None, int]]:
    """``(root, multiplicity)`` pairs with ``None`` for infinity."""
    out: list[tuple[Fraction | None, int]] = []
    for q, m in Z.strata.strata:
        out.extend((r, m) for r in rational_roots(q))
    if Z.infinity_multiplicity:
        out.append((None, Z.infinity_multiplicity))
    return out


def chordal_exponent(z: Fraction | None, w: Fraction | None, p: int) -> Exponent:
    return hsia_can(SkeletonPoint.classical(z, p), SkeletonPoint.classical(w, p))


def fekete_sum_p(Z: ZerosDivisor, p: int, weight=None) -> LogCombination | float:
    """p-adic Fekete sum; exact for the zero weight, float for a callable weight on rational points."""
    support = rational_support(Z)
    deg = Z.degree
    total = Fraction(0)
    for i, (z, m) in enumerate(support):
        for j, (w, n) in enumerate(support):
            if i != j:
                total += m * n * chordal_exponent(z, w, p)
    if weight is None:
        return LogCombination.of({p: total})
    g_sum = sum(m * (deg - m) * weight(z) for z, m in support)
    return float(total) * math.log(p) - 2 * g_sum


# ---------------------------------------------------------------------------
# Green functions at a finite place


def _integral_scale(F: MapLift, p: int) -> int:
    """``a`` with ``p^a F`` p-integral and primitive."""
    coeffs = [c for _, c in F.F0.terms] + [c for _, c in F.F1.terms]
    return min(valuation(c, p) for c in coeffs) * -1


def sup_t_bound_p(F: MapLift, p: int) -> Fraction:
    """``sup |T_F|`` in units of ``log p`` from the Gauss norm and the resultant."""
    d = F.degree
    norm = Fraction(_integral_scale(F, p))  # log_p ||F||
    res = Fraction(-valuation(F.resultant, p))
    return max(abs(norm), abs(res - (2 * d - 2) * norm))


@dataclass(frozen=True)
class PadicGreen:
    value: Fraction  # units of log p
    bound: Fraction  # units of log p
    method: str


def _mod_eval(coeffs: Sequence[tuple[int, int]], d: int, x0: int, x1: int, mod: int) -> int:
    acc = 0
    for j, c in coeffs:
        acc = (acc + c * pow(x0, d - j, mod) * pow(x1, j, mod)) % mod
    return acc


def _vp_int(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def green_escape_p(F: MapLift, point: tuple[Fraction, Fraction], p: int, n: int = 60, precision: int = 64) -> PadicGreen:
    """``T_{F^n}(x) / d^n`` at a rational point, exactly in units of ``log p``, with the tail bound."""
    d = F.degree
    x0, x1 = (as_fraction(t) for t in point)
    den = x0.denominator * x1.denominator // math.gcd(x0.denominator, x1.denominator)
    a0, a1 = int(x0 * den), int(x1 * den)
    g = math.gcd(a0, a1)
    a0, a1 = a0 // g, a1 // g
    bound = sup_t_bound_p(F, p) / (Fraction(d) ** n * (d - 1))
    if p not in relevant_places([F]).finite_primes:
        return PadicGreen(Fraction(0), Fraction(0), "good-reduction-zero")
    a = _integral_scale(F, p)
    scale = Fraction(p) ** a
    c0 = [(j, c * scale) for j, c in F.F0.terms]
    c1 = [(j, c * scale) for j, c in F.F1.terms]
    while True:
        mod = p**precision
        ic0 = [(j, c.numerator * pow(c.denominator, -1, mod) % mod) for j, c in c0]
        ic1 = [(j, c.numerator * pow(c.denominator, -1, mod) % mod) for j, c in c1]
        y0, y1 = a0 % mod, a1 % mod
        prec = precision
        total = Fraction(0)
        ok = True
        for k in range(n):
            m = p**prec
            z0 = _mod_eval(ic0, d, y0, y1, m)
            z1 = _mod_eval(ic1, d, y0, y1, m)
            v = min(_vp_int(z0, p, prec), _vp_int(z1, p, prec))
            if v >= prec:
                ok = False
                break
            total += Fraction(a - v, d ** (k + 1))
            prec -= v
            y0, y1 = (z0 // p**v) % p**prec, (z1 // p**v) % p**prec
        if ok:
            return PadicGreen(total, bound, "valuation-recurrence")
        precision *= 2


def gauss_point_green(F: MapLift, p: int, depth: int = 8, budget: int = 10**6) -> PadicGreen:
    """``g_F`` at the Gauss point from Gauss norms of exact iterates ``log||F^n|| / d^n``."""
    from .algebra import lift_iterate

    d = F.degree
    G = lift_iterate(F, depth, budget)
    val = Fraction(_integral_scale(G, p), d**depth)
    bound = sup_t_bound_p(F, p) / (Fraction(d) ** depth * (d - 1))
    return PadicGreen(val, bound, "gauss-norm-iterate")


def gauss_norm_of_map(F: MapLift, p: int) -> Fraction:
    """``log_p ||F||`` (max over both components)."""
    return Fraction(_integral_scale(F, p))


def has_good_reduction(F: MapLift, p: int) -> bool:
    scale = Fraction(p) ** _integral_scale(F, p)
    res = F.resultant * scale ** (2 * F.degree)
    return valuation(res, p) == 0
