"""Global heights: per-place Mahler measures and Green values assembled over all places of Q."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import archimedean as arch
from .algebra import MapLift, ZerosDivisor, divisor_fn_eq_a, dstar_divisor
from .errors import RejectedInput, UnsupportedInput
from .grammar import coprime_integer_coordinates
from .nonarch import (
    chordal_exponent,
    fekete_sum_p,
    gauss_norm_of_map,
    green_escape_p,
    has_good_reduction,
    rational_support,
)
from .places import INFINITY, Place, PlaceSet, gauss_norm_exponent, log_abs, relevant_places, valuation

FiniteWeight = Callable[[Fraction | None], float]


@dataclass(frozen=True)
class AdelicWeight:
    """A weight at every place; zero outside ``support``.

    ``kind`` is ``"trivial"``, ``"dynamical"`` (normalized Green weight of ``lift``) or ``"explicit"``.
    """

    kind: str
    support: PlaceSet
    lift: MapLift | None = None
    table: Mapping[Place, object] = field(default_factory=dict)

    @classmethod
    def trivial(cls) -> "AdelicWeight":
        return cls("trivial", PlaceSet((), False))

    @classmethod
    def dynamical(cls, F: MapLift) -> "AdelicWeight":
        if F.degree < 2:
            raise RejectedInput("dynamical weights need degree at least 2")
        return cls("dynamical", relevant_places([F]), F)

    @classmethod
    def explicit(cls, table: Mapping[Place, object]) -> "AdelicWeight":
        """``table[INFINITY]`` is a ``WeightFn``; finite entries are callables on rational points (``None`` = infinity)."""
        primes = tuple(sorted(v.prime for v in table if not v.is_infinite))
        return cls("explicit", PlaceSet(primes, INFINITY in table), None, dict(table))

    def archimedean(self) -> arch.WeightFn:
        if self.kind == "dynamical":
            return _green_weight(self.lift)
        if self.kind == "explicit" and INFINITY in self.table:
            return self.table[INFINITY]
        return arch.ZeroWeight()

    def vanishes_at(self, p: int) -> bool:
        """True when the weight is identically zero at ``p``."""
        if Place(p) not in self.support:
            return True
        return self.kind == "dynamical" and has_good_reduction(self.lift, p)

    def finite_value(self, p: int, z: Fraction | None) -> tuple[float, float]:
        """``g_p(z)`` at a rational point, with an error bound."""
        if self.vanishes_at(p):
            return 0.0, 0.0
        if self.kind == "explicit":
            return float(self.table[Place(p)](z)), 0.0
        F = self.lift
        d = F.degree
        pt = (Fraction(0), Fraction(1)) if z is None else (Fraction(1), z)
        res = green_escape_p(F, pt, p)
        shift = Fraction(valuation(F.resultant, p), d * (d - 1)) / 2
        lp = math.log(p)
        return float(res.value + shift) * lp, float(res.bound) * lp


_GREEN_CACHE: dict[tuple[MapLift, bool], arch.GreenWeight] = {}


def _green_weight(F: MapLift, normalized: bool = True) -> arch.GreenWeight:
    key = (F, normalized)
    if key not in _GREEN_CACHE:
        _GREEN_CACHE[key] = arch.GreenWeight(F, normalized=normalized)
    return _GREEN_CACHE[key]


@dataclass(frozen=True)
class PlaceRow:
    place: Place
    value: float
    error: float
    method: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error", float(self.error))


@dataclass(frozen=True)
class HeightReport:
    rows: tuple[PlaceRow, ...]
    note: str = "places not listed contribute exactly 0"

    @property
    def total(self) -> float:
        return math.fsum(r.value for r in self.rows)

    @property
    def total_error(self) -> float:
        return math.fsum(r.error for r in self.rows)

    def row(self, v: Place) -> PlaceRow | None:
        return next((r for r in self.rows if r.place == v), None)

    def to_json(self) -> dict:
        return {
            "rows": [{"place": str(r.place), "value": r.value, "error": r.error, "method": r.method} for r in self.rows],
            "total": self.total,
            "total_error": self.total_error,
            "note": self.note,
        }


def _height_places(Z: ZerosDivisor, g: AdelicWeight) -> PlaceSet:
    return relevant_places([Z.form]).union(PlaceSet(g.support.finite_primes, True))


def height_g(Z: ZerosDivisor, g: AdelicWeight, cloud: arch.RootCloud | None = None) -> HeightReport:
    """``h_g(Z) = sum_v M_{g_v}(P) / deg P`` with per-place methods and error bounds.

    ``cloud`` may supply pre-polished archimedean roots of ``Z``.
    """
    deg = Z.degree
    if deg == 0:
        raise RejectedInput("height of the empty divisor")
    rows: list[PlaceRow] = []
    places = _height_places(Z, g)
    bad = [p for p in places.finite_primes if not g.vanishes_at(p)]
    support = None
    if bad:
        try:
            support = rational_support(Z)
        except UnsupportedInput:
            raise UnsupportedInput(
                f"weight is nonzero at finite places {bad} and the divisor has non-rational roots"
            ) from None
    val, err = arch.mahler_g(Z.form, g.archimedean(), cloud=cloud)
    rows.append(PlaceRow(INFINITY, val / deg, err / deg, "numeric"))
    for p in places.finite_primes:
        ms = float(gauss_norm_exponent(Z.form, p)) * math.log(p)
        if p not in bad:
            rows.append(PlaceRow(Place(p), ms / deg, 0.0, "exact"))
            continue
        corr, cerr = 0.0, 0.0
        for z, m in support:
            v, e = g.finite_value(p, z)
            corr += m * v
            cerr += m * e
        rows.append(PlaceRow(Place(p), (ms + corr) / deg, cerr / deg, "exact+green"))
    return HeightReport(tuple(rows))


# ---------------------------------------------------------------------------
# canonical heights of rational points


def canonical_height_point(F: MapLift, point: tuple[Fraction, Fraction]) -> HeightReport:
    """Sum of local escape rates at coprime integer coordinates over the relevant places of ``F``."""
    if F.degree < 2 or F.resultant == 0:
        raise RejectedInput("canonical heights need a degree >= 2 lift with nonzero resultant")
    a0, a1 = coprime_integer_coordinates(Fraction(point[0]), Fraction(point[1]))
    rows: list[PlaceRow] = []
    G = _green_weight(F, normalized=False)
    big = max(abs(a0), abs(a1))
    r0 = a0 / big if abs(a0).bit_length() < 1000 else float(Fraction(a0, big))
    r1 = a1 / big if abs(a1).bit_length() < 1000 else float(Fraction(a1, big))
    gval = float(G(np.array([r0 + 0j]), np.array([r1 + 0j]))[0])
    lognorm = log_abs(big, INFINITY) + 0.5 * math.log(r0 * r0 + r1 * r1)
    rows.append(PlaceRow(INFINITY, gval + lognorm, G.error + 1e-15 * (1 + abs(lognorm)), "numeric"))
    for p in relevant_places([F]).finite_primes:
        res = green_escape_p(F, (Fraction(a0), Fraction(a1)), p)
        lp = math.log(p)
        rows.append(PlaceRow(Place(p), float(res.value) * lp, float(res.bound) * lp, res.method))
    return HeightReport(tuple(rows), "good-reduction places contribute exactly 0")


def apply_map(F: MapLift, point: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    y0, y1 = F(Fraction(point[0]), Fraction(point[1]))
    if y0 == 0 and y1 == 0:
        raise RejectedInput("lift vanishes at the point")
    return y0, y1


# ---------------------------------------------------------------------------
# global Fekete identity


@dataclass(frozen=True)
class GlobalFekete:
    lhs: float
    rhs: float
    error: float
    places: tuple[str, ...]

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "gap": self.gap, "error": self.error, "places": list(self.places)}


def global_fekete_identity(Z: ZerosDivisor, g: AdelicWeight) -> GlobalFekete:
    """Sum over places of Fekete sums plus infinity corrections, against ``-2 deg^2 h_g`` plus weight terms."""
    deg = Z.degree
    places = _height_places(Z, g).union(PlaceSet(tuple(sorted(relevant_places([dstar_divisor(Z)]).finite_primes)), True))
    support = rational_support(Z) if places.finite_primes else []
    # archimedean place
    cloud = arch.roots_from_strata(Z.strata)
    garch = g.archimedean()
    x0, x1, mult = cloud.homogeneous()
    gv = garch(x0, x1)
    lhs = arch.fekete_sum(cloud, garch)
    lhs += 2 * float(np.sum(cloud.multiplicity.astype(float) ** 2 * arch.log_chordal_to_infinity(cloud.finite)))
    weight_terms = 2 * float(np.sum(mult**2 * gv))
    lhs_terms = [lhs]
    w_terms = [weight_terms]
    err = 0.0
    for p in places.finite_primes:
        fek = fekete_sum_p(Z, p)
        inf_terms = sum(
            (m * m * chordal_exponent(z, None, p) for z, m in support if z is not None), Fraction(0)
        )
        local = float(fek) + 2 * float(inf_terms) * math.log(p)
        gsum = 0.0
        if not g.vanishes_at(p):
            vals = {z: g.finite_value(p, z) for z, _ in support}
            for i, (z, m) in enumerate(support):
                for j, (w, n) in enumerate(support):
                    if i != j:
                        local -= m * n * (vals[z][0] + vals[w][0])
            gsum = 2 * sum(m * m * vals[z][0] for z, m in support)
            err += sum(m * deg * vals[z][1] for z, m in support) * 2
        lhs_terms.append(local)
        w_terms.append(gsum)
    h = height_g(Z, g)
    rhs = -2 * deg * deg * h.total + math.fsum(w_terms)
    err += 2 * deg * deg * h.total_error
    return GlobalFekete(math.fsum(lhs_terms), rhs, err, tuple(places.labels()))


# ---------------------------------------------------------------------------
# smallness of heights of [f^n = a]


def _normalized_t_iterate(F: MapLift, x0: np.ndarray, x1: np.ndarray, n: int) -> np.ndarray:
    """``T_{F^n}`` by telescoping along the normalized orbit."""
    d = F.degree
    total = np.zeros(x0.shape)
    for k in range(n):
        total += float(d) ** (n - 1 - k) * arch.t_function(F, x0, x1)
        y0, y1 = arch.eval_map(F, x0, x1)
        m = np.maximum(np.abs(y0), np.abs(y1))
        x0, x1 = y0 / m, y1 / m
    return total


def _t_constant_or_map(A: MapLift, x0, x1) -> np.ndarray:
    if A.degree == 0:
        c0 = A.F0.coeff(0, 0)
        c1 = A.F1.coeff(0, 0)
        return np.full(np.shape(x0), 0.5 * math.log(float(c0) ** 2 + float(c1) ** 2))
    return arch.t_function(A, x0, x1)


@dataclass(frozen=True)
class SmallnessRow:
    n: int
    degree: int
    bound: float
    bound_error: float
    scaled_bound: float
    height: float | None
    height_error: float | None


def heights_smallness_scan(
    F: MapLift, A: MapLift, n_range: Sequence[int], samples: int = 4096, seed: int = 0, height_max_degree: int = 1100
) -> list[SmallnessRow]:
    """Upper bound for ``h([f^n = a])`` by integrating ``(T_{F^n} + T_A)/(d^n + deg a) - g_F`` against ``mu_f``."""
    d = F.degree
    da = A.degree
    xs0, xs1 = arch.equilibrium_sample(F, samples, seed)
    G = _green_weight(F, normalized=False)
    gF = G(xs0, xs1)
    tA = _t_constant_or_map(A, xs0, xs1)
    places = relevant_places([F, A]).finite_primes
    for p in places:
        if not has_good_reduction(F, p):
            raise UnsupportedInput(f"f has bad reduction at {p}; its p-adic equilibrium measure is not a point mass")
    rows: list[SmallnessRow] = []
    for n in n_range:
        deg = d**n + da
        vals = (_normalized_t_iterate(F, xs0, xs1, n) + tA) / deg - gF
        bound = float(np.mean(vals))
        berr = 3 * float(np.std(vals, ddof=1)) / math.sqrt(len(vals)) + G.error
        for p in places:
            # good reduction: the Gauss point is totally invariant and carries mu_{f,p}
            nf = float(gauss_norm_of_map(F, p))
            na = float(gauss_norm_of_map(A, p))
            tfn = nf * (d**n - 1) / (d - 1)
            bound += ((tfn + na) / deg - nf / (d - 1)) * math.log(p)
        h = herr = None
        if deg <= height_max_degree:
            Z = divisor_fn_eq_a(F, A, n)
            rep = height_g(Z, AdelicWeight.dynamical(F), arch.roots_dynamical(F, A, n, Z))
            h, herr = rep.total, rep.total_error
        rows.append(SmallnessRow(n, deg, bound, berr, bound * deg, h, herr))
    return rows
