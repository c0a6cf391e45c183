"""Potential theory on the complex projective line.

Points are handled as homogeneous complex pairs ``(x0, x1)`` with
``z = x1 / x0``; arrays of points are pairs of equally shaped numpy arrays.
The chordal kernel is ``[x, y] = |x0 y1 - x1 y0| / (|x| |y|)`` with Euclidean
norms, and every weight is a function on such pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np

from .algebra import BinaryForm, MapLift, MultiplicityStrata, UniPoly, ZerosDivisor, dstar_divisor
from .errors import NumericalFailure, RejectedInput
from .places import log_abs, INFINITY

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class ComplexPoint:
    """Projective point normalized so that ``max(|x0|, |x1|) = 1``."""

    x0: complex
    x1: complex

    def __post_init__(self) -> None:
        s = max(abs(self.x0), abs(self.x1))
        if s == 0 or not math.isfinite(s):
            raise RejectedInput("invalid homogeneous coordinates")
        object.__setattr__(self, "x0", complex(self.x0) / s)
        object.__setattr__(self, "x1", complex(self.x1) / s)

    @classmethod
    def affine(cls, z: complex) -> "ComplexPoint":
        return cls(1.0, complex(z))

    @classmethod
    def infinity(cls) -> "ComplexPoint":
        return cls(0.0, 1.0)

    @property
    def is_infinity(self) -> bool:
        return self.x0 == 0

    @property
    def z(self) -> complex:
        return complex("inf") if self.x0 == 0 else self.x1 / self.x0


def homog(z) -> tuple[np.ndarray, np.ndarray]:
    """Affine values (``inf`` allowed) to max-normalized homogeneous arrays."""
    z = np.asarray(z, dtype=complex)
    inf = ~np.isfinite(z)
    big = np.abs(z) > 1
    zz = np.where(inf, 0, z)
    x0 = np.where(big, 1 / np.where(big, zz, 1), 1.0 + 0j)
    x1 = np.where(big, 1.0 + 0j, zz)
    x0 = np.where(inf, 0j, x0)
    x1 = np.where(inf, 1.0 + 0j, x1)
    return x0, x1


def affine(x0: np.ndarray, x1: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x0 == 0, complex("inf"), x1 / np.where(x0 == 0, 1, x0))


def _norm(x0, x1):
    return np.sqrt(np.abs(x0) ** 2 + np.abs(x1) ** 2)


def chordal_arrays(a0, a1, b0, b1) -> np.ndarray:
    return np.abs(a0 * b1 - a1 * b0) / (_norm(a0, a1) * _norm(b0, b1))


def chordal(z: ComplexPoint, w: ComplexPoint) -> float:
    return float(chordal_arrays(z.x0, z.x1, w.x0, w.x1))


def log_chordal_to_infinity(z: np.ndarray) -> np.ndarray:
    """``log[z, inf] = -1/2 log(1 + |z|^2)`` for finite ``z``."""
    return -0.5 * np.log1p(np.abs(z) ** 2)


# ---------------------------------------------------------------------------
# roots


@dataclass(frozen=True)
class RootCloud:
    """Distinct roots with exact multiplicities; ``inf_mult`` counts the root at infinity."""

    finite: np.ndarray
    multiplicity: np.ndarray
    inf_mult: int
    residual_bound: float
    forward_error: np.ndarray

    @property
    def degree(self) -> int:
        return int(self.multiplicity.sum()) + self.inf_mult

    def points(self) -> list[tuple[ComplexPoint, int]]:
        out = [(ComplexPoint.affine(z), int(m)) for z, m in zip(self.finite, self.multiplicity)]
        if self.inf_mult:
            out.append((ComplexPoint.infinity(), self.inf_mult))
        return out

    def homogeneous(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Homogeneous coordinates of the support (infinity last) and multiplicities."""
        x0, x1 = homog(self.finite)
        mult = self.multiplicity.astype(float)
        if self.inf_mult:
            x0 = np.append(x0, 0j)
            x1 = np.append(x1, 1 + 0j)
            mult = np.append(mult, float(self.inf_mult))
        return x0, x1, mult


def _scaled_floats(coeffs: Sequence[Fraction]) -> np.ndarray:
    """Coefficients as floats after a common power-of-two rescaling."""
    nz = [c for c in coeffs if c]
    top = max(abs(c.numerator).bit_length() - c.denominator.bit_length() for c in nz)
    shift = max(top - 500, 0) if top > 900 else 0
    scale = Fraction(2) ** shift
    return np.array([float(c / scale) for c in coeffs], dtype=float)


def _horner(coeffs_high_first: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in coeffs_high_first:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _aberth(c_high: np.ndarray, z: np.ndarray, iters: int = 100) -> np.ndarray:
    n = len(z)
    if n <= 1:
        return z
    for _ in range(iters):
        p, dp = _horner(c_high, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            step = ratio / (1 - ratio * s)
        step = np.where(np.isfinite(step), step, 0)
        z = z - step
        if np.all(np.abs(step) <= 4 * EPS * np.maximum(np.abs(z), 1e-300)):
            break
    return z


def _backward_error(c_high: np.ndarray, z: np.ndarray) -> np.ndarray:
    p, _ = _horner(c_high, z)
    scale, _ = _horner(np.abs(c_high), np.abs(z))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(scale > 0, np.abs(p) / scale, 0.0)


def _stratum_roots(q: UniPoly) -> tuple[np.ndarray, np.ndarray, float]:
    """Roots of a monic squarefree rational polynomial, forward errors, backward error."""
    coeffs = list(q.coeffs)
    roots: list[complex] = []
    ferr: list[float] = []
    if coeffs[0] == 0:
        roots.append(0j)
        ferr.append(0.0)
        coeffs = coeffs[1:]
    deg = len(coeffs) - 1
    if deg == 0:
        return np.array(roots, complex), np.array(ferr), 0.0
    if deg == 1:
        r = -coeffs[0] / coeffs[1]
        roots.append(complex(float(r)))
        ferr.append(EPS * abs(float(r)))
        return np.array(roots, complex), np.array(ferr), EPS
    middle = [c for c in coeffs[1:-1] if c]
    if not middle:
        # binomial c_M z^M + c_0: closed form
        ratio = -coeffs[0] / coeffs[-1]
        mod = math.exp((math.log(abs(ratio.numerator)) - math.log(ratio.denominator)) / deg)
        arg0 = 0.0 if ratio > 0 else math.pi
        k = np.arange(deg)
        rs = mod * np.exp(1j * (arg0 + 2 * np.pi * k) / deg)
        roots.extend(rs.tolist())
        ferr.extend((8 * EPS * mod * np.ones(deg)).tolist())
        return np.array(roots, complex), np.array(ferr), 8 * EPS * deg
    c_high = _scaled_floats(coeffs)[::-1].astype(complex)
    seeds = np.roots(c_high)
    with np.errstate(over="ignore", invalid="ignore"):
        z = _aberth(c_high, seeds.astype(complex))
        back = _backward_error(c_high, z)
        p, dp = _horner(c_high, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        newton = np.where(dp != 0, np.abs(p / dp), np.inf)
    fe = 2 * newton + 4 * EPS * np.abs(z)
    roots.extend(z.tolist())
    ferr.extend(fe.tolist())
    return np.array(roots, complex), np.array(ferr), float(back.max(initial=0.0))


def roots_from_strata(strata: MultiplicityStrata, tol: float = 1e-9) -> RootCloud:
    zs, ms, fe = [], [], []
    back = 0.0
    for q, m in strata.strata:
        r, e, b = _stratum_roots(q)
        zs.append(r)
        fe.append(e)
        ms.append(np.full(len(r), m, dtype=np.int64))
        back = max(back, b)
    if back > tol:
        raise NumericalFailure(f"root solve residual {back:.3g} exceeds tolerance {tol:.3g}", back)
    cat = lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dt)
    return RootCloud(cat(zs, complex), cat(ms, np.int64), strata.infinity_multiplicity, back, cat(fe, float))


def roots_complex(P: BinaryForm | ZerosDivisor, tol: float = 1e-9) -> RootCloud:
    Z = P if isinstance(P, ZerosDivisor) else ZerosDivisor.of(P)
    return roots_from_strata(Z.strata, tol)


def _form_and_partials(js, cs, d, x0, x1):
    val = np.zeros(np.shape(x0), complex)
    d0 = np.zeros_like(val)
    d1 = np.zeros_like(val)
    for j, c in zip(js, cs):
        i = d - j
        val += c * x0**i * x1**j
        if i:
            d0 += c * i * x0 ** (i - 1) * x1**j
        if j:
            d1 += c * j * x0**i * x1 ** (j - 1)
    return val, d0, d1


def _orbit_newton_step(F: MapLift, A: MapLift, n: int, z: np.ndarray) -> np.ndarray:
    """Newton step for ``F^n_0 A_1 - F^n_1 A_0`` on the chart ``(1, z)``, evaluated along the orbit."""
    x0 = np.ones_like(z)
    x1 = z.copy()
    dx0 = np.zeros_like(z)
    dx1 = np.ones_like(z)
    f0 = _form_arrays(F.F0)
    f1 = _form_arrays(F.F1)
    d = F.degree
    for _ in range(n):
        y0, a0, b0 = _form_and_partials(*f0, d, x0, x1)
        y1, a1, b1 = _form_and_partials(*f1, d, x0, x1)
        dy0 = a0 * dx0 + b0 * dx1
        dy1 = a1 * dx0 + b1 * dx1
        s = np.maximum(np.abs(y0), np.abs(y1))
        s = np.where(s > 0, s, 1.0)
        x0, x1, dx0, dx1 = y0 / s, y1 / s, dy0 / s, dy1 / s
    e = A.degree
    if e == 0:
        c0 = complex(float(A.F0.coeff(0, 0)))
        c1 = complex(float(A.F1.coeff(0, 0)))
        w = x0 * c1 - x1 * c0
        dw = dx0 * c1 - dx1 * c0
    else:
        one, zz = np.ones_like(z), z
        u0, p0, q0 = _form_and_partials(*_form_arrays(A.F0), e, one, zz)
        u1, p1, q1 = _form_and_partials(*_form_arrays(A.F1), e, one, zz)
        w = x0 * u1 - x1 * u0
        dw = dx0 * u1 + x0 * q1 - dx1 * u0 - x1 * q0
    with np.errstate(divide="ignore", invalid="ignore"):
        step = w / dw
    return np.where(np.isfinite(step), step, 0)


def polish_dynamical(cloud: RootCloud, F: MapLift, A: MapLift, n: int, iters: int = 200) -> RootCloud:
    """Refine the roots of ``[f^n = a]`` with Newton ratios evaluated along orbits.

    Coefficient expansions of iterates are badly conditioned; evaluating through the
    iteration is not.  With only simple finite roots an Aberth sweep keeps the
    approximations apart; otherwise only the simple roots get Newton steps, and the
    unpolished cloud is kept if two of them collapse.
    """
    z = cloud.finite.copy()
    simple = cloud.multiplicity == 1
    if not np.any(simple):
        return cloud
    if np.all(simple):
        for _ in range(iters):
            ratio = _orbit_newton_step(F, A, n, z)
            with np.errstate(divide="ignore", invalid="ignore"):
                diff = z[:, None] - z[None, :]
                np.fill_diagonal(diff, 1.0)
                inv = 1.0 / diff
                np.fill_diagonal(inv, 0.0)
                step = ratio / (1 - ratio * inv.sum(axis=1))
            step = np.where(np.isfinite(step), step, 0)
            z = z - step
            if np.all(np.abs(step) <= 4 * EPS * np.maximum(np.abs(z), 1.0)):
                break
    else:
        zs = z[simple]
        for _ in range(8):
            zs = zs - _orbit_newton_step(F, A, n, zs)
        z[simple] = zs
    step = _orbit_newton_step(F, A, n, z[simple])
    if len(np.unique(np.round(z[simple], 9))) < int(simple.sum()):
        return cloud
    fe = cloud.forward_error.copy()
    fe[simple] = 2 * np.abs(step) + 4 * EPS * np.abs(z[simple])
    return RootCloud(z, cloud.multiplicity, cloud.inf_mult, cloud.residual_bound, fe)


def roots_dynamical(F: MapLift, A: MapLift, n: int, Z: ZerosDivisor | None = None) -> RootCloud:
    """Root cloud of ``[f^n = a]`` with orbit polishing."""
    from .algebra import divisor_fn_eq_a

    Z = Z or divisor_fn_eq_a(F, A, n)
    st = Z.strata
    simple = st.infinity_multiplicity == 0 and all(m == 1 for _, m in st.strata)
    seeds = _backward_seeds(F, A, n) if simple and st.finite_degree == F.degree**n else None
    if seeds is not None:
        k = len(seeds)
        cloud = RootCloud(seeds, np.ones(k, dtype=int), 0, math.inf, np.full(k, math.inf))
    else:
        cloud = roots_from_strata(st, tol=math.inf)
    return polish_dynamical(cloud, F, A, n)


def _backward_seeds(F: MapLift, A: MapLift, n: int) -> np.ndarray | None:
    """For a constant target, the backward tree of ``a`` seeds the roots far better than companion eigenvalues."""
    if A.degree != 0:
        return None
    w0 = np.array([complex(float(A.F0.coeff(0, 0)))])
    w1 = np.array([complex(float(A.F1.coeff(0, 0)))])
    for _ in range(n):
        p0, p1 = preimages(F, w0, w1)
        w0, w1 = p0.ravel(), p1.ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        z = w1 / w0
    if not np.all(np.isfinite(z)):
        return None
    return z


# ---------------------------------------------------------------------------
# weights


class WeightFn:
    """A continuous weight on the Riemann sphere evaluated on homogeneous arrays."""

    name = "weight"
    error = 0.0  # uniform evaluation error bound

    def __call__(self, x0: np.ndarray, x1: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def at(self, z) -> np.ndarray:
        return self(*homog(z))

    @cached_property
    def holder(self) -> tuple[float, float]:
        """Empirical ``(exponent, constant)`` in the chordal metric (sampled, not certified)."""
        return estimate_holder(self)


class ZeroWeight(WeightFn):
    name = "zero"

    def __call__(self, x0, x1):
        return np.zeros(np.broadcast(x0, x1).shape)

    @cached_property
    def holder(self) -> tuple[float, float]:
        return 1.0, 0.0


class SquaringWeight(WeightFn):
    """Closed-form escape-rate weight of ``z -> z^2``: ``log max(1,|z|) - 1/2 log(1+|z|^2)``."""

    name = "closed-form z^2"

    def __call__(self, x0, x1):
        a, b = np.abs(x0), np.abs(x1)
        return np.log(np.maximum(a, b)) - 0.5 * np.log(a * a + b * b)


class CallableWeight(WeightFn):
    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray], name: str = "custom", error: float = 0.0):
        self.fn, self.name, self.error = fn, name, error

    def __call__(self, x0, x1):
        return self.fn(x0, x1)


def fibonacci_sphere(count: int) -> tuple[np.ndarray, np.ndarray]:
    """Quasi-uniform points on the Riemann sphere as homogeneous pairs."""
    k = np.arange(count) + 0.5
    h = 1 - 2 * k / count  # height on the unit sphere
    phi = k * math.pi * (3 - math.sqrt(5))
    # stereographic: z = (x + i y) / (1 - h) with x+iy = sqrt(1-h^2) e^{i phi}
    rho = np.sqrt(np.clip(1 - h * h, 0, None))
    w = rho * np.exp(1j * phi)
    top = h > 0
    # z = w / (1 - h) = (1 + h) / conj(w)
    x0 = np.where(top, w.conj(), (1 - h) + 0j)
    x1 = np.where(top, (1 + h) + 0j, w)
    s = np.maximum(np.abs(x0), np.abs(x1))
    return x0 / s, x1 / s


def estimate_holder(g: WeightFn, count: int = 2000, seed: int = 7) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    x0, x1 = fibonacci_sphere(count)
    z = affine(x0, x1)
    z = np.where(np.isfinite(z), z, 1e6)
    base = g(*homog(z))
    scales = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    worst = []
    for d in scales:
        # chordal displacement d at z corresponds to |dz| = d (1+|z|^2)
        dz = d * (1 + np.abs(z) ** 2) * np.exp(2j * np.pi * rng.random(count))
        moved = g(*homog(z + dz))
        worst.append(np.max(np.abs(moved - base)) + 1e-300)
    worst = np.array(worst)
    slope = np.polyfit(np.log(scales), np.log(worst), 1)[0]
    alpha = float(np.clip(slope, 0.05, 1.0))
    const = float(np.max(worst / scales**alpha)) * 1.25
    return alpha, const


# ---------------------------------------------------------------------------
# Green functions


def _form_arrays(form: BinaryForm) -> tuple[np.ndarray, np.ndarray]:
    js = np.array([j for j, _ in form.terms], dtype=int)
    cs = np.array([float(c) for _, c in form.terms], dtype=float)
    return js, cs


def _eval_form(js, cs, d, x0, x1):
    out = np.zeros(np.broadcast(x0, x1).shape, dtype=complex)
    for j, c in zip(js, cs):
        out = out + c * x0 ** (d - j) * x1**j
    return out


def eval_map(F: MapLift, x0, x1):
    d = F.degree
    a = _eval_form(*_form_arrays(F.F0), d, x0, x1)
    b = _eval_form(*_form_arrays(F.F1), d, x0, x1)
    return a, b


def t_function(F: MapLift, x0, x1) -> np.ndarray:
    """``T_F = log ||F(x)|| - d log ||x||``, homogeneous of degree zero."""
    y0, y1 = eval_map(F, x0, x1)
    return np.log(_norm(y0, y1)) - F.degree * np.log(_norm(x0, x1))


def energy_constant(F: MapLift) -> float:
    """``-log|Res F| / (d (d-1))``."""
    d = F.degree
    return -log_abs(F.resultant, INFINITY) / (d * (d - 1))


@dataclass
class GreenEvaluator:
    """Escape-rate Green function ``g_F`` truncated at ``depth`` iterations."""

    lift: MapLift
    depth: int
    sup_tf_bound: float
    sup_method: str = "sampled x1.25"

    @property
    def degree(self) -> int:
        return self.lift.degree

    @property
    def bound(self) -> float:
        d = self.degree
        return self.sup_tf_bound / (d**self.depth * (d - 1))

    @classmethod
    def build(cls, F: MapLift, tol: float = 1e-13, depth: int | None = None, grid: int = 10_000) -> "GreenEvaluator":
        if F.degree < 2:
            raise RejectedInput("Green functions need degree at least 2")
        sup, method = sup_t_bound(F, grid)
        d = F.degree
        if depth is None:
            depth = max(1, math.ceil(math.log(max(sup, 1e-300) / ((d - 1) * tol)) / math.log(d)))
        return cls(F, depth, sup, method)

    def values(self, x0, x1, depth: int | None = None) -> np.ndarray:
        n = self.depth if depth is None else depth
        d = self.degree
        x0 = np.asarray(x0, dtype=complex)
        x1 = np.asarray(x1, dtype=complex)
        s = np.maximum(np.abs(x0), np.abs(x1))
        x0, x1 = x0 / s, x1 / s
        js0, cs0 = _form_arrays(self.lift.F0)
        js1, cs1 = _form_arrays(self.lift.F1)
        acc = np.zeros(x0.shape)
        scale = 1.0
        for _ in range(n):
            y0 = _eval_form(js0, cs0, d, x0, x1)
            y1 = _eval_form(js1, cs1, d, x0, x1)
            ny = _norm(y0, y1)
            if not np.all(np.isfinite(ny)) or np.any(ny == 0):
                raise NumericalFailure("overflow in normalized Green iteration")
            scale /= d
            acc += scale * (np.log(ny) - d * np.log(_norm(x0, x1)))
            m = np.maximum(np.abs(y0), np.abs(y1))
            x0, x1 = y0 / m, y1 / m
        return acc

    def __call__(self, x0, x1) -> np.ndarray:
        return self.values(x0, x1)


def sup_t_bound(F: MapLift, grid: int = 10_000) -> tuple[float, str]:
    x0, x1 = fibonacci_sphere(grid)
    sampled = float(np.max(np.abs(t_function(F, x0, x1)))) * 1.25
    return max(sampled, 1e-12), "sampled x1.25"


def green_escape(G: GreenEvaluator, z: ComplexPoint, depth: int | None = None) -> tuple[float, float]:
    n = G.depth if depth is None else depth
    d = G.degree
    val = float(G.values(np.array([z.x0]), np.array([z.x1]), n)[0])
    return val, G.sup_tf_bound / (d**n * (d - 1))


class GreenWeight(WeightFn):
    """Dynamical weight ``g_F`` plus optional normalization ``V/2`` (so its energy vanishes)."""

    def __init__(self, F: MapLift, normalized: bool = True, tol: float = 1e-13):
        self.F = F
        self.evaluator = GreenEvaluator.build(F, tol)
        self.shift = energy_constant(F) / 2 if normalized else 0.0
        self.error = self.evaluator.bound
        self.name = f"green[{F.to_string()}]" + ("-normalized" if normalized else "")

    def __call__(self, x0, x1):
        return self.evaluator(x0, x1) + self.shift


# ---------------------------------------------------------------------------
# Mahler measures and Fekete sums


def _log_norm_affine(z: np.ndarray) -> np.ndarray:
    return 0.5 * np.log1p(np.abs(z) ** 2)


def msharp_from_cloud(lead: Fraction, cloud: RootCloud) -> tuple[float, float]:
    vals = cloud.multiplicity * _log_norm_affine(cloud.finite)
    err = float(np.sum(cloud.multiplicity * cloud.forward_error) / 2) + 4 * EPS * (1 + float(np.sum(np.abs(vals))))
    return log_abs(lead, INFINITY) + math.fsum(vals.tolist()), err


def msharp_inf(P: BinaryForm, tol: float = 1e-9) -> tuple[float, float]:
    """``log|L(P(1,.))| + sum over finite roots of log ||(1, z_j)||`` with an error bound."""
    return msharp_from_cloud(P.leading_finite(), roots_complex(P, tol))


def _weight_error(g: WeightFn, cloud: RootCloud) -> float:
    # first-order sensitivity of g to root errors, using the sampled Holder data
    alpha, const = g.holder
    return float(np.sum(cloud.multiplicity * const * cloud.forward_error**alpha)) + g.error * cloud.degree


def weight_on_cloud(g: WeightFn, cloud: RootCloud) -> tuple[np.ndarray, np.ndarray]:
    x0, x1, mult = cloud.homogeneous()
    return g(x0, x1), mult


def mahler_g(P: BinaryForm, g: WeightFn, tol: float = 1e-9, cloud: RootCloud | None = None) -> tuple[float, float]:
    """``sum_j g(z_j) + M#(P)`` with an error bound."""
    cloud = cloud or roots_complex(P, tol)
    ms, err = msharp_from_cloud(P.leading_finite(), cloud)
    gv, mult = weight_on_cloud(g, cloud)
    if isinstance(g, ZeroWeight):
        return ms, err
    return ms + math.fsum((gv * mult).tolist()), err + _weight_error(g, cloud)


def fekete_sum(cloud: RootCloud, g: WeightFn, block: int = 2048) -> float:
    """``sum over ordered pairs of distinct roots m_i m_j (log[z_i,z_j] - g(z_i) - g(z_j))``."""
    x0, x1, mult = cloud.homogeneous()
    n = len(mult)
    if n < 2:
        return 0.0
    total = 0.0
    for start in range(0, n, block):
        sl = slice(start, min(start + block, n))
        k = chordal_arrays(x0[sl, None], x1[sl, None], x0[None, :], x1[None, :])
        idx = np.arange(sl.start, sl.stop)
        with np.errstate(divide="ignore"):
            lk = np.log(k)
        lk[idx - start, idx] = 0.0
        total += float(np.sum(mult[sl, None] * mult[None, :] * lk))
    if not isinstance(g, ZeroWeight):
        deg = float(mult.sum())
        gv = g(x0, x1)
        total -= 2 * float(np.sum(mult * gv * (deg - mult)))
    return total


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    error: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs


def discrepancy_identity_check(Z: ZerosDivisor, g: WeightFn, tol: float = 1e-9) -> IdentityCheck:
    """Both sides of the local Fekete identity at the archimedean place."""
    cloud = roots_from_strata(Z.strata, tol)
    x0, x1, mult = cloud.homogeneous()
    gv = g(x0, x1)
    fek = fekete_sum(cloud, g)
    lhs = fek
    lhs += 2 * float(np.sum(cloud.multiplicity.astype(float) ** 2 * log_chordal_to_infinity(cloud.finite)))
    lhs -= 2 * float(np.sum(mult**2 * gv))
    deg = Z.degree
    lead = Z.form.leading_finite()
    mg, err = mahler_g(Z.form, g, tol, cloud)
    rhs = 2 * deg * log_abs(lead, INFINITY) + log_abs(dstar_divisor(Z), INFINITY) - 2 * deg * mg
    return IdentityCheck(lhs, rhs, 2 * deg * err)


# ---------------------------------------------------------------------------
# equilibrium measure


def _preimage_polys(F: MapLift, w0: np.ndarray, w1: np.ndarray) -> np.ndarray:
    """Coefficients (low to high, in z) of ``F1(1,z) w0 - F0(1,z) w1`` for each target."""
    d = F.degree
    a = np.zeros(d + 1)
    b = np.zeros(d + 1)
    for j, c in F.F0.terms:
        a[j] = float(c)
    for j, c in F.F1.terms:
        b[j] = float(c)
    return w0[:, None] * b[None, :] - w1[:, None] * a[None, :]


def _batched_roots(coef_low: np.ndarray) -> np.ndarray:
    """Roots of many polynomials of common formal degree with nonzero leading term."""
    n, k = coef_low.shape
    d = k - 1
    if d == 1:
        return (-coef_low[:, 0] / coef_low[:, 1])[:, None]
    lead = coef_low[:, -1]
    comp = np.zeros((n, d, d), dtype=complex)
    comp[:, 0, :] = -coef_low[:, -2::-1] / lead[:, None]
    idx = np.arange(d - 1)
    comp[:, idx + 1, idx] = 1.0
    return np.linalg.eigvals(comp)


def preimages(F: MapLift, w0: np.ndarray, w1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All ``d`` preimages of each target, shape ``(n, d)`` in homogeneous coordinates."""
    coef = _preimage_polys(F, w0, w1)
    use_z = np.abs(coef[:, -1]) >= np.abs(coef[:, 0])
    out0 = np.empty((len(w0), F.degree), dtype=complex)
    out1 = np.empty_like(out0)
    if use_z.any():
        r = _batched_roots(coef[use_z])
        s = np.maximum(1.0, np.abs(r))
        out0[use_z], out1[use_z] = 1.0 / s, r / s
    if (~use_z).any():
        # chart t = x0/x1: reversed coefficients have leading term coef[:, 0]
        r = _batched_roots(coef[~use_z][:, ::-1])
        s = np.maximum(1.0, np.abs(r))
        out0[~use_z], out1[~use_z] = r / s, 1.0 / s
    return out0, out1


def equilibrium_sample(F: MapLift, count: int, seed: int = 0, depth: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Random backward orbits; returns homogeneous sample arrays."""
    if F.degree < 2:
        raise RejectedInput("equilibrium sampling needs degree at least 2")
    if count == 0:
        return np.zeros(0, complex), np.zeros(0, complex)
    depth = max(depth, 30)
    rng = np.random.default_rng(seed)
    start = np.exp(2j * np.pi * rng.random(count)) * (0.5 + rng.random(count))
    x0, x1 = homog(start)
    for _ in range(depth):
        p0, p1 = preimages(F, x0, x1)
        pick = rng.integers(0, F.degree, size=count)
        x0 = p0[np.arange(count), pick]
        x1 = p1[np.arange(count), pick]
        if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(x1))):
            raise NumericalFailure("preimage solve produced non-finite values")
    return x0, x1


@lru_cache(maxsize=32)
def _preimage_tree_cached(F: MapLift, levels: int, base_depth: int) -> tuple[np.ndarray, np.ndarray]:
    x0, x1 = equilibrium_sample(F, 1, seed=12345, depth=base_depth)
    for _ in range(levels):
        p0, p1 = preimages(F, x0, x1)
        x0, x1 = p0.ravel(), p1.ravel()
    return x0, x1


def preimage_tree(F: MapLift, levels: int | None = None, max_points: int = 20000) -> tuple[np.ndarray, np.ndarray]:
    """All ``d^levels`` iterated preimages of a deep backward-orbit base point (equal weights)."""
    d = F.degree
    if levels is None:
        levels = max(1, int(math.log(max_points) / math.log(d)))
    return _preimage_tree_cached(F, levels, 60)


def integrate_equilibrium(F: MapLift, phi: Callable[[np.ndarray, np.ndarray], np.ndarray], levels: int | None = None) -> float:
    x0, x1 = preimage_tree(F, levels)
    return float(np.mean(phi(x0, x1)))


@dataclass(frozen=True)
class EnergyEstimate:
    estimate: float
    stderr: float
    target: float
    pairs: int

    @property
    def z_score(self) -> float:
        return (self.estimate - self.target) / self.stderr if self.stderr > 0 else math.inf


def energy_estimate(F: MapLift, samples: tuple[np.ndarray, np.ndarray], green: GreenWeight | None = None) -> EnergyEstimate:
    """Mean of ``log[x,y] - g_F(x) - g_F(y)`` over disjoint sample pairs."""
    x0, x1 = samples
    if len(x0) < 2:
        raise RejectedInput("energy estimate needs at least two samples")
    g = green or GreenWeight(F, normalized=False)
    if g.shift:
        raise RejectedInput("use the unnormalized Green function for the energy estimate")
    npairs = len(x0) // 2
    a0, a1 = x0[: 2 * npairs : 2], x1[: 2 * npairs : 2]
    b0, b1 = x0[1 : 2 * npairs : 2], x1[1 : 2 * npairs : 2]
    vals = np.log(chordal_arrays(a0, a1, b0, b1)) - g(a0, a1) - g(b0, b1)
    se = float(np.std(vals, ddof=1) / math.sqrt(npairs)) if npairs > 1 else math.inf
    return EnergyEstimate(float(np.mean(vals)), se, energy_constant(F), npairs)


# ---------------------------------------------------------------------------
# regularization with the radial bump xi(x) = 30 x^2 (1-x)^2


def xi(x):
    return 30 * x**2 * (1 - x) ** 2


def xi_cdf(x):
    x = np.clip(x, 0, 1)
    return 10 * x**3 - 15 * x**4 + 6 * x**5


def _xi_self_energy() -> float:
    # 2 * int_0^1 xi(y) Xi(y) log y dy, expanded termwise with int y^k log y = -1/(k+1)^2
    xi_c = {2: Fraction(30), 3: Fraction(-60), 4: Fraction(30)}
    cdf_c = {3: Fraction(10), 4: Fraction(-15), 5: Fraction(6)}
    total = Fraction(0)
    for a, ca in xi_c.items():
        for b, cb in cdf_c.items():
            total += ca * cb * Fraction(-1, (a + b + 1) ** 2)
    return float(2 * total)


XI_SELF_ENERGY = _xi_self_energy()
"""``C = int int xi(x) xi(y) log max(x, y)``; the self pair energy is ``log eps + C``."""


@lru_cache(maxsize=8)
def radial_nodes(n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on [0,1] with weights integrating against the radial density ``xi``."""
    t, w = np.polynomial.legendre.leggauss(n)
    x = (t + 1) / 2
    return x, w / 2 * xi(x)


def _xi_log_antiderivative(x):
    # G(x) = int_0^x xi(s) log s ds
    out = np.zeros_like(np.asarray(x, dtype=float))
    for k, c in ((2, 30.0), (3, -60.0), (4, 30.0)):
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(x > 0, x ** (k + 1) * (np.log(np.where(x > 0, x, 1)) / (k + 1) - 1 / (k + 1) ** 2), 0.0)
        out = out + c * term
    return out


def circle_smoothed_log(r, scale: float):
    """``int xi_scale(s) log max(s, r) ds``: potential of the regularized point mass at distance ``r``."""
    r = np.asarray(r, dtype=float)
    t = r / scale
    inside = t < 1
    tt = np.where(inside, t, 1.0)
    with np.errstate(divide="ignore"):
        low = xi_cdf(tt) * np.log(np.where(tt > 0, tt, 1.0)) + (_xi_log_antiderivative(1.0) - _xi_log_antiderivative(tt))
    with np.errstate(divide="ignore"):
        return np.where(inside, math.log(scale) + low, np.log(np.where(inside, 1.0, r)))


def circle_smoothed_log_slope(r, scale: float):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0, xi_cdf(r / scale) / np.where(r > 0, r, 1.0), 0.0)


def _angular_mix(r1, r2, s, nodes: int = 32):
    """Angle average of ``log max(r1, |s + r2 e^{i t}|)`` for ``s >= 0`` (arrays broadcast)."""
    r1, r2 = np.broadcast_arrays(np.asarray(r1, float), np.asarray(r2, float))
    out = np.empty(r1.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (r1**2 - s * s - r2**2) / (2 * s * np.where(r2 > 0, r2, 1.0))
    kappa = np.where(r2 > 0, kappa, np.where(s >= r1, -2.0, 2.0))
    always = kappa <= -1
    never = kappa >= 1
    with np.errstate(divide="ignore"):
        out[always] = np.log(np.maximum(s, r2[always]))
        out[never] = np.log(r1[never])
    mixed = ~(always | never)
    if mixed.any():
        a1, a2, k = r1[mixed], r2[mixed], kappa[mixed]
        theta = np.arccos(k)
        t, w = np.polynomial.legendre.leggauss(nodes)
        th = (t[None, :] + 1) / 2 * theta[:, None]
        h = s * s + a2[:, None] ** 2 + 2 * s * a2[:, None] * np.cos(th)
        part = np.sum(w[None, :] * 0.5 * np.log(h), axis=1) * theta / 2
        out[mixed] = (part + (math.pi - theta) * np.log(a1)) / math.pi
    return out


def affine_pair_energy(z: complex, w: complex, eps: float, n: int = 64) -> float:
    """``int int log|S - S'| d[z]_eps d[w]_eps`` for finite ``z, w``."""
    if eps <= 0:
        raise RejectedInput("eps must be positive")
    s = abs(complex(z) - complex(w))
    if s >= 2 * eps:
        return math.log(s)
    if s == 0:
        return math.log(eps) + XI_SELF_ENERGY
    x, wx = radial_nodes(n)
    j = _angular_mix(x[:, None], x[None, :], s / eps)
    return math.log(eps) + float(np.sum(wx[:, None] * wx[None, :] * j))


def _polar_nodes(nr: int = 24, na: int = 48) -> tuple[np.ndarray, np.ndarray]:
    x, wx = radial_nodes(nr)
    ang = np.exp(2j * np.pi * (np.arange(na) + 0.5) / na)
    pts = (x[:, None] * ang[None, :]).ravel()
    wts = np.repeat(wx / na, na)
    return pts, wts


def regularized_nodes(z: ComplexPoint, eps: float, nr: int = 24, na: int = 48) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature nodes (homogeneous) and weights for ``[z]_eps`` on the sphere."""
    u, wts = _polar_nodes(nr, na)
    if z.is_infinity:
        u = eps * u
        x0, x1 = u, np.ones_like(u)  # iota of the disk around 0
    else:
        x0, x1 = homog(z.z + eps * u)
    s = np.maximum(np.abs(x0), np.abs(x1))
    return x0 / s, x1 / s, wts


def average_over_regularized(f, z: ComplexPoint, eps: float) -> float:
    x0, x1, w = regularized_nodes(z, eps)
    return float(np.sum(w * f(x0, x1)))


def _half_log_norm(x0, x1):
    # 1/2 log(1+|u|^2) for the affine value u = x1/x0
    return np.log(_norm(x0, x1)) - np.log(np.abs(x0))


def regularized_pair_energy(z: ComplexPoint, w: ComplexPoint, eps: float) -> float:
    """``int int log[S, S'] d([z]_eps x [w]_eps)`` in the chordal kernel."""
    if eps <= 0:
        raise RejectedInput("eps must be positive")
    if z.is_infinity and w.is_infinity:
        z = w = ComplexPoint.affine(0)
    if w.is_infinity:
        z, w = w, z
    if z.is_infinity:
        # integrate the chordal potential of [0]_eps at iota(S') over [w]_eps
        a0 = average_over_regularized(_half_log_norm, ComplexPoint.affine(0), eps)
        x0, x1, wts = regularized_nodes(w, eps)
        y = affine(x1, x0)  # iota
        finite = np.isfinite(y)
        yy = np.where(finite, y, 0)
        pot = np.where(
            finite,
            circle_smoothed_log(np.abs(yy), eps) - a0 - 0.5 * np.log1p(np.abs(yy) ** 2),
            -a0,
        )
        return float(np.sum(wts * pot))
    e_aff = affine_pair_energy(z.z, w.z, eps)
    az = average_over_regularized(_half_log_norm, z, eps)
    aw = az if z == w else average_over_regularized(_half_log_norm, w, eps)
    return e_aff - az - aw


def regularized_fekete(cloud: RootCloud, g: WeightFn, eps: float) -> float:
    """``(Z_eps, Z_eps)_g`` including the diagonal self-pair energies."""
    pts = cloud.points()
    deg = sum(m for _, m in pts)
    total = 0.0
    for i, (p, m) in enumerate(pts):
        for q, n in pts[i:]:
            e = regularized_pair_energy(p, q, eps)
            total += (m * n) * e * (1 if p == q else 2)
    if not isinstance(g, ZeroWeight):
        for p, m in pts:
            total -= 2 * deg * m * average_over_regularized(g, p, eps)
    return total


@dataclass(frozen=True)
class LocalRegularizationCheck:
    regularized: float
    lower_bound: float
    fitted_constant: float
    eps: float

    @property
    def holds(self) -> bool:
        return self.regularized >= self.lower_bound


def fit_regularization_constant(eps_grid: Sequence[float]) -> float:
    """Smallest observed ``E(z,z,eps) - log eps`` across the grid (never positive)."""
    vals = [affine_pair_energy(0.3 + 0.1j, 0.3 + 0.1j, e) - math.log(e) for e in eps_grid]
    return min(min(vals), 0.0)


def local_regularization_check(
    Z: ZerosDivisor, g: WeightFn, eps: float, constant: float, tol: float = 1e-9
) -> LocalRegularizationCheck:
    """Lower bound for the regularized Fekete sum in terms of the exact one."""
    cloud = roots_from_strata(Z.strata, tol)
    reg = regularized_fekete(cloud, g, eps)
    x0, x1, mult = cloud.homogeneous()
    gv = g(x0, x1)
    base = fekete_sum(cloud, g)
    base += 2 * float(np.sum(cloud.multiplicity.astype(float) ** 2 * log_chordal_to_infinity(cloud.finite)))
    base -= 2 * float(np.sum(mult**2 * gv))
    alpha, const = g.holder
    deg = Z.degree
    lower = base + (constant + math.log(eps)) * Z.diagonal - 2 * deg**2 * (eps + const * eps**alpha)
    return LocalRegularizationCheck(reg, lower, constant, eps)


# ---------------------------------------------------------------------------
# smoothed logarithmic test functions


@dataclass(frozen=True)
class SmoothedLogKernel:
    """``log[w0, .]`` outside the ``eps``-disk, capped by the ``eps/2``-regularized average inside."""

    w0: complex
    eps: float

    def __call__(self, x0, x1) -> np.ndarray:
        z = affine(np.asarray(x0, complex), np.asarray(x1, complex))
        fin = np.isfinite(z)
        zz = np.where(fin, z, 0)
        val = (
            circle_smoothed_log(np.abs(zz - self.w0), self.eps / 2)
            - 0.5 * np.log1p(np.abs(zz) ** 2)
            - 0.5 * math.log1p(abs(self.w0) ** 2)
        )
        return np.where(fin, val, -0.5 * math.log1p(abs(self.w0) ** 2))

    def gradient_norm(self, z: np.ndarray) -> np.ndarray:
        """Euclidean gradient magnitude in the affine chart."""
        r = np.abs(z - self.w0)
        radial = circle_smoothed_log_slope(r, self.eps / 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            er = np.where(r > 0, (z - self.w0) / np.where(r > 0, r, 1), 0)
        grad = radial * er - z / (1 + np.abs(z) ** 2)
        return np.abs(grad)

    @cached_property
    def lipschitz(self) -> float:
        """Sampled Lipschitz constant for the chordal metric (line element ``|dz|/(1+|z|^2)``)."""
        rr = np.concatenate([np.linspace(0, 3 * self.eps, 400), np.geomspace(3 * self.eps, 1e4, 400)])
        ang = np.exp(2j * np.pi * np.arange(64) / 64)
        z = self.w0 + (rr[:, None] * ang[None, :]).ravel()
        x0, x1 = fibonacci_sphere(4000)
        z = np.concatenate([z, affine(x0, x1)[np.isfinite(affine(x0, x1))]])
        return float(np.max(self.gradient_norm(z) * (1 + np.abs(z) ** 2)))

    @cached_property
    def dirichlet(self) -> float:
        """``(1/2pi) int |grad|^2 dA`` via the energy of ``[w0]_{eps/2}`` minus the spherical measure."""
        h = self.eps / 2
        a = average_over_regularized(_half_log_norm, ComplexPoint.affine(self.w0), h)
        self_energy = math.log(h) + XI_SELF_ENERGY - 2 * a
        return -self_energy - 0.5


def dirichlet_numeric_radial(phi_r: Callable[[np.ndarray], np.ndarray], rmax: float = 1e6, n: int = 200_000) -> float:
    """``int_0^inf phi'(r)^2 r dr`` for radial functions (the normalized Dirichlet norm)."""
    r = np.concatenate([np.linspace(0, 1, n // 2, endpoint=False), np.geomspace(1, rmax, n // 2)])
    f = phi_r(r)
    dr = np.diff(r)
    slope = np.diff(f) / dr
    mid = (r[1:] + r[:-1]) / 2
    return float(np.sum(slope**2 * mid * dr))


def smoothed_log_kernel(w0: complex, eps: float) -> SmoothedLogKernel:
    if eps <= 0:
        raise RejectedInput("eps must be positive")
    return SmoothedLogKernel(complex(w0), float(eps))
