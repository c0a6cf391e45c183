"""Text input for polynomials, forms, maps and points.

Polynomials are sparse expressions such as ``"z^4 - 4*z^2 + 4"``; forms use
``p0`` and ``p1`` (``"p1^2 - p0^2"``); maps are ``"(P0 ; P1)"`` or a
polynomial in ``z``; points are ``"2"``, ``"-1/3"``, ``"inf"`` or ``"(x0:x1)"``.
"""

from __future__ import annotations

import ast
import math
from fractions import Fraction

from .algebra import BinaryForm, MapLift, UniPoly
from .errors import RejectedInput

_VARS = {"p0": 0, "p1": 1, "z": 2}

Mono = tuple[int, int, int]
Poly = dict[Mono, Fraction]


def _mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = (ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2])
            out[k] = out.get(k, Fraction(0)) + va * vb
    return {k: v for k, v in out.items() if v}


def _add(a: Poly, b: Poly, sign: int = 1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, Fraction(0)) + sign * v
    return {k: v for k, v in out.items() if v}


def _const_value(p: Poly) -> Fraction | None:
    if not p:
        return Fraction(0)
    if set(p) == {(0, 0, 0)}:
        return p[(0, 0, 0)]
    return None


def _eval(node: ast.AST) -> Poly:
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return {(0, 0, 0): Fraction(node.value)} if node.value else {}
    if isinstance(node, ast.Name):
        if node.id not in _VARS:
            raise RejectedInput(f"unknown variable {node.id!r}")
        mono = [0, 0, 0]
        mono[_VARS[node.id]] = 1
        return {tuple(mono): Fraction(1)}
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _eval(node.operand)
        return {k: -v for k, v in inner.items()} if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp):
        left, right = _eval(node.left), _eval(node.right)
        if isinstance(node.op, ast.Add):
            return _add(left, right)
        if isinstance(node.op, ast.Sub):
            return _add(left, right, -1)
        if isinstance(node.op, ast.Mult):
            return _mul(left, right)
        if isinstance(node.op, ast.Div):
            c = _const_value(right)
            if c is None or c == 0:
                raise RejectedInput("division only by nonzero constants")
            return {k: v / c for k, v in left.items()}
        if isinstance(node.op, ast.Pow):
            e = _const_value(right)
            if e is None or e.denominator != 1 or e < 0:
                raise RejectedInput("exponents must be nonnegative integers")
            out: Poly = {(0, 0, 0): Fraction(1)}
            for _ in range(int(e)):
                out = _mul(out, left)
            return out
    raise RejectedInput(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse_expression(text: str) -> Poly:
    try:
        tree = ast.parse(text.replace("^", "**").strip(), mode="eval")
    except SyntaxError as exc:
        raise RejectedInput(f"cannot parse {text!r}: {exc.msg}") from None
    return _eval(tree)


def _uses(p: Poly) -> tuple[bool, bool]:
    homog = any(k[0] or k[1] for k in p)
    affine = any(k[2] for k in p)
    if homog and affine:
        raise RejectedInput("mixing z with p0/p1")
    return homog, affine


def parse_unipoly(text: str) -> UniPoly:
    p = parse_expression(text)
    homog, _ = _uses(p)
    if homog:
        raise RejectedInput("expected a polynomial in z")
    return UniPoly.from_sparse({k[2]: v for k, v in p.items()})


def parse_form(text: str, degree: int | None = None) -> BinaryForm:
    """Parse a form in ``p0, p1``; a ``z``-polynomial is homogenized to ``degree``."""
    p = parse_expression(text)
    homog, _ = _uses(p)
    if not homog:
        return BinaryForm.from_unipoly(UniPoly.from_sparse({k[2]: v for k, v in p.items()}), degree)
    degrees = {k[0] + k[1] for k in p}
    if len(degrees) != 1:
        raise RejectedInput(f"form {text!r} is not homogeneous")
    d = degrees.pop()
    if degree is not None and degree != d:
        raise RejectedInput(f"form {text!r} has degree {d}, expected {degree}")
    return BinaryForm.from_dict(d, {k[1]: v for k, v in p.items()})


def parse_map(text: str) -> MapLift:
    """``"(P0 ; P1)"`` pair of forms, a polynomial in ``z``, ``"id"`` or a constant."""
    s = text.strip()
    low = s.lower()
    if low in {"id", "identity"}:
        return MapLift.identity()
    if s.startswith("(") and s.endswith(")") and ";" in s:
        left, right = s[1:-1].split(";", 1)
        f0, f1 = parse_expression(left), parse_expression(right)
        if not (_uses(f0)[0] or _uses(f1)[0]):
            # constant pair
            return MapLift(
                BinaryForm(0, ((0, _const_value(f0) or 0),)),
                BinaryForm(0, ((0, _const_value(f1) or 0),)),
            )
        degs = {k[0] + k[1] for k in list(f0) + list(f1)}
        if len(degs) != 1:
            raise RejectedInput("map components are not homogeneous of one degree")
        d = degs.pop()
        return MapLift(
            BinaryForm.from_dict(d, {k[1]: v for k, v in f0.items()}),
            BinaryForm.from_dict(d, {k[1]: v for k, v in f1.items()}),
        )
    if low in {"inf", "infinity"}:
        return MapLift.constant(None)
    poly = parse_unipoly(s)
    if poly.degree <= 0:
        return MapLift.constant(poly.coeffs[0] if poly.coeffs else Fraction(0))
    return MapLift.from_polynomial(poly)


def parse_point(text: str) -> tuple[Fraction, Fraction]:
    """Projective point as coordinates ``(x0, x1)`` with ``z = x1/x0``."""
    s = text.strip().lower()
    if s in {"inf", "infinity", "oo"}:
        return Fraction(0), Fraction(1)
    if s.startswith("(") and s.endswith(")") and ":" in s:
        a, b = s[1:-1].split(":", 1)
        x0, x1 = Fraction(a.strip()), Fraction(b.strip())
        if x0 == 0 and x1 == 0:
            raise RejectedInput("(0:0) is not a point")
        return x0, x1
    try:
        return Fraction(1), Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise RejectedInput(f"cannot parse point {text!r}") from None


def coprime_integer_coordinates(x0: Fraction, x1: Fraction) -> tuple[int, int]:
    """Scale a rational point to coprime integer coordinates."""
    den = x0.denominator * x1.denominator // math.gcd(x0.denominator, x1.denominator)
    a, b = int(x0 * den), int(x1 * den)
    g = math.gcd(a, b)
    return a // g, b // g
