import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adelicdiv.algebra import BinaryForm, MapLift, ZerosDivisor, divisor_fn_eq_a
from adelicdiv.errors import UnsupportedInput
from adelicdiv.grammar import parse_form, parse_map
from adelicdiv.heights import (
    AdelicWeight,
    apply_map,
    canonical_height_point,
    global_fekete_identity,
    height_g,
    heights_smallness_scan,
)
from adelicdiv.places import INFINITY

LOG2 = math.log(2)


def test_height_of_rational_divisor():
    rep = height_g(ZerosDivisor.of(parse_form("z^2 - 1")), AdelicWeight.trivial())
    assert rep.total == pytest.approx(LOG2 / 2, abs=1e-12)
    assert rep.row(INFINITY).method == "numeric"


@given(st.integers(-10**4, 10**4), st.integers(1, 10**4))
def test_height_of_point_is_naive_height(p, q):
    g = math.gcd(p, q)
    p, q = p // g, q // g
    rep = height_g(ZerosDivisor.of(BinaryForm.point(q, p)), AdelicWeight.trivial())
    assert rep.total == pytest.approx(0.5 * math.log(p * p + q * q), abs=1e-9)


@given(
    st.lists(st.integers(-9, 9), min_size=2, max_size=5).filter(lambda c: any(c[1:])),
    st.fractions(min_value=Fraction(1, 1000), max_value=1000).filter(lambda x: x != 0),
)
def test_height_is_scaling_invariant(coeffs, c):
    P = BinaryForm.from_dict(len(coeffs) - 1, dict(enumerate(coeffs)))
    Z1, Z2 = ZerosDivisor.of(P), ZerosDivisor.of(P * c)
    h1 = height_g(Z1, AdelicWeight.trivial())
    h2 = height_g(Z2, AdelicWeight.trivial())
    assert h1.total == pytest.approx(h2.total, abs=1e-9 + h1.total_error + h2.total_error)


def test_dynamical_weight_support():
    w = AdelicWeight.dynamical(parse_map("z^2/4"))
    assert not w.vanishes_at(2)
    assert w.vanishes_at(3)
    assert AdelicWeight.dynamical(parse_map("z^2-2")).vanishes_at(2)


def test_preperiodic_divisors_have_height_zero():
    F = parse_map("z^2")
    g = AdelicWeight.dynamical(F)
    for n in range(1, 7):
        rep = height_g(divisor_fn_eq_a(F, MapLift.identity(), n), g)
        assert abs(rep.total) <= rep.total_error


def test_dynamical_height_needs_rational_roots_at_bad_places():
    with pytest.raises(UnsupportedInput):
        height_g(ZerosDivisor.of(parse_form("z^2 - 2")), AdelicWeight.dynamical(parse_map("z^2/4")))


@pytest.mark.parametrize("x", [Fraction(2), Fraction(1, 3), Fraction(-7, 5), Fraction(1)])
def test_canonical_height_of_squaring(x):
    rep = canonical_height_point(parse_map("z^2"), (Fraction(1), x))
    assert rep.total == pytest.approx(math.log(max(abs(x.numerator), x.denominator)), abs=1e-12)


@pytest.mark.parametrize("text", ["z^2 - 2", "z^2/4", "3*z^2 - 1/2"])
def test_canonical_height_functional_equation(text):
    F = parse_map(text)
    for x in (Fraction(1, 2), Fraction(5, 3), Fraction(-2, 7)):
        pt = (Fraction(1), x)
        a = canonical_height_point(F, pt)
        b = canonical_height_point(F, apply_map(F, pt))
        assert abs(b.total - F.degree * a.total) <= b.total_error + F.degree * a.total_error


def test_preperiodic_point_has_canonical_height_zero():
    rep = canonical_height_point(parse_map("z^2 - 2"), (Fraction(1), Fraction(2)))
    assert abs(rep.total) <= rep.total_error + 1e-12


@pytest.mark.parametrize(
    "form,weight",
    [
        ("z^2 - 1", None),
        ("(2*z - 1)^2*(z + 3)", None),
        ("z*(z - 2)", "z^2/4"),
        ("z^2 - 4", "z^2"),
    ],
)
def test_global_fekete_identity(form, weight):
    g = AdelicWeight.trivial() if weight is None else AdelicWeight.dynamical(parse_map(weight))
    res = global_fekete_identity(ZerosDivisor.of(parse_form(form)), g)
    assert abs(res.gap) <= 1e-9 + res.error


def test_global_fekete_exact_case():
    res = global_fekete_identity(ZerosDivisor.of(parse_form("z^2 - 1")), AdelicWeight.trivial())
    assert res.lhs == pytest.approx(-4 * LOG2, abs=1e-12)
    assert "2" in res.places


def test_smallness_scan():
    rows = heights_smallness_scan(parse_map("z^2"), MapLift.identity(), range(1, 6), height_max_degree=20)
    for r in rows:
        assert r.scaled_bound == pytest.approx(LOG2, abs=1e-9)
        if r.height is not None:
            assert r.height <= r.bound + r.bound_error + r.height_error
    assert rows[-1].height is None


def test_smallness_scan_rejects_bad_reduction():
    with pytest.raises(UnsupportedInput):
        heights_smallness_scan(parse_map("z^2/4"), MapLift.identity(), [1])
