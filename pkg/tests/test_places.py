import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adelicdiv.errors import RejectedInput
from adelicdiv.grammar import parse_form, parse_map
from adelicdiv.places import (
    INFINITY,
    LogCombination,
    Place,
    abs_value,
    gauss_norm_exponent,
    log_abs,
    log_abs_exact,
    msharp_sum,
    product_formula_check,
    relevant_places,
    valuation,
)

nonzero = st.fractions(max_denominator=10**6).filter(lambda x: x != 0)


def test_valuations_and_absolute_values():
    assert valuation(Fraction(12, 5), 2) == 2
    assert valuation(Fraction(12, 5), 5) == -1
    assert abs_value(Fraction(12, 5), Place(2)) == Fraction(1, 4)
    assert abs_value(Fraction(-12, 5), INFINITY) == pytest.approx(2.4)
    assert log_abs(8, Place(2)) == pytest.approx(-3 * math.log(2))


def test_place_parsing():
    assert Place.parse("inf") == INFINITY
    assert Place.parse("7") == Place(7)
    with pytest.raises(RejectedInput):
        Place.parse("6")


@given(nonzero)
def test_product_formula_exact(x):
    assert product_formula_check(x).is_zero()


@given(nonzero, nonzero)
def test_log_abs_exact_is_additive(x, y):
    for v in (INFINITY, Place(2), Place(3)):
        lhs = log_abs_exact(x * y, v)
        rhs = log_abs_exact(x, v) + log_abs_exact(y, v)
        assert float(lhs - rhs) == pytest.approx(0, abs=1e-12)


def test_log_combination_arithmetic():
    a = LogCombination.of({2: Fraction(3), 3: Fraction(-1)})
    assert a.coefficient(2) == 3
    assert (a - a).is_zero()
    assert float(a.scale(2)) == pytest.approx(6 * math.log(2) - 2 * math.log(3))


def test_relevant_places_of_map():
    places = relevant_places([parse_map("z^2/4")])
    assert places.finite_primes == (2,)
    assert INFINITY in places


def test_gauss_norm():
    assert gauss_norm_exponent(parse_form("4*z^2 + 2*z + 1/3"), 3) == 1
    assert gauss_norm_exponent(parse_form("4*z^2 + 2*z"), 2) == -1


def test_msharp_sum_of_rational_roots():
    # z^2 - 1: finite places vanish, archimedean is log 2
    s = msharp_sum(parse_form("z^2 - 1"))
    assert s.value == pytest.approx(math.log(2), abs=1e-12)
    assert s.finite.is_zero()


@given(st.lists(st.integers(-20, 20), min_size=2, max_size=6))
def test_msharp_sum_nonnegative(coeffs):
    if all(c == 0 for c in coeffs[1:]):
        return
    P = parse_form(" + ".join(f"({c})*z^{j}" for j, c in enumerate(coeffs)), len(coeffs) - 1)
    s = msharp_sum(P)
    assert s.value >= -s.error
