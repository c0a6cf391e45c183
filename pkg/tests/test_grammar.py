from fractions import Fraction

import pytest

from adelicdiv.algebra import MapLift
from adelicdiv.errors import RejectedInput
from adelicdiv.grammar import coprime_integer_coordinates, parse_form, parse_map, parse_point, parse_unipoly


def test_polynomial_and_form_parsing():
    p = parse_unipoly("z^4 - 4*z^2 + 4")
    assert p.degree == 4 and p.coeffs[0] == 4
    P = parse_form("p1^2 - p0^2")
    assert P.degree == 2
    assert parse_form("z - 1", degree=3).infinity_multiplicity == 2


def test_map_parsing():
    assert parse_map("id") == MapLift.identity()
    F = parse_map("(p1^2 ; p0^2)")
    assert F.degree == 2
    assert parse_map("z^2 - 1").degree == 2
    assert parse_map("3").degree == 0


def test_point_parsing():
    assert parse_point("inf") == (0, 1)
    assert parse_point("-1/3") == (1, Fraction(-1, 3))
    assert parse_point("(2:3)") == (2, 3)
    assert coprime_integer_coordinates(Fraction(1, 2), Fraction(3, 4)) == (2, 3)


@pytest.mark.parametrize("bad", ["z^", "p0 + p1^2", "x + 1", "import os", "(p1 ; p0^2)", "(0:0)"])
def test_rejects_bad_input(bad):
    with pytest.raises(RejectedInput):
        if bad.startswith("(0"):
            parse_point(bad)
        elif ";" in bad:
            parse_map(bad)
        else:
            parse_form(bad)
