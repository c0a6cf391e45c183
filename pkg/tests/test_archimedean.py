import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adelicdiv import archimedean as arch
from adelicdiv import experiments as ex
from adelicdiv.algebra import MapLift, ZerosDivisor
from adelicdiv.grammar import parse_form, parse_map

finite_complex = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)


def test_chordal_distance():
    one, inf = arch.ComplexPoint.affine(1), arch.ComplexPoint.infinity()
    assert arch.chordal(one, inf) == pytest.approx(1 / math.sqrt(2))
    assert arch.chordal(arch.ComplexPoint.affine(0), inf) == pytest.approx(1.0)
    assert arch.chordal(one, one) == 0


@given(finite_complex, finite_complex)
def test_chordal_symmetric_and_inversion_invariant(z, w):
    a, b = arch.ComplexPoint.affine(z), arch.ComplexPoint.affine(w)
    assert arch.chordal(a, b) == pytest.approx(arch.chordal(b, a))
    assert arch.chordal(a, b) <= 1 + 1e-15
    if z != 0 and w != 0:
        ia, ib = arch.ComplexPoint.affine(1 / z), arch.ComplexPoint.affine(1 / w)
        assert arch.chordal(ia, ib) == pytest.approx(arch.chordal(a, b), rel=1e-9, abs=1e-12)


def test_roots_of_rational_divisor():
    cloud = arch.roots_complex(parse_form("p0*(p1-p0)^2*(p1+2*p0)"))
    pts = sorted((p.z.real, m) for p, m in cloud.points() if not p.is_infinity)
    assert [m for _, m in pts] == [1, 2]
    assert pts[0][0] == pytest.approx(-2) and pts[1][0] == pytest.approx(1)
    assert cloud.inf_mult == 1


def test_orbit_polishing_matches_closed_form():
    F = parse_map("z^2 - 2")
    cloud = arch.roots_dynamical(F, MapLift.constant(0), 8)
    true = 2 * np.cos((2 * np.arange(256) + 1) * np.pi / 2**9)
    err = np.max(np.min(np.abs(cloud.finite[:, None] - true[None, :]), axis=1))
    assert err < 1e-12
    assert np.max(cloud.forward_error) < 1e-12


def test_green_function_of_squaring():
    G = arch.GreenWeight(parse_map("z^2"), normalized=False)
    z = np.array([0.3, 2.0, -5 + 1j, 1j])
    x0, x1 = arch.homog(z)
    expected = np.log(np.maximum(1, np.abs(z))) - 0.5 * np.log1p(np.abs(z) ** 2)
    assert np.allclose(G(x0, x1), expected, atol=1e-12)


def test_green_normalization_shift():
    F = parse_map("z^2/4")
    G = arch.GreenWeight(F, normalized=True)
    assert G.shift == pytest.approx(math.log(16) / 4)


def test_energy_constant():
    assert arch.energy_constant(parse_map("z^2")) == 0
    assert arch.energy_constant(parse_map("3*z^2")) == pytest.approx(-math.log(3))  # Res = 9


def test_equilibrium_sample_of_squaring_is_on_circle():
    x0, x1 = arch.equilibrium_sample(parse_map("z^2"), 500, seed=1)
    assert np.allclose(np.abs(x1 / x0), 1, atol=1e-9)


def test_energy_estimate_agrees_with_resultant():
    F = parse_map("z^2 - 1")
    est = arch.energy_estimate(F, arch.equilibrium_sample(F, 4000, seed=3))
    assert abs(est.z_score) < 4


def test_mahler_measures():
    val, err = arch.msharp_inf(parse_form("z^2 - 1"))
    assert val == pytest.approx(math.log(2), abs=1e-12)
    val, err = arch.mahler_g(parse_form("z^2 - 1"), arch.GreenWeight(parse_map("z^2")))
    # g(1) + g(-1) + log||(1,1)|| + log||(1,-1)|| = 0 for the squaring weight
    assert val == pytest.approx(0, abs=1e-10)


def test_local_fekete_identity_hand_value():
    chk = arch.discrepancy_identity_check(ZerosDivisor.of(parse_form("z^2 - 1")), arch.ZeroWeight())
    assert chk.lhs == pytest.approx(-2 * math.log(2), abs=1e-12)
    assert chk.gap == pytest.approx(0, abs=1e-12)


def test_local_regularization_lower_bound():
    Z = ZerosDivisor.of(parse_form("(z-1)^2*(z+1)"))
    C = arch.fit_regularization_constant([1e-1, 1e-2, 1e-3])
    assert C == pytest.approx(arch.XI_SELF_ENERGY, abs=1e-6)
    for eps in (1e-1, 1e-2, 1e-3):
        chk = arch.local_regularization_check(Z, arch.ZeroWeight(), eps, C)
        assert chk.holds
        assert chk.regularized <= 1e-9


def test_chordal_coordinate_dirichlet_oracle():
    # height coordinate (r^2-1)/(r^2+1) is radial; its normalized Dirichlet norm is 4/3
    val = arch.dirichlet_numeric_radial(lambda r: (r**2 - 1) / (r**2 + 1))
    assert val == pytest.approx(4 / 3, rel=1e-4)
    assert ex.chordal_height().dirichlet == pytest.approx(4 / 3)


def test_smoothed_log_dirichlet_two_routes():
    eps = 0.2
    k = arch.smoothed_log_kernel(0.0, eps)
    radial = arch.dirichlet_numeric_radial(
        lambda r: arch.circle_smoothed_log(r, eps / 2) - 0.5 * np.log1p(r**2), n=400_000
    )
    assert k.dirichlet == pytest.approx(radial, rel=2e-3)


def test_smoothed_log_lipschitz_is_an_upper_bound():
    k = arch.smoothed_log_kernel(0.5, 0.1)
    rng = np.random.default_rng(0)
    z = rng.normal(size=2000) + 1j * rng.normal(size=2000)
    w = z + 1e-6 * (rng.normal(size=2000) + 1j * rng.normal(size=2000))
    x0, x1 = arch.homog(z)
    y0, y1 = arch.homog(w)
    ratio = np.abs(k(x0, x1) - k(y0, y1)) / arch.chordal_arrays(x0, x1, y0, y1)
    assert np.max(ratio) <= k.lipschitz * (1 + 1e-3)


def test_holder_estimate_for_zero_weight():
    assert arch.ZeroWeight().holder == (1.0, 0.0)
