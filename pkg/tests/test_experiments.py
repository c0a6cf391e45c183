import math

import numpy as np
import pytest

from adelicdiv import experiments as ex
from adelicdiv.algebra import MapLift
from adelicdiv.grammar import parse_map


def test_equidist_rows_and_fit():
    rows = ex.equidist_run(parse_map("z^2 - 1"), MapLift.identity(), range(2, 7), samples=2**12)
    names = {r.test_fn for r in rows}
    assert names == {tf.name for tf in ex.default_catalog()}
    for r in rows:
        assert r.degree == 2**r.n + 1
        assert r.discrepancy >= 0 and math.isfinite(r.ratio)
        if r.test_fn == "const":
            assert r.discrepancy == pytest.approx(0, abs=1e-12)
    fitted = ex.fitted_constants(rows, n_min=4)
    assert "chordal-x" in fitted and fitted["chordal-x"]["fitted_C"] >= 0


def test_discrepancy_decreases_for_periodic_points():
    rows = ex.equidist_run(parse_map("z^2 - 1"), MapLift.identity(), [2, 8], [ex.smoothed_log(0.5, 0.1)], samples=2**12)
    assert rows[1].discrepancy < rows[0].discrepancy


def test_fekete_configuration_envelope():
    rows = ex.fekete_config_check(parse_map("z^2"), MapLift.identity(), range(1, 9))
    assert all(r.within for r in rows)
    assert all(r.value > -1e-12 for r in rows)  # sums over roots of unity are nonnegative here


def test_periodic_diagonals():
    assert [r.diagonal for r in ex.periodic_diag_scan(parse_map("z^2"), range(1, 6))] == [3, 5, 9, 17, 33]
    assert [r.diagonal for r in ex.periodic_diag_scan(parse_map("z^2 + z"), range(1, 6))] == [5, 7, 11, 19, 35]


def test_disk_grid_inside_disk():
    g = ex.disk_grid(1 + 1j, 0.5, 500)
    assert np.all(np.abs(g - (1 + 1j)) <= 0.5)


def test_proximity_scan_shape():
    rows = ex.proximity_scan(parse_map("z^2"), MapLift.identity(), 0.3 + 0.2j, 0.1, range(1, 9), grid_size=512)
    assert all(r.sup_log_proximity <= 0 for r in rows)
    assert all(abs(r.argmax - (0.3 + 0.2j)) <= 0.1 for r in rows)
    C, ok = ex.fit_proximity_constant(rows)
    assert ok and C >= 0


def test_riesz_residual_within_envelope():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=10) + 1j * rng.normal(size=10)
    res = ex.riesz_residual(parse_map("z^2 - 1"), parse_map("0"), 2, pts, 3000, seed=1)
    assert res.max_residual <= res.envelope
    res = ex.riesz_residual(parse_map("z^2"), parse_map("3*z - 1"), 1, pts, 3000, seed=1)
    assert res.max_residual <= res.envelope


def test_regularized_suite_small_grid():
    rows = ex.regularized_inequality_suite(ex.default_corpus()[:3], [1e-1, 1e-3])
    assert rows and all(r.holds for r in rows)
    assert {r.check for r in rows} >= {"local-lower", "negativity", "smoothing", "padic-lower", "padic-negativity"}


def test_rows_to_dicts_handles_complex():
    row = ex.ProximityRow(1, -0.5, 1.0, 1 + 2j)
    assert ex.rows_to_dicts([row])[0]["argmax"] == [1.0, 2.0]
