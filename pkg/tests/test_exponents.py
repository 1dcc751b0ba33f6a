from fractions import Fraction

import pytest

from oscidecay.exponents import global_delta, slab_exponent, sublevel_exponent
from oscidecay.fitting import fit_power_law
from oscidecay.polynomials import BivariatePoly
from oscidecay.problem import ProblemSpec

X, Y = BivariatePoly.x, BivariatePoly.y


def spec_flat():
    return ProblemSpec.build(phase=X(2) + Y(2), disk_radius=Fraction(1, 2))


def spec_weight(poly, gamma, radius=Fraction(1, 2)):
    return ProblemSpec.build(phase=X(2) + Y(2), weights=[(poly, gamma)],
                             disk_radius=radius)


def test_fit_power_law_exact():
    scales = [2.0 ** -k for k in range(4, 14)]
    est = fit_power_law(scales, [3.0 * s ** 0.7 for s in scales])
    assert est.exponent == pytest.approx(0.7, abs=1e-9)
    assert est.log_power == 0


def test_fit_power_law_with_log():
    import math
    scales = [2.0 ** -k for k in range(4, 17)]
    vals = [s ** 0.5 * abs(math.log(s)) for s in scales]
    est = fit_power_law(scales, vals)
    assert est.log_power == 1
    assert est.exponent == pytest.approx(0.5, abs=1e-6)


def test_slab_exponent_flat():
    est = slab_exponent(spec_flat(), (1, 0))
    assert est.exponent == pytest.approx(1.0, abs=0.02)
    assert est.log_power == 0


def test_slab_exponent_half_power():
    est = slab_exponent(spec_weight(X(), Fraction(-1, 2)), (1, 0))
    assert est.exponent == pytest.approx(0.5, abs=0.03)


def test_slab_exponent_transverse_is_linear():
    est = slab_exponent(spec_weight(X(), Fraction(-7, 10)), (0, 1))
    assert est.exponent == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("gamma", [Fraction(-1, 5), Fraction(-1, 2), Fraction(-7, 10)])
def test_slab_exponent_family(gamma):
    est = slab_exponent(spec_weight(X(), gamma), (1, 0))
    assert est.exponent == pytest.approx(1.0 + float(gamma), abs=0.03)


def test_global_delta_minimizer():
    est, v = global_delta(spec_weight(X(), Fraction(-7, 10)), directions=32)
    assert est.exponent == pytest.approx(0.3, abs=0.03)
    assert abs(v[0]) == pytest.approx(1.0, abs=1e-9)


def test_global_delta_scaling_invariance():
    spec1 = spec_weight(X(), Fraction(-7, 10))
    spec2 = ProblemSpec.build(
        phase=X(2) + Y(2),
        weights=[(X() * Fraction(5, 3), Fraction(-7, 10))],
        disk_radius=Fraction(1, 2))
    est1, v1 = global_delta(spec1, directions=16)
    est2, v2 = global_delta(spec2, directions=16)
    assert est1.exponent == pytest.approx(est2.exponent, abs=0.01)
    assert abs(v1[0]) == pytest.approx(abs(v2[0]), abs=1e-9)


def test_sublevel_exponent_flat():
    est = sublevel_exponent(spec_flat())
    assert est.exponent == pytest.approx(1.0, abs=0.05)
    assert est.log_power == 0


def test_sublevel_exponent_weighted():
    est = sublevel_exponent(spec_weight(X(2) + Y(2), Fraction(-4, 5),
                                        radius=Fraction(3, 16)))
    assert est.exponent == pytest.approx(0.2, abs=0.03)
    assert est.log_power == 0


def test_sublevel_weight_shift_arithmetic():
    # weight |f|^rho: sublevel exponent equals rho + 1 for the disk phase
    base = sublevel_exponent(spec_flat())
    shifted = sublevel_exponent(spec_weight(X(2) + Y(2), Fraction(-1, 2)))
    assert shifted.exponent == pytest.approx(base.exponent - 0.5, abs=0.05)


def test_sublevel_log_detection():
    spec = ProblemSpec.build(phase=BivariatePoly({(2, 2): 1}), disk_radius=Fraction(1))
    est = sublevel_exponent(spec)
    assert est.log_power == 1
    assert est.exponent == pytest.approx(0.5, abs=0.05)
