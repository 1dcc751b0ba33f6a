import math
from fractions import Fraction

import pytest
from scipy import integrate as si

from oscidecay.measures import (slab_measure, sublevel_measure, total_mass,
                                weight_lp_norm)
from oscidecay.polynomials import BivariatePoly
from oscidecay.problem import OutsideRegionError, ProblemSpec, WeightSignal
from oscidecay.quadrature import NonintegrableWeightError

X, Y = BivariatePoly.x, BivariatePoly.y


def spec_flat(radius=Fraction(1, 2)):
    return ProblemSpec.build(phase=X(2) + Y(2), disk_radius=radius)


def spec_xhalf():
    return ProblemSpec.build(phase=X(2) + Y(2),
                             weights=[(X(), Fraction(-1, 2))],
                             disk_radius=Fraction(1, 2))


def spec_radial(gamma=Fraction(-4, 5), radius=Fraction(1, 2)):
    return ProblemSpec.build(phase=X(2) + Y(2),
                             weights=[(X(2) + Y(2), gamma)],
                             disk_radius=radius)


def test_eval_weight_plain():
    spec = ProblemSpec.build(phase=X(2) + Y(2),
                             weights=[(X(), Fraction(-1, 2))],
                             disk_radius=Fraction(1, 2))
    assert spec.eval_weight((0.25, 0.1)) == pytest.approx(2.0)


def test_eval_weight_zero_set_signal():
    spec = ProblemSpec.build(phase=X(2) + Y(2),
                             weights=[(X(), Fraction(-1, 2))],
                             disk_radius=Fraction(1, 2))
    sig = spec.eval_weight((0.0, 0.1))
    assert isinstance(sig, WeightSignal)
    assert sig.value == float("inf")
    spec2 = ProblemSpec.build(phase=X(2) + Y(2),
                              weights=[(X(), Fraction(1, 2))],
                              disk_radius=Fraction(1, 2))
    sig2 = spec2.eval_weight((0.0, 0.1))
    assert isinstance(sig2, WeightSignal) and sig2.value == 0.0


def test_eval_weight_monomial_product():
    spec = ProblemSpec.build(phase=X(2) + Y(2),
                             weights=[(X(), Fraction(1)), (Y(), Fraction(2))],
                             disk_radius=Fraction(1))
    assert spec.eval_weight((0.5, 0.5)) == pytest.approx(0.125)


def test_eval_weight_outside_region():
    spec = ProblemSpec.build(phase=X(2) + Y(2), constraints=[X()],
                             disk_radius=Fraction(1, 2))
    with pytest.raises(OutsideRegionError):
        spec.eval_weight((-0.1, 0.0))


def test_slab_rectangle_area():
    # slab entirely inside the disk: mass is the rectangle area 2r * 2c
    v = slab_measure(spec_flat(), (1, 0), 0.01, 0.4)
    assert v == pytest.approx(0.016, rel=1e-6)


def test_slab_sqrt_law():
    v = slab_measure(spec_xhalf(), (1, 0), 0.01, 0.4)
    assert v == pytest.approx(0.32, rel=1e-6)


def test_slab_monotone_in_r():
    spec = spec_xhalf()
    vals = [slab_measure(spec, (0.6, 0.8), r, 0.2) for r in (0.01, 0.02, 0.04)]
    assert vals[0] <= vals[1] <= vals[2]


def test_slab_rejects_bad_geometry():
    with pytest.raises(ValueError):
        slab_measure(spec_flat(), (1, 0), 0.5, 0.1)


def test_total_mass_radial_weight():
    m = total_mass(spec_radial())
    exact = 2 * math.pi * 0.5 ** 0.4 / 0.4
    assert m == pytest.approx(exact, rel=2e-4)


def test_sublevel_disk_area():
    v = sublevel_measure(spec_flat(), 0.01)
    assert v == pytest.approx(math.pi * 0.01, rel=2e-4)


def test_sublevel_radial_weight():
    v = sublevel_measure(spec_radial(), 2 ** -6)
    exact = 2 * math.pi * (2 ** -6) ** 0.2 / 0.4
    assert v == pytest.approx(exact, rel=2e-4)


def test_sublevel_saturation():
    # t above max f: the mass saturates at the total
    spec = spec_flat(radius=Fraction(1, 2))
    v = sublevel_measure(spec, 0.3)
    assert v == pytest.approx(math.pi * 0.25, rel=1e-4)


def test_sublevel_hyperbola_log_law():
    spec = ProblemSpec.build(phase=BivariatePoly({(2, 2): 1}), disk_radius=Fraction(1))
    t = 2.0 ** -8
    s = math.sqrt(t)

    def arm(x):
        return min(math.sqrt(max(1 - x * x, 0.0)), s / x) if x > 0 else 1.0
    oracle = 4 * si.quad(arm, 0, 1, points=[s], limit=400)[0]
    v = sublevel_measure(spec, t)
    assert v == pytest.approx(oracle, rel=2e-3)


def test_parabola_weight_mass():
    spec = ProblemSpec.build(phase=X(2), weights=[(Y() - X(2), Fraction(-4, 5))],
                             disk_radius=Fraction(1, 4))
    R = 0.25

    def inner(x):
        ylim = math.sqrt(R * R - x * x)
        pts = [x * x] if -ylim < x * x < ylim else None
        return si.quad(lambda y: abs(y - x * x) ** -0.8, -ylim, ylim,
                       points=pts, limit=300)[0]
    oracle = si.quad(inner, -R, R, limit=300)[0]
    assert total_mass(spec) == pytest.approx(oracle, rel=1e-3)


def test_lp_norm_divergent():
    assert weight_lp_norm(spec_xhalf(), 3.0) == float("inf")


def test_lp_norm_finite_against_oracle():
    R = 0.5
    integral = si.quad(lambda x: abs(x) ** -0.75 * 2 * math.sqrt(R * R - x * x),
                       -R, R, points=[0], limit=400)[0]
    v = weight_lp_norm(spec_xhalf(), 1.5)
    assert v == pytest.approx(integral ** (1 / 1.5), rel=1e-3)


def test_lp_norm_bounded_weight_sup():
    assert weight_lp_norm(spec_flat(), float("inf")) == pytest.approx(1.0)


def test_nonintegrable_slab():
    spec = ProblemSpec.build(phase=X(2) + Y(2),
                             weights=[(X(), Fraction(-6, 5))],
                             disk_radius=Fraction(1, 2))
    with pytest.raises(NonintegrableWeightError):
        slab_measure(spec, (1, 0), 0.01, 0.2)


def test_divergent_point_weight_detected():
    with pytest.raises(NonintegrableWeightError):
        total_mass(spec_radial(gamma=Fraction(-11, 10)))
