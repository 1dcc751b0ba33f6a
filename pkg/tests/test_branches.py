from fractions import Fraction

import pytest
import sympy

from oscidecay.branches import (InsufficientTruncationError,
                                OutsideValidityRadiusError, PuiseuxBranch,
                                PuiseuxPoly, eval_branch, substitute_branch)
from oscidecay.polynomials import BivariatePoly


def test_branch_invariants():
    with pytest.raises(ValueError):
        PuiseuxBranch(2, ((Fraction(3, 2), 1.0), (Fraction(1, 2), 1.0)), Fraction(2))
    with pytest.raises(ValueError):
        PuiseuxBranch(2, ((Fraction(1, 3), 1.0),), Fraction(2))
    with pytest.raises(ValueError):
        PuiseuxBranch(2, ((Fraction(3, 2), 1.0),), Fraction(1))


def test_eval_branch_simple():
    k = PuiseuxBranch.from_terms([(2, Fraction(1))], truncation_order=4)
    value, bound = eval_branch(k, 0.5)
    assert value == pytest.approx(0.25)
    assert bound >= 0


def test_eval_branch_zero():
    z = PuiseuxBranch.zero()
    assert eval_branch(z, 0.3) == (0.0, 0.0)


def test_eval_branch_outside_radius():
    k = PuiseuxBranch.from_terms([(2, 1)], truncation_order=4, validity_radius=Fraction(1, 4))
    with pytest.raises(OutsideValidityRadiusError):
        eval_branch(k, 0.9)


def test_eval_branch_binomial_oracle():
    # branch of y^2 = x^2 (1 + x): k = x + x^2/2 - x^3/8 + ...
    k = PuiseuxBranch.from_terms(
        [(1, Fraction(1)), (2, Fraction(1, 2)), (3, Fraction(-1, 8))],
        truncation_order=4)
    value, bound = eval_branch(k, 0.1)
    assert value == pytest.approx(0.104875, abs=1e-12)
    exact = 0.1 * (1.1) ** 0.5
    assert abs(value - exact) <= max(bound, 1e-4)
    assert bound <= 2.0 * 0.1 ** 4


def test_substitute_branch_exact_square():
    p = (BivariatePoly.y() - BivariatePoly.x(2)) ** 2
    k = PuiseuxBranch.from_terms([(2, Fraction(1))], truncation_order=6)
    shifted = substitute_branch(p, k, sign=1)
    # result must be exactly y^2
    assert shifted.coefficient(0).is_zero()
    assert shifted.coefficient(1).is_zero()
    assert shifted.coefficient(2) == PuiseuxPoly.constant(Fraction(1))


def test_substitute_branch_identity():
    p = BivariatePoly.y()
    z = PuiseuxBranch.zero()
    shifted = substitute_branch(p, z, sign=1)
    assert shifted.coefficient(0).is_zero()
    assert shifted.coefficient(1) == PuiseuxPoly.constant(Fraction(1))


def test_substitute_branch_ramified():
    # p = y^2 - x^3, k = x^{3/2}: expect y^2 + 2 x^{3/2} y
    p = BivariatePoly.y(2) - BivariatePoly.x(3)
    k = PuiseuxBranch.from_terms([(Fraction(3, 2), Fraction(1))], truncation_order=4)
    shifted = substitute_branch(p, k, sign=1)
    assert shifted.coefficient(0).is_zero()
    assert shifted.coefficient(1) == PuiseuxPoly.term(Fraction(2), Fraction(3, 2))
    assert shifted.coefficient(2) == PuiseuxPoly.constant(Fraction(1))


def test_substitute_branch_symbolic_oracle():
    x, y = sympy.symbols("x y")
    p = BivariatePoly({(0, 3): 1, (2, 1): -2, (5, 0): 3})
    k = PuiseuxBranch.from_terms([(1, Fraction(2)), (3, Fraction(-1, 3))],
                                 truncation_order=9)
    shifted = substitute_branch(p, k, sign=-1)
    y_sub = -y + 2 * x - sympy.Rational(1, 3) * x**3
    target = sympy.expand(y_sub**3 - 2 * x**2 * y_sub + 3 * x**5)
    got = sum(
        sum(sympy.Rational(Fraction(c).numerator, Fraction(c).denominator) * x**sympy.Rational(e.numerator, e.denominator)
            for e, c in coeff.coeffs.items())
        * y**j
        for j, coeff in enumerate(shifted.coeffs))
    assert sympy.expand(got - target) == 0


def test_substitute_branch_truncation_error():
    p = BivariatePoly.y()
    k = PuiseuxBranch.from_terms([(2, 1)], truncation_order=4)
    with pytest.raises(InsufficientTruncationError):
        substitute_branch(p, k, trunc=6)


def test_branch_json_round_trip():
    k = PuiseuxBranch.from_terms([(Fraction(3, 2), Fraction(5, 4)), (2, 0.125)],
                                 truncation_order=3, validity_radius=Fraction(1, 2))
    again = PuiseuxBranch.from_json(k.to_json())
    assert again.ramification == k.ramification
    assert again.truncation_order == k.truncation_order
    assert [(e, float(c)) for e, c in again.terms] == [(e, float(c)) for e, c in k.terms]
