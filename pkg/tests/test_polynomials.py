from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oscidecay.polynomials import BivariatePoly, derive

X, Y = sympy.symbols("x y")


def to_sympy(p: BivariatePoly):
    return sum(sympy.Rational(c.numerator, c.denominator) * X**a * Y**b
               for (a, b), c in p.terms.items())


def from_sympy(expr) -> BivariatePoly:
    poly = sympy.Poly(sympy.expand(expr), X, Y)
    return BivariatePoly({(a, b): Fraction(int(sympy.nsimplify(c).p), int(sympy.nsimplify(c).q))
                          for (a, b), c in zip(poly.monoms(), poly.coeffs())})


def test_derive_power_rule():
    p = BivariatePoly.monomial(2, 1)           # x^2 y
    assert derive(p, 1, 0) == BivariatePoly({(1, 1): 2})


def test_derive_order_exceeds_degree():
    p = BivariatePoly.monomial(2, 1)
    assert derive(p, 0, 2).is_zero()


def test_derive_mixed_against_symbolic_oracle():
    p = BivariatePoly({(3, 0): 1, (2, 5): 1})   # x^3 + x^2 y^5
    got = derive(p, 2, 1)
    expected = from_sympy(sympy.diff(to_sympy(p), X, 2, Y, 1))
    assert got == expected
    assert got == BivariatePoly({(0, 4): 10})


random_polys = st.dictionaries(
    st.tuples(st.integers(0, 5), st.integers(0, 5)),
    st.fractions(min_value=-10, max_value=10).filter(lambda f: f != 0),
    min_size=1, max_size=6,
).map(BivariatePoly)


@settings(max_examples=60, deadline=None)
@given(random_polys)
def test_derive_commutes(p):
    assert derive(derive(p, 1, 0), 0, 1) == derive(p, 1, 1)


@settings(max_examples=40, deadline=None)
@given(random_polys, random_polys)
def test_product_against_symbolic(p, q):
    assert to_sympy(p * q).equals(sympy.expand(to_sympy(p) * to_sympy(q)))


def test_eval_exact():
    p = BivariatePoly({(2, 0): 1, (0, 2): 1})
    assert p.eval(Fraction(1, 2), Fraction(1, 2)) == Fraction(1, 2)


def test_compose_linear_reflection():
    p = BivariatePoly({(1, 0): 1, (0, 2): 3})       # x + 3y^2
    q = p.compose_linear(0, 1, 1, 0)                 # swap x and y
    assert q == BivariatePoly({(0, 1): 1, (2, 0): 3})


def test_json_round_trip():
    p = BivariatePoly({(2, 1): Fraction(-3, 7), (0, 0): 0, (1, 1): 2})
    assert BivariatePoly.from_json(p.to_json()) == p


def test_no_zero_coefficients_stored():
    p = BivariatePoly({(1, 1): 1}) - BivariatePoly({(1, 1): 1})
    assert p.is_zero() and p.terms == {}


def test_range_bound_contains_samples():
    import numpy as np
    p = BivariatePoly({(2, 0): 1, (1, 1): -3, (0, 3): 2})
    lo, hi = p.range_bound(-0.5, 0.7, -0.2, 0.9)
    xs = np.linspace(-0.5, 0.7, 23)
    ys = np.linspace(-0.2, 0.9, 23)
    Xg, Yg = np.meshgrid(xs, ys)
    vals = p.eval_grid(Xg, Yg)
    assert lo <= vals.min() + 1e-12 and vals.max() - 1e-12 <= hi
