from fractions import Fraction

import pytest

from oscidecay.branches import PuiseuxBranch
from oscidecay.polynomials import BivariatePoly
from oscidecay.puiseux import puiseux_roots, residual_valuation


def P(terms):
    return BivariatePoly(terms)


def terms_of(branch):
    return [(e, c) for e, c in branch.terms]


def test_cusp_branches():
    # y^2 - x^3: two real branches +-x^{3/2}, ramification 2
    res = puiseux_roots(P({(0, 2): 1, (3, 0): -1}), trunc=Fraction(6))
    assert len(res) == 2
    assert sum(r.multiplicity for r in res) == 2
    coeffs = sorted(float(c) for r in res for e, c in r.branch.terms)
    assert coeffs == pytest.approx([-1.0, 1.0])
    for r in res:
        assert r.branch.ramification == 2
        assert terms_of(r.branch)[0][0] == Fraction(3, 2)


def test_double_branch():
    # (y - x^2)^2: single branch x^2 with multiplicity 2
    res = puiseux_roots((BivariatePoly.y() - BivariatePoly.x(2)) ** 2, trunc=Fraction(6))
    assert len(res) == 1
    assert res[0].multiplicity == 2
    assert terms_of(res[0].branch) == [(Fraction(2), Fraction(1))]


def test_trivial_y():
    res = puiseux_roots(BivariatePoly.y(), trunc=Fraction(4))
    assert len(res) == 1
    assert res[0].branch.is_zero() and res[0].multiplicity == 1


def test_no_real_branches():
    res = puiseux_roots(P({(0, 2): 1, (2, 0): 1}), trunc=Fraction(4))
    assert res == []


def test_branch_with_tail():
    # y^2 = x^2 (1 + x): branches +-x sqrt(1+x) = +-(x + x^2/2 - x^3/8 + ...)
    p = P({(0, 2): 1, (2, 0): -1, (3, 0): -1})
    res = puiseux_roots(p, trunc=Fraction(4))
    assert len(res) == 2
    plus = next(r for r in res if float(r.branch.terms[0][1]) > 0)
    d = dict(plus.branch.terms)
    assert d[Fraction(1)] == Fraction(1)
    assert d[Fraction(2)] == Fraction(1, 2)
    assert d[Fraction(3)] == Fraction(-1, 8)


def test_separating_double_branch():
    # (y - x^2)^2 - x^7: branches x^2 +- x^{7/2}, separation above trunc keeps cluster
    p = (BivariatePoly.y() - BivariatePoly.x(2)) ** 2 - BivariatePoly.x(7)
    res = puiseux_roots(p, trunc=Fraction(3))
    assert len(res) == 1 and res[0].multiplicity == 2
    res2 = puiseux_roots(p, trunc=Fraction(4))
    assert len(res2) == 2
    exps = sorted(e for r in res2 for e, _ in r.branch.terms)
    assert Fraction(7, 2) in exps


def test_irrational_branch_coefficients():
    # y^2 - 2x^2: branches +-sqrt(2) x
    res = puiseux_roots(P({(0, 2): 1, (2, 0): -2}), trunc=Fraction(4))
    assert len(res) == 2
    vals = sorted(float(c) for r in res for _, c in r.branch.terms)
    assert vals == pytest.approx([-(2 ** 0.5), 2 ** 0.5])


def test_mixed_branches():
    # y(y - x)(y - 2x) + tiny high-order term keeps three simple branches
    p = BivariatePoly.y() * (BivariatePoly.y() - BivariatePoly.x()) * \
        (BivariatePoly.y() - 2 * BivariatePoly.x())
    res = puiseux_roots(p, trunc=Fraction(5))
    assert len(res) == 3
    leads = sorted(float(r.branch.eval(0.01) / 0.01) for r in res)
    assert leads == pytest.approx([0.0, 1.0, 2.0], abs=1e-9)


def test_residual_valuation_exceeds_trunc():
    cases = [
        P({(0, 2): 1, (3, 0): -1}),
        (BivariatePoly.y() - BivariatePoly.x(2)) ** 2,
        P({(0, 2): 1, (2, 0): -1, (3, 0): -1}),
    ]
    for p in cases:
        for r in puiseux_roots(p, trunc=Fraction(5)):
            val = residual_valuation(p, r.branch)
            assert val is None or val > Fraction(5)


def test_nested_ramification():
    # (y^2 - x^3)(y - x) : branches x, +-x^{3/2}
    p = P({(0, 2): 1, (3, 0): -1}) * (BivariatePoly.y() - BivariatePoly.x())
    res = puiseux_roots(p, trunc=Fraction(5))
    assert len(res) == 3
    assert sum(r.multiplicity for r in res) == 3
