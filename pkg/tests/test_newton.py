from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscidecay.newton import (ZeroPolynomialError, exceptional_directions,
                              lowest_homogeneous, newton_polygon,
                              pick_triangle_slopes, vertex_dominates)
from oscidecay.polynomials import BivariatePoly
from oscidecay.problem import ProblemSpec


def P(terms):
    return BivariatePoly(terms)


def test_polygon_monomial():
    np_ = newton_polygon(P({(3, 2): 1}))
    assert np_.vertices == ((3, 2),)
    assert np_.newton_distance == 3


def test_polygon_two_vertices_and_distance():
    np_ = newton_polygon(P({(2, 1): 1, (0, 4): 1}))
    assert np_.vertices == ((0, 4), (2, 1))
    assert np_.newton_distance == Fraction(8, 5)


def test_polygon_interior_point_dropped():
    np_ = newton_polygon(P({(3, 0): 1, (2, 1): 1, (0, 2): 1}))
    assert np_.vertices == ((0, 2), (3, 0))


def test_polygon_zero_rejected():
    with pytest.raises(ZeroPolynomialError):
        newton_polygon(BivariatePoly.zero())


def test_polygon_edge_slopes_increase():
    np_ = newton_polygon(P({(0, 6): 1, (1, 2): 1, (4, 0): 1}))
    slopes = [e.slope for e in np_.edges]
    assert slopes == sorted(slopes)
    assert all(s2 > s1 for s1, s2 in zip(slopes, slopes[1:]))


sparse = st.dictionaries(
    st.tuples(st.integers(0, 6), st.integers(0, 6)),
    st.integers(1, 9), min_size=1, max_size=5,
).map(lambda d: BivariatePoly({k: Fraction(v) for k, v in d.items()}))


@settings(max_examples=50, deadline=None)
@given(sparse, sparse)
def test_polygon_product_is_minkowski_sum(p, q):
    vp = newton_polygon(p).vertices
    vq = newton_polygon(q).vertices
    sums = {(a1 + a2, b1 + b2) for a1, b1 in vp for a2, b2 in vq}
    prod_vertices = set(newton_polygon(p * q).vertices)
    # vertices of the product polygon are Minkowski sums of vertex pairs
    assert prod_vertices <= sums


@settings(max_examples=50, deadline=None)
@given(sparse)
def test_polygon_interior_term_invariance(p):
    np1 = newton_polygon(p)
    a0, b0 = np1.vertices[0]
    bumped = p + BivariatePoly.monomial(a0 + 1, b0 + 1, Fraction(7))
    np2 = newton_polygon(bumped)
    assert np1.vertices == np2.vertices


def test_lowest_homogeneous_basic():
    o, H, lines = lowest_homogeneous(P({(2, 0): 1, (0, 3): 1}))
    assert o == 2 and H == P({(2, 0): 1})
    assert len(lines) == 1 and lines[0].kind == "vertical"


def test_lowest_homogeneous_xy():
    o, H, lines = lowest_homogeneous(P({(1, 1): 1, (3, 0): 1}))
    assert o == 2 and H == P({(1, 1): 1})
    kinds = sorted(ln.kind for ln in lines)
    assert kinds == ["slope", "vertical"]
    slopes = [ln.slope for ln in lines if ln.kind == "slope"]
    assert slopes == [0]


def test_lowest_homogeneous_hyperbola():
    o, H, lines = lowest_homogeneous(P({(2, 0): 1, (0, 2): -1}))
    assert o == 2
    got = sorted(ln.slope for ln in lines if ln.kind == "slope")
    assert got == [-1, 1]


@settings(max_examples=40, deadline=None)
@given(sparse, sparse)
def test_lowest_homogeneous_order_additive(p, q):
    o1, _, _ = lowest_homogeneous(p)
    o2, _, _ = lowest_homogeneous(q)
    o12, _, _ = lowest_homogeneous(p * q)
    assert o12 == o1 + o2


def _disk_spec(weights, constraints=()):
    return ProblemSpec.build(
        phase=P({(2, 0): 1, (0, 2): 1}), weights=weights,
        constraints=constraints, disk_radius=Fraction(1, 2))


def test_exceptional_directions_vertical_line():
    spec = _disk_spec([(P({(1, 0): 1}), Fraction(-1, 2))])
    dirs = exceptional_directions(spec)
    assert len(dirs) == 1
    assert dirs[0] == pytest.approx((1.0, 0.0))


def test_exceptional_directions_empty_for_definite_weight():
    spec = _disk_spec([(P({(2, 0): 1, (0, 2): 1}), Fraction(-1, 2))])
    assert exceptional_directions(spec) == []


def test_exceptional_directions_curve_tangent_to_axis():
    spec = _disk_spec([(P({(0, 1): 1, (3, 0): -1}), Fraction(-1, 2))])
    dirs = exceptional_directions(spec)
    assert len(dirs) == 1
    assert dirs[0][0] == pytest.approx(0.0)
    assert abs(dirs[0][1]) == pytest.approx(1.0)


def test_pick_triangle_slopes_radial():
    split = pick_triangle_slopes(P({(2, 0): 1, (0, 2): 1}), seed=0)
    assert split.slope_pos > 0 > split.slope_neg


def test_pick_triangle_slopes_avoids_hyperbola_lines():
    for seed in range(6):
        split = pick_triangle_slopes(P({(2, 0): 1, (0, 2): -1}), seed=seed)
        assert abs(split.slope_pos) != 1 and abs(split.slope_neg) != 1


@settings(max_examples=30, deadline=None)
@given(sparse, st.integers(0, 1000))
def test_pick_triangle_slopes_never_on_zero_line(p, seed):
    split = pick_triangle_slopes(p, seed=seed)
    _, H, lines = lowest_homogeneous(p)
    for ln in lines:
        if ln.kind != "slope" or ln.slope is None:
            continue
        assert split.slope_pos != ln.slope and split.slope_neg != ln.slope


def test_vertex_dominates_pure_power():
    assert vertex_dominates(P({(2, 0): 1}), 2)


def test_vertex_dominates_with_mixed_term():
    # (1,1) satisfies 1 + 2*1 = 3 > 2, strictly above the supporting line
    assert vertex_dominates(P({(2, 0): 1, (1, 1): 1}), 2)


def test_vertex_dominates_cusp():
    # line a + 3b = 3 meets the polygon of x^3 + y^2 only at (3, 0):
    # (0,2) gives 6 > 3, so the vertex dominates
    assert vertex_dominates(P({(3, 0): 1, (0, 2): 1}), 3)


def test_vertex_dominates_fails_without_support():
    assert not vertex_dominates(P({(1, 1): 1}), 2)
    # (0,1) on the line a + 2b = 2: domination fails
    assert not vertex_dominates(P({(2, 0): 1, (0, 1): 1}), 2)


def test_wedge_maps_consistent():
    split = pick_triangle_slopes(P({(2, 0): 1, (0, 2): 1}), seed=0)
    for idx in range(8):
        b = float(split.wedge_bound(idx))
        X, Y = 0.2, 0.1 * b
        x, y = split.from_wedge(idx, X, Y)
        X2, Y2 = split.to_wedge(idx, x, y)
        assert (X2, Y2) == pytest.approx((X, Y))
        p = P({(1, 0): 2, (0, 1): 3})
        refl = split.reflect_poly(idx, p)
        assert refl.eval(X, Y) == pytest.approx(p.eval(x, y))
