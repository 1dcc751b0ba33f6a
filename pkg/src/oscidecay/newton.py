"""Newton polygons, lowest homogeneous parts and the eight-triangle split.

All hull and line-side decisions are made in exact rational arithmetic;
zero lines of homogeneous forms come from rational factorization plus
certified real-root isolation, with irrational slopes kept as isolating
intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import hypot

import sympy

from .polynomials import BivariatePoly

_M = sympy.Symbol("m")


class ZeroPolynomialError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    start: tuple        # (a, b) with smaller a
    end: tuple
    slope: Fraction     # s in the supporting line a + s*b = t

    @property
    def line_value(self) -> Fraction:
        a, b = self.start
        return Fraction(a) + self.slope * b


@dataclass(frozen=True)
class NewtonPolygon:
    vertices: tuple     # increasing a, decreasing b
    edges: tuple
    newton_distance: Fraction

    def line_min(self, s: Fraction) -> Fraction:
        """min of a + s*b over the polygon (attained at a vertex)."""
        return min(Fraction(a) + Fraction(s) * b for a, b in self.vertices)

    def to_json(self):
        return {
            "vertices": [[a, b] for a, b in self.vertices],
            "edges": [{"start": list(e.start), "end": list(e.end),
                       "slope": str(e.slope)} for e in self.edges],
            "newton_distance": str(self.newton_distance),
        }


def newton_polygon(p: BivariatePoly) -> NewtonPolygon:
    """Lower-left hull of the support under the first-quadrant cone."""
    if p.is_zero():
        raise ZeroPolynomialError("newton_polygon of the zero polynomial")
    pts = sorted(p.support())
    # Pareto frontier: drop points dominated in both coordinates.
    frontier = []
    best_b = None
    for a, b in pts:
        if best_b is None or b < best_b:
            frontier.append((a, b))
            best_b = b
    # Convex: keep only extreme points of the staircase hull.
    hull = []
    for pt in frontier:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    vertices = tuple(hull)
    edges = []
    for (a1, b1), (a2, b2) in zip(vertices, vertices[1:]):
        s = Fraction(a2 - a1, b1 - b2)
        edges.append(Edge((a1, b1), (a2, b2), s))
    return NewtonPolygon(vertices, tuple(edges), _newton_distance(vertices, edges))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _newton_distance(vertices, edges) -> Fraction:
    """Coordinate t of the bisectrix point (t, t) on the polygon boundary."""
    a0, b0 = vertices[0]
    aN, bN = vertices[-1]
    # Left vertical ray {a = a0, b >= b0}: hit if a0 >= b0.
    if a0 >= b0:
        return Fraction(a0)
    # Bottom horizontal ray {b = bN, a >= aN}: hit if bN >= aN.
    if bN >= aN:
        return Fraction(bN)
    for e in edges:
        t = e.line_value / (1 + e.slope)
        (a1, b1), (a2, b2) = e.start, e.end
        if min(b2, b1) <= t <= max(b2, b1) and min(a1, a2) <= t <= max(a1, a2):
            return t
    # Fall back to the closest vertex on the bisectrix side (degenerate hulls).
    return min(Fraction(max(a, b)) for a, b in vertices)


@dataclass(frozen=True)
class ZeroLine:
    """A line through the origin in the zero set of a homogeneous form."""

    kind: str                    # "slope" or "vertical"
    slope: Fraction | None       # exact when rational
    interval: tuple | None       # isolating (lo, hi) Fractions for irrational slopes
    approx: float

    def direction(self) -> tuple:
        if self.kind == "vertical":
            return (0.0, 1.0)
        n = hypot(1.0, self.approx)
        return (1.0 / n, self.approx / n)

    def perpendicular(self) -> tuple:
        dx, dy = self.direction()
        v = (-dy, dx)
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = (-v[0], -v[1])
        return v


def lowest_homogeneous(p: BivariatePoly):
    """(order, homogeneous form H, zero lines of H through the origin)."""
    if p.is_zero():
        raise ZeroPolynomialError("lowest_homogeneous of the zero polynomial")
    order = min(a + b for a, b in p.support())
    H = BivariatePoly({(a, b): c for (a, b), c in p.terms.items() if a + b == order})
    lines = []
    if all(a >= 1 for a, _ in H.support()):
        lines.append(ZeroLine("vertical", None, None, float("inf")))
    # Dehomogenize along y = m x: H(1, m).
    poly_m = sum(sympy.Rational(c.numerator, c.denominator) * _M**b
                 for (a, b), c in H.terms.items())
    poly_m = sympy.Poly(poly_m, _M)
    if poly_m.degree() > 0:
        for (lo, hi), _count in poly_m.intervals(eps=sympy.Rational(1, 10**9)):
            lo_f, hi_f = Fraction(str(lo)), Fraction(str(hi))
            if lo_f == hi_f:
                lines.append(ZeroLine("slope", lo_f, (lo_f, hi_f), float(lo_f)))
            else:
                mid = (lo_f + hi_f) / 2
                lines.append(ZeroLine("slope", None, (lo_f, hi_f), float(mid)))
    return order, H, lines


def exceptional_directions(spec) -> list:
    """Unit vectors perpendicular to zero lines of the lowest parts of the
    weights and of the constraints (the latter standing in for tangent
    lines of E at the origin, exact for polynomial sector-type regions)."""
    dirs = []
    polys = [h for h, _ in spec.weights] + [q for q in spec.constraints
                                            if q.eval(Fraction(0), Fraction(0)) == 0]
    for p in polys:
        if p.is_zero():
            continue
        _, _, lines = lowest_homogeneous(p)
        for line in lines:
            dirs.append(line.perpendicular())
    out = []
    for v in dirs:
        if not any(abs(v[0] - w[0]) < 1e-12 and abs(v[1] - w[1]) < 1e-12 for w in out):
            out.append(v)
    return out


# -- eight-triangle split ---------------------------------------------------

#: The eight dihedral maps sending the standard wedge into each triangle.
#: Each entry ((m11, m12), (m21, m22)) maps wedge coords (X, Y) to the
#: original plane by (x, y) = (m11*X + m12*Y, m21*X + m22*Y).
REFLECTIONS = (
    ((1, 0), (0, 1)),      # 0: first quadrant, below y = m+ x
    ((0, 1), (1, 0)),      # 1: first quadrant, above y = m+ x (swap)
    ((-1, 0), (0, 1)),     # 2: second quadrant, below y = |m-| |x|
    ((0, -1), (1, 0)),     # 3: second quadrant, steep part
    ((-1, 0), (0, -1)),    # 4: third quadrant, shallow
    ((0, -1), (-1, 0)),    # 5: third quadrant, steep
    ((1, 0), (0, -1)),     # 6: fourth quadrant, shallow
    ((0, 1), (-1, 0)),     # 7: fourth quadrant, steep
)


@dataclass(frozen=True)
class TriangleSplit:
    slope_pos: Fraction
    slope_neg: Fraction
    reflections: tuple = REFLECTIONS

    def wedge_bound(self, index: int) -> Fraction:
        """Slope bound b of the standard wedge {0 < Y < b X} for triangle index."""
        if index in (0, 2, 4, 6):
            return abs(self.slope_pos) if index in (0, 4) else abs(self.slope_neg)
        return 1 / (abs(self.slope_pos) if index in (1, 5) else abs(self.slope_neg))

    def to_wedge(self, index: int, x: float, y: float):
        """Original point -> wedge coordinates (inverse of the reflection)."""
        (m11, m12), (m21, m22) = self.reflections[index]
        det = m11 * m22 - m12 * m21
        X = (m22 * x - m12 * y) / det
        Y = (-m21 * x + m11 * y) / det
        return X, Y

    def from_wedge(self, index: int, X, Y):
        (m11, m12), (m21, m22) = self.reflections[index]
        return m11 * X + m12 * Y, m21 * X + m22 * Y

    def reflect_poly(self, index: int, p: BivariatePoly) -> BivariatePoly:
        """p composed with the reflection: the function seen in wedge coords."""
        (m11, m12), (m21, m22) = self.reflections[index]
        return p.compose_linear(m11, m12, m21, m22)


_SLOPE_CANDIDATES = [Fraction(n, d) for n, d in
                     [(1, 1), (2, 1), (1, 2), (3, 1), (1, 3), (3, 2), (2, 3),
                      (4, 1), (1, 4), (5, 2), (2, 5), (5, 3), (3, 5), (7, 4)]]


def pick_triangle_slopes(product: BivariatePoly, seed: int = 0) -> TriangleSplit:
    """Rational slopes m+ > 0 > m- avoiding the zero lines of the lowest
    homogeneous part of the product polynomial; deterministic in the seed."""
    if product.is_zero():
        raise ZeroPolynomialError("cannot pick slopes for the zero polynomial")
    _, _, lines = lowest_homogeneous(product)
    taboo = [ln for ln in lines if ln.kind == "slope"]

    def ok(m: Fraction) -> bool:
        for ln in taboo:
            if ln.slope is not None and (m == ln.slope or m == -ln.slope):
                return False
            if ln.interval is not None:
                lo, hi = ln.interval
                if lo <= m <= hi or lo <= -m <= hi:
                    return False
        return True

    cands = list(_SLOPE_CANDIDATES)
    offset = seed % len(cands)
    cands = cands[offset:] + cands[:offset]
    m_pos = next(m for m in cands if ok(m))
    m_neg = next(-m for m in cands if ok(-m))
    return TriangleSplit(m_pos, m_neg)


def vertex_dominates(p: BivariatePoly, s: Fraction) -> bool:
    """True iff (s, 0) is in the support and the line a + s*b = s touches
    the Newton polygon only there (every other support point strictly above)."""
    if p.is_zero():
        raise ZeroPolynomialError("vertex_dominates of the zero polynomial")
    s = Fraction(s)
    if s.denominator != 1 or (int(s), 0) not in p.terms:
        return False
    s_int = int(s)
    for a, b in p.support():
        if (a, b) == (s_int, 0):
            continue
        if Fraction(a) + s * b <= s:
            return False
    return True
