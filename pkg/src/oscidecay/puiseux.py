"""Newton-Puiseux expansion of real branches of a plane curve.

Given a bivariate polynomial p with p(0,0) = 0, compute the real Puiseux
branches y = k(x) tending to 0 as x -> 0+, truncated to a requested order,
together with multiplicities.  The recursion works on y-polynomials whose
coefficients are Puiseux polynomials in x; arithmetic stays in exact
rationals until an irrational edge root forces a float path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
import sympy

from .branches import PuiseuxBranch, PuiseuxPoly, shift_ypoly
from .polynomials import BivariatePoly

_U = sympy.Symbol("u")


class TruncationExhaustedError(RuntimeError):
    pass


@dataclass(frozen=True)
class BranchResult:
    branch: PuiseuxBranch
    multiplicity: int


def _ypoly_from_bivariate(p: BivariatePoly) -> list[PuiseuxPoly]:
    cols = p.y_coefficients()
    return [PuiseuxPoly.from_x_poly(c) for c in cols] or [PuiseuxPoly.zero()]


def _lower_hull(points):
    pts = sorted(points)
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (j1, v1), (j2, v2) = hull[-2], hull[-1]
            if (v2 - v1) * (p[0] - j1) >= (p[1] - v1) * (j2 - j1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def polygon_edges(ycoeffs):
    """Descending edges of the (j, valuation) lower hull.

    Returns a list of (s, points): s > 0 is the branch exponent carried by
    the edge, points the support points (j, v) on the edge line.
    """
    pts = []
    for j, c in enumerate(ycoeffs):
        v = c.valuation()
        if v is not None:
            pts.append((j, v))
    hull = _lower_hull(pts)
    edges = []
    for (j1, v1), (j2, v2) in zip(hull, hull[1:]):
        if v1 > v2:
            s = (v1 - v2) / (j2 - j1)
            on_edge = [(j, v) for j, v in pts if v + s * j == v1 + s * j1]
            edges.append((s, on_edge))
    return edges


def _edge_poly_roots(edge_points, ycoeffs):
    """Real nonzero roots (value, multiplicity) of the edge polynomial."""
    lead = {}
    exact = True
    for j, v in edge_points:
        c = ycoeffs[j].coeffs.get(v)
        if c is None:
            continue
        lead[j] = c
        exact = exact and isinstance(c, (int, Fraction))
    j_min = min(lead)
    if exact:
        expr = sum(sympy.Rational(Fraction(c).numerator, Fraction(c).denominator)
                   * _U ** (j - j_min) for j, c in lead.items())
        poly = sympy.Poly(expr, _U)
        if poly.degree() <= 0:
            return []
        roots_list = poly.real_roots()
        grouped = []
        for r in roots_list:
            if grouped and r == grouped[-1][0]:
                grouped[-1][1] += 1
            else:
                grouped.append([r, 1])
        out = []
        for r, m in grouped:
            if r == 0:
                continue
            if r.is_Rational:
                val = Fraction(int(r.p), int(r.q))
            else:
                val = mpmath.mpf(str(r.evalf(max(25, mpmath.mp.dps))))
            out.append((val, m))
        return out
    coeffs = [float(lead.get(j, 0.0)) for j in range(j_min, max(lead) + 1)]
    return _numeric_roots(coeffs)


def _numeric_roots(ascending_coeffs):
    """Cluster numpy roots of a float polynomial into (value, multiplicity)."""
    arr = np.array(ascending_coeffs[::-1], dtype=float)
    nz = np.flatnonzero(np.abs(arr) > 0)
    if len(nz) == 0 or nz[0] == len(arr) - 1:
        return []
    arr = arr[nz[0]:]
    roots = np.roots(arr)
    if len(roots) == 0:
        return []
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-9 * scale)
    out = []
    for r in real:
        if out and abs(r - out[-1][0]) <= 1e-7 * scale:
            v, m = out[-1]
            out[-1] = ((v * m + r) / (m + 1), m + 1)
        else:
            out.append((r, 1))
    return [(v, m) for v, m in out if abs(v) > 1e-12 * scale]


def _expand(ycoeffs, e_floor: Fraction, trunc: Fraction, depth: int,
            max_depth: int):
    """Yield (terms dict, multiplicity) for branches with exponents > e_floor."""
    if depth > max_depth:
        raise TruncationExhaustedError(
            f"branch separation exceeded recursion cap {max_depth}")
    out = []
    j0 = None
    for j, c in enumerate(ycoeffs):
        if not c.is_zero():
            j0 = j
            break
    if j0 is None:
        raise ValueError("zero polynomial in branch expansion")
    if j0 > 0:
        out.append(({}, j0))
        ycoeffs = ycoeffs[j0:]
    for s, edge_points in polygon_edges(ycoeffs):
        if s <= e_floor:
            continue
        roots = _edge_poly_roots(edge_points, ycoeffs)
        if s > trunc:
            # branches exist but all their terms lie beyond the truncation
            for _root, mult in roots:
                out.append(({}, mult))
            continue
        for root, mult in roots:
            shifted = shift_ypoly(ycoeffs, PuiseuxPoly.term(root, s), 1)
            if mult == 1:
                tail = _regular_continuation(shifted, s, trunc)
                out.append(({s: root, **tail}, 1))
            else:
                bound = trunc * max(1, len(ycoeffs)) + max(v for _, v in edge_points) + 4
                pruned = [c.truncate(bound) for c in shifted]
                for sub_terms, sub_mult in _expand(pruned, s, trunc,
                                                   depth + 1, max_depth):
                    terms = {s: root}
                    terms.update(sub_terms)
                    out.append((terms, sub_mult))
    return out


def _regular_continuation(ycoeffs, e_prev: Fraction, trunc: Fraction) -> dict:
    """Term-by-term continuation of a simple branch by linear solves."""
    terms = {}
    cur = list(ycoeffs)
    guard = 0
    while True:
        guard += 1
        if guard > 500:
            raise TruncationExhaustedError("branch continuation did not terminate")
        c0 = cur[0]
        if c0.is_zero() or len(cur) == 1:
            return terms
        v0 = c0.valuation()
        c1 = cur[1]
        v1 = c1.valuation()
        if v1 is None:
            return terms
        e_next = v0 - v1
        if e_next > trunc:
            return terms
        if e_next <= e_prev:
            raise TruncationExhaustedError(
                "continuation produced non-increasing exponent (root not simple)")
        coeff = _neg_div(c0.coeffs[v0], c1.coeffs[v1])
        terms[e_next] = coeff
        cur = shift_ypoly(cur, PuiseuxPoly.term(coeff, e_next), 1)
        cur = [c.truncate(trunc + v1 + 4) for c in cur]
        e_prev = e_next


def _neg_div(a, b):
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return -Fraction(a) / Fraction(b)
    return -float(a) / float(b)


def puiseux_roots(p: BivariatePoly, trunc=Fraction(8), *, max_ram: int = 64,
                  max_depth: int = 60, prec_bits: int = 100,
                  validity_radius=Fraction(1, 2)) -> list[BranchResult]:
    """All real Puiseux branches y(x) -> 0 of p over 0 < x < r.

    Each branch is truncated to order `trunc`; the residual p(x, k(x))
    then has valuation exceeding `trunc`.  Multiplicities of the returned
    branches sum to the y-degree of the factor of p carrying real
    vanishing branches.
    """
    if p.is_zero():
        raise ValueError("puiseux_roots of the zero polynomial")
    if p.eval(Fraction(0), Fraction(0)) != 0:
        raise ValueError("puiseux_roots requires p(0,0) = 0")
    trunc = Fraction(trunc)
    ycoeffs = _ypoly_from_bivariate(p)
    merged: dict = {}
    with mpmath.workprec(prec_bits + 30):
        for terms, mult in _expand(ycoeffs, Fraction(0), trunc, 0, max_depth):
            branch = PuiseuxBranch.from_terms(
                terms.items(), truncation_order=trunc,
                validity_radius=Fraction(validity_radius))
            if branch.ramification > max_ram:
                raise TruncationExhaustedError(
                    f"ramification {branch.ramification} exceeds cap {max_ram}")
            key = branch.terms
            if key in merged:
                merged[key] = BranchResult(branch, merged[key].multiplicity + mult)
            else:
                merged[key] = BranchResult(branch, mult)
    results = list(merged.values())
    results.sort(key=lambda br: (0 if br.branch.is_zero() else 1,
                                 [(float(e), float(c)) for e, c in br.branch.terms]))
    return results


def residual_valuation(p: BivariatePoly, branch: PuiseuxBranch) -> Fraction | None:
    """Valuation of p(x, k(x)) for a truncated branch (None if identically 0)."""
    ycoeffs = _ypoly_from_bivariate(p)
    shifted = shift_ypoly(ycoeffs, branch.as_poly(), 1)
    return shifted[0].valuation()
