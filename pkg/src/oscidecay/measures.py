"""Weighted measures: slab masses, sublevel masses and L^p norms.

Everything funnels into quadrature.measure_integral on a compiled form of
the problem: float coefficient matrices for the constraints and weight
factors plus precomputed outer structure points (x-values where a weight
factor is singular along a vertical line, carrying a Jacobi exponent, or
where its zero set degenerates, triggering graded refinement).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy

from .polynomials import BivariatePoly
from .problem import ProblemSpec
from .quadrature import (Integrand, NonintegrableWeightError, WeightFactor,
                         measure_integral)

_X, _Y = sympy.symbols("x y")

DEFAULT_REL_TOL = 1e-4


def _to_sympy(p: BivariatePoly):
    return sum(sympy.Rational(c.numerator, c.denominator) * _X**a * _Y**b
               for (a, b), c in p.terms.items())


@lru_cache(maxsize=256)
def x_structure(p: BivariatePoly):
    """Structure x-values of the zero set of an exact polynomial.

    Returns (content_roots, other_roots): content_roots are (x*, mult) for
    vertical-line components; other_roots are x-values where the y-root
    structure of p degenerates (discriminant or leading-coefficient zeros).
    """
    expr = _to_sympy(p)
    if p.y_degree() == 0:
        poly = sympy.Poly(expr, _X)
        if poly.degree() <= 0:
            return (), ()
        roots = []
        prev = None
        for r in poly.real_roots():
            if prev is not None and r == prev[0]:
                prev[1] += 1
            else:
                if prev is not None:
                    roots.append((float(prev[0]), prev[1]))
                prev = [r, 1]
        if prev is not None:
            roots.append((float(prev[0]), prev[1]))
        return tuple(roots), ()
    poly_xy = sympy.Poly(expr, _Y)
    ycoeffs = poly_xy.all_coeffs()
    content = sympy.gcd_list(ycoeffs)
    content_roots = []
    cpoly = sympy.Poly(content, _X)
    if cpoly.degree() > 0:
        prev = None
        for r in cpoly.real_roots():
            if prev is not None and r == prev[0]:
                prev[1] += 1
            else:
                if prev is not None:
                    content_roots.append((float(prev[0]), prev[1]))
                prev = [r, 1]
        if prev is not None:
            content_roots.append((float(prev[0]), prev[1]))
    others = set()
    primitive = sympy.simplify(expr / content) if content != 1 else expr
    try:
        disc = sympy.discriminant(sympy.Poly(primitive, _Y), _Y)
        dpoly = sympy.Poly(disc, _X)
        if dpoly.degree() > 0:
            others.update(float(r) for r in dpoly.real_roots())
    except sympy.PolynomialError:
        pass
    lead = sympy.Poly(primitive, _Y).all_coeffs()[0]
    lpoly = sympy.Poly(lead, _X)
    if lpoly.degree() > 0:
        others.update(float(r) for r in lpoly.real_roots())
    return tuple(content_roots), tuple(sorted(others))


def _disk_poly_cm(R: float) -> np.ndarray:
    cm = np.zeros((3, 3))
    cm[0, 0] = R * R
    cm[2, 0] = -1.0
    cm[0, 2] = -1.0
    return cm


def compile_integrand(spec: ProblemSpec, extra_constraints=(), weight_power: float = 1.0,
                      phase=None) -> Integrand:
    constraints = [_disk_poly_cm(float(spec.disk_radius))]
    constraints += [q.coeff_matrix() for q in spec.constraints]
    constraints += [np.asarray(c, dtype=float) for c in extra_constraints]
    weights = tuple(WeightFactor(h.coeff_matrix(), float(g) * weight_power)
                    for h, g in spec.weights)
    return Integrand(tuple(constraints), weights, spec.amplitude.coeff_matrix(),
                     phase)


def outer_candidates(spec: ProblemSpec, weight_power: float = 1.0, lo=None, hi=None):
    """Outer x structure points for the spec's weight factors."""
    cands = {}
    for h, g in spec.weights:
        gamma = float(g) * weight_power
        content_roots, others = x_structure(h)
        for x0, mult in content_roots:
            beta = gamma * mult
            if beta != 0.0:
                prev = cands.get(x0)
                cands[x0] = beta + (prev if isinstance(prev, float) else 0.0)
        for x0 in others:
            cands.setdefault(x0, None)
    for q in spec.constraints:
        _croots, others = x_structure(q)
        for x0 in others:
            cands.setdefault(x0, None)
    out = []
    for x0, beta in cands.items():
        if lo is not None and not (lo < x0 < hi):
            continue
        out.append((x0, beta))
    return tuple(sorted(out))


def total_mass(spec: ProblemSpec, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """mu_h(E cap D), the weighted area of the region."""
    R = float(spec.disk_radius)
    integrand = compile_integrand(spec)
    cands = outer_candidates(spec, lo=-R, hi=R)
    value, _err = measure_integral(integrand, -R, R, -R, R, rel_tol=rel_tol,
                                   candidates=cands)
    return value


def slab_measure(spec: ProblemSpec, v, r: float, c: float,
                 rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Weighted mass of {|x.v| < r, |x.v_perp| < c} cap E cap D."""
    if not (0 < r < c):
        raise ValueError("slab requires 0 < r < c")
    v1, v2 = float(v[0]), float(v[1])
    norm = math.hypot(v1, v2)
    v1, v2 = v1 / norm, v2 / norm
    p1, p2 = v2, -v1          # v_perp
    R = float(spec.disk_radius)
    lin = [(v1, v2, r), (p1, p2, c)]
    extras = []
    for (a1, a2, bound) in lin:
        cm_plus = np.zeros((2, 2))
        cm_plus[0, 0] = bound
        cm_plus[1, 0] = -a1
        cm_plus[0, 1] = -a2
        cm_minus = np.zeros((2, 2))
        cm_minus[0, 0] = bound
        cm_minus[1, 0] = a1
        cm_minus[0, 1] = a2
        extras += [cm_plus, cm_minus]
    integrand = compile_integrand(spec, extra_constraints=extras)
    x_ext = min(R, r * abs(v1) + c * abs(p1) + 1e-15)
    y_ext = min(R, r * abs(v2) + c * abs(p2) + 1e-15)
    cands = outer_candidates(spec, lo=-x_ext, hi=x_ext)
    value, _err = measure_integral(integrand, -x_ext, x_ext, -y_ext, y_ext,
                                   rel_tol=rel_tol, candidates=cands)
    return value


def sublevel_measure(spec: ProblemSpec, t: float,
                     rel_tol: float = DEFAULT_REL_TOL) -> float:
    """mu_h-mass of {|f| < t} cap E cap D."""
    if not (0 < t < 0.5):
        raise ValueError("sublevel threshold must lie in (0, 1/2)")
    R = float(spec.disk_radius)
    f_cm = spec.phase.coeff_matrix()
    upper = -f_cm.copy()
    upper[0, 0] += t
    lower = f_cm.copy()
    lower[0, 0] += t
    integrand = compile_integrand(spec, extra_constraints=[upper, lower])
    cands = outer_candidates(spec, lo=-R, hi=R)
    value, _err = measure_integral(integrand, -R, R, -R, R, rel_tol=rel_tol,
                                   candidates=cands)
    return value


def weight_lp_norm(spec: ProblemSpec, p: float, rel_tol: float = DEFAULT_REL_TOL,
                   resolution=None) -> float:
    """L^p norm of the weight product over E cap D; +infinity on divergence.

    When a resolution is supplied, the chart-exponent finiteness criterion
    is evaluated as a cross-check and divergence detected there also
    returns +infinity.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if resolution is not None and not _charts_lp_finite(resolution, p):
        return float("inf")
    if math.isinf(p):
        return _weight_sup(spec)
    R = float(spec.disk_radius)
    integrand = compile_integrand(spec, weight_power=p)
    cands = outer_candidates(spec, weight_power=p, lo=-R, hi=R)
    try:
        value, _err = measure_integral(integrand, -R, R, -R, R, rel_tol=rel_tol,
                                       candidates=cands)
    except NonintegrableWeightError:
        return float("inf")
    return value ** (1.0 / p)


def _weight_sup(spec: ProblemSpec, samples: int = 20000) -> float:
    rng = np.random.default_rng(11)
    R = float(spec.disk_radius)
    pts = rng.uniform(-R, R, size=(samples, 2))
    mask = pts[:, 0]**2 + pts[:, 1]**2 < R * R
    for q in spec.constraints:
        mask &= q.eval_grid(pts[:, 0], pts[:, 1]) > 0
    pts = pts[mask]
    vals = np.abs(spec.amplitude.eval_grid(pts[:, 0], pts[:, 1]))
    for h, g in spec.weights:
        gamma = float(g)
        if gamma == 0.0:
            continue
        hv = np.abs(h.eval_grid(pts[:, 0], pts[:, 1]))
        if gamma < 0 and hv.min() < 1e-6:
            return float("inf")
        vals = vals * hv ** gamma
    return float(vals.max())


def _charts_lp_finite(resolution, p: float) -> bool:
    """Finiteness of the chart-coordinate monomial integrals x^(pA) y^(pB)."""
    for chart in resolution.charts_in_region():
        A = 0.0
        B = 0.0
        for name, mono in chart.monomials.items():
            if not name.startswith("h"):
                continue
            j = int(name[1:])
            gamma = float(resolution_gamma(resolution, j))
            A += gamma * float(mono.alpha)
            B += gamma * mono.beta
        if math.isinf(p):
            if A < 0 or B < 0:
                return False
            continue
        A *= p
        B *= p
        _upc, up_e = chart.upper_leading
        low = chart.lower_leading
        if B > -1.0:
            if A + float(up_e) * (B + 1.0) <= -1.0:
                return False
        else:
            if low is None:
                return False
            _lc, lo_e = low
            if B == -1.0 or A + float(lo_e) * (B + 1.0) <= -1.0:
                return False
    return True


def resolution_gamma(resolution, j: int):
    return resolution.weight_gammas[j]
