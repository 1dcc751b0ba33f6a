"""Quadrature engines for singular power-law weights on semialgebraic regions.

Two engines share one slicing core:

* a measure engine (no oscillation): adaptive panels in x, and for every
  x-node an exact 1-D slicing of the y-line at the roots of the constraint
  and weight polynomials, with Gauss-Jacobi rules absorbing algebraic
  endpoint singularities;
* an oscillatory engine (see oscillatory.py) that reuses the slicing core
  on cells where the weight is singular or the region boundary crosses,
  and plain tensor Gauss elsewhere.

All root exponents are handled through log-space corrections, so the same
vectorized integrand evaluation serves Jacobi and Legendre subintervals.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

_EPS_BETA = 1e-9


class NonintegrableWeightError(ArithmeticError):
    pass


class ToleranceUnreachableError(RuntimeError):
    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


@lru_cache(maxsize=512)
def legendre_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=4096)
def jacobi_rule(n: int, beta: float):
    """Nodes/weights for integral over [-1,1] of f(t) (1+t)^beta dt."""
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


# ---------------------------------------------------------------------------
# compiled polynomial helpers


def poly_eval(cm: np.ndarray, x, y):
    return np.polynomial.polynomial.polyval2d(x, y, cm)


def poly_y_coeffs(cm: np.ndarray, x):
    """Coefficients in y of p(x, .) for an array of x values: (ydeg+1, len(x))."""
    out = np.empty((cm.shape[1], np.size(x)))
    xv = np.asarray(x, dtype=float)
    for j in range(cm.shape[1]):
        out[j] = np.polynomial.polynomial.polyval(xv, cm[:, j])
    return out


def roots_in_interval(ycoeffs_at_x, lo: float, hi: float):
    """Real roots of the 1-D polynomial with ascending coeffs, clipped to [lo, hi].

    Returns a list of (root, multiplicity), sorted.  Degrees one and two are
    solved in closed form (the hot path); higher degrees fall back to the
    companion matrix.
    """
    scale = 0.0
    for v in ycoeffs_at_x:
        av = abs(v)
        if av > scale:
            scale = av
    if scale == 0.0 or scale != scale or scale == float("inf"):
        return []
    c = [v / scale for v in ycoeffs_at_x]
    deg = len(c) - 1
    while deg > 0 and abs(c[deg]) < 1e-13:
        deg -= 1
    if deg == 0:
        return []
    if deg == 1:
        r = -c[0] / c[1]
        return [(r, 1)] if lo - 1e-300 <= r <= hi + 1e-300 else []
    if deg == 2:
        a, b, cc = c[2], c[1], c[0]
        disc = b * b - 4 * a * cc
        if disc < 0:
            return []
        sq = math.sqrt(disc)
        r1 = (-b - sq) / (2 * a)
        r2 = (-b + sq) / (2 * a)
        if r1 > r2:
            r1, r2 = r2, r1
        span = max(abs(hi - lo), 1.0)
        if abs(r1 - r2) < 1e-12 * span:
            out = [((r1 + r2) / 2, 2)]
        else:
            out = [(r1, 1), (r2, 1)]
        return [(r, m) for r, m in out if lo <= r <= hi]
    roots = np.roots(c[deg::-1])
    rscale = max(1.0, float(np.max(np.abs(roots))))
    real = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-8 * rscale)
    out = []
    for r in real:
        if out and abs(r - out[-1][0]) <= 1e-9 * rscale:
            v, m = out[-1]
            out[-1] = ((v * m + r) / (m + 1), m + 1)
        else:
            out.append((r, 1))
    return [(r, m) for r, m in out if lo <= r <= hi]


def near_singular_ticks(ycoeffs_at_x, lo: float, hi: float):
    """Real parts of complex roots close to the real axis inside [lo, hi].

    Returns (position, halfwidth) pairs marking sharp peaks/dips of
    |p(y)|^gamma that plain Gauss rules cannot resolve.
    """
    scale = max(abs(v) for v in ycoeffs_at_x) if ycoeffs_at_x else 0.0
    if scale == 0.0 or scale != scale or scale == float("inf"):
        return []
    c = [v / scale for v in ycoeffs_at_x]
    deg = len(c) - 1
    while deg > 0 and abs(c[deg]) < 1e-13:
        deg -= 1
    span = hi - lo
    out = []
    if deg == 2:
        a, b, cc = c[2], c[1], c[0]
        disc = b * b - 4 * a * cc
        if disc < 0:
            y0 = -b / (2 * a)
            w = math.sqrt(-disc) / (2 * abs(a))
            if lo - span < y0 < hi + span and w < 0.25 * span:
                out.append((y0, w))
        return out
    if deg < 3:
        return out
    roots = np.roots(c[deg::-1])
    for r in roots:
        if r.imag <= 0:
            continue
        w = float(r.imag)
        y0 = float(r.real)
        if lo - span < y0 < hi + span and 0 < w < 0.25 * span:
            out.append((y0, w))
    return out


def graded_pieces(a: float, b: float, ticks, ratio: float = 4.0):
    """Breakpoints of [a, b] geometrically refined toward each tick."""
    pts = {a, b}
    span = b - a
    for y0, w in ticks:
        yc = min(max(y0, a), b)
        w_eff = max(w, abs(y0 - yc), 1e-14 * span)
        if w_eff >= span:
            continue
        for direction in (-1.0, 1.0):
            d = w_eff
            while d < span:
                p = yc + direction * d
                if a < p < b:
                    pts.add(p)
                d *= ratio
        for p in (yc - w_eff, yc + w_eff, yc):
            if a < p < b:
                pts.add(p)
    return sorted(pts)


@dataclass(frozen=True)
class WeightFactor:
    cm: np.ndarray
    gamma: float


@dataclass(frozen=True)
class PhaseSpec:
    cm: np.ndarray          # lam0 * f + lam1 * x + lam2 * y, combined
    cm_dx: np.ndarray
    cm_dy: np.ndarray


@dataclass(frozen=True)
class Integrand:
    """Region {each constraint > 0}, weight prod |h|^gamma, optional phase."""

    constraints: tuple       # of coeff matrices
    weights: tuple           # of WeightFactor
    amplitude: np.ndarray
    phase: PhaseSpec | None = None

    def weight_values(self, x, y, log_offset=0.0):
        total = np.zeros(np.shape(x)) + log_offset
        for wf in self.weights:
            if wf.gamma == 0.0:
                continue
            hv = np.abs(poly_eval(wf.cm, x, y))
            hv = np.maximum(hv, 1e-300)
            total = total + wf.gamma * np.log(hv)
        vals = np.exp(total) * poly_eval(self.amplitude, x, y)
        return vals


# ---------------------------------------------------------------------------
# slice construction


@dataclass
class _SubInterval:
    a: float
    b: float
    beta: float          # singular exponent at the singular side (0 if none)
    side: int            # -1: singular at a, +1: singular at b, 0: none
    n: int


def _eval_1d(coeffs, y: float) -> float:
    out = 0.0
    for c in reversed(coeffs):
        out = out * y + c
    return out


def build_slice(integrand: Integrand, x: float, y_lo: float, y_hi: float,
                inner_n: int, cycles_fn=None, max_n: int = 420,
                ccols=None, wcols=None, idx: int | None = None):
    """Subintervals of {y : all constraints > 0} with singular-side data.

    ccols/wcols optionally carry precomputed y-coefficient columns for the
    constraint and weight polynomials at a panel's x-nodes (idx selects
    the column), avoiding repeated scalar polynomial evaluation.
    """
    breaks = {y_lo, y_hi}
    cons_coeffs = []
    for ci, cm in enumerate(integrand.constraints):
        if ccols is not None:
            coeffs = [float(col[idx]) for col in ccols[ci]]
        else:
            coeffs = [np.polynomial.polynomial.polyval(x, cm[:, j])
                      for j in range(cm.shape[1])]
        cons_coeffs.append(coeffs)
        for r, _m in roots_in_interval(coeffs, y_lo, y_hi):
            breaks.add(r)
    wroots = []
    ticks = []
    for wi, wf in enumerate(integrand.weights):
        if wf.gamma == 0.0:
            continue
        if wcols is not None:
            coeffs = [float(col[idx]) for col in wcols[wi]]
        else:
            coeffs = [np.polynomial.polynomial.polyval(x, wf.cm[:, j])
                      for j in range(wf.cm.shape[1])]
        for r, m in roots_in_interval(coeffs, y_lo, y_hi):
            breaks.add(r)
            wroots.append((r, wf.gamma * m))
        ticks.extend(near_singular_ticks(coeffs, y_lo, y_hi))
    pts = sorted(breaks)
    subs = []
    for a, b in zip(pts, pts[1:]):
        if b - a <= 1e-300:
            continue
        mid = 0.5 * (a + b)
        ok = True
        for coeffs in cons_coeffs:
            if _eval_1d(coeffs, mid) <= 0:
                ok = False
                break
        if not ok:
            continue
        beta_a = sum(g for r, g in wroots if abs(r - a) <= 1e-12 * max(1.0, abs(a)))
        beta_b = sum(g for r, g in wroots if abs(r - b) <= 1e-12 * max(1.0, abs(b)))
        for beta in (beta_a, beta_b):
            if beta <= -1.0 + _EPS_BETA and beta != 0.0:
                raise NonintegrableWeightError(
                    f"weight exponent {beta} at a zero set is not integrable")
        n = inner_n
        if cycles_fn is not None:
            need = 2.3 * cycles_fn(x, a, b) + 8
            n = int(min(max_n, max(inner_n, math.ceil(need))))
        local_ticks = [(y0, w) for y0, w in ticks if a - (b - a) < y0 < b + (b - a)]
        if beta_a != 0.0 and beta_b != 0.0:
            m = 0.5 * (a + b)
            subs.append(_SubInterval(a, m, beta_a, -1, n))
            subs.append(_SubInterval(m, b, beta_b, +1, n))
            continue
        if beta_a != 0.0 or beta_b != 0.0:
            side = -1 if beta_a != 0.0 else +1
            beta = beta_a if side == -1 else beta_b
            if local_ticks:
                # keep the Jacobi rule on the half next to the singular end
                m = 0.5 * (a + b)
                if side == -1:
                    subs.append(_SubInterval(a, m, beta, -1, n))
                    for aa, bb in _piece_iter(m, b, local_ticks):
                        subs.append(_SubInterval(aa, bb, 0.0, 0, n))
                else:
                    for aa, bb in _piece_iter(a, m, local_ticks):
                        subs.append(_SubInterval(aa, bb, 0.0, 0, n))
                    subs.append(_SubInterval(m, b, beta, +1, n))
            else:
                subs.append(_SubInterval(a, b, beta, side, n))
            continue
        pieces = 1
        if cycles_fn is not None:
            need = 2.3 * cycles_fn(x, a, b) + 8
            if need > max_n:
                pieces = int(math.ceil(need / max_n))
                n = max_n
        if local_ticks:
            for aa, bb in _piece_iter(a, b, local_ticks):
                subs.append(_SubInterval(aa, bb, 0.0, 0, n))
        elif pieces == 1:
            subs.append(_SubInterval(a, b, 0.0, 0, n))
        else:
            edges = np.linspace(a, b, pieces + 1)
            for aa, bb in zip(edges[:-1], edges[1:]):
                subs.append(_SubInterval(aa, bb, 0.0, 0, n))
    return subs


def _piece_iter(a: float, b: float, ticks):
    pts = graded_pieces(a, b, ticks)
    for aa, bb in zip(pts, pts[1:]):
        if bb - aa > 1e-300:
            yield aa, bb


def _sub_nodes(sub: _SubInterval):
    """Nodes, weights and log-offset reference for one subinterval."""
    h = 0.5 * (sub.b - sub.a)
    if sub.side == 0:
        t, w = legendre_rule(sub.n)
        y = sub.a + h * (t + 1.0)
        return y, w * h, None
    t, w = jacobi_rule(sub.n, sub.beta)
    if sub.side == -1:
        y = sub.a + h * (t + 1.0)
        ref = sub.a
    else:
        y = sub.b - h * (t + 1.0)
        ref = sub.b
    return y, w * h ** (sub.beta + 1.0), (ref, sub.beta)


def integrate_slices(integrand: Integrand, xs, x_weights, y_lo, y_hi,
                     inner_n=24, outer_log_offset=None, cycles_fn=None,
                     y_bounds_fn=None, complex_phase=False):
    """Integrate over {x in panel} x {y slice} with outer nodes/weights given.

    outer_log_offset: optional function x -> additive log correction
    (used when an outer Jacobi rule absorbs an |x - x*|^beta factor).
    """
    xs_arr = np.asarray(xs, dtype=float)
    ccols = [[np.polynomial.polynomial.polyval(xs_arr, cm[:, j])
              for j in range(cm.shape[1])] for cm in integrand.constraints]
    wcols = [[np.polynomial.polynomial.polyval(xs_arr, wf.cm[:, j])
              for j in range(wf.cm.shape[1])] for wf in integrand.weights]
    xs_flat, ys_flat, w_flat, off_flat = [], [], [], []
    for i, (xi, wx) in enumerate(zip(xs, x_weights)):
        lo, hi = (y_lo, y_hi) if y_bounds_fn is None else y_bounds_fn(xi)
        if hi <= lo:
            continue
        base_off = 0.0 if outer_log_offset is None else outer_log_offset(xi)
        for sub in build_slice(integrand, xi, lo, hi, inner_n, cycles_fn,
                               ccols=ccols, wcols=wcols, idx=i):
            y, wy, sing = _sub_nodes(sub)
            off = np.full_like(y, base_off)
            if sing is not None:
                ref, beta = sing
                off -= beta * np.log(np.maximum(np.abs(y - ref), 1e-300))
            xs_flat.append(np.full_like(y, xi))
            ys_flat.append(y)
            w_flat.append(wy * wx)
            off_flat.append(off)
    if not xs_flat:
        return 0.0 + 0.0j if complex_phase else 0.0
    X = np.concatenate(xs_flat)
    Y = np.concatenate(ys_flat)
    W = np.concatenate(w_flat)
    OFF = np.concatenate(off_flat)
    vals = integrand.weight_values(X, Y, OFF)
    if complex_phase and integrand.phase is not None:
        ph = poly_eval(integrand.phase.cm, X, Y)
        return complex(np.dot(W, vals * np.cos(ph)), np.dot(W, vals * np.sin(ph)))
    return float(np.dot(W, vals))


# ---------------------------------------------------------------------------
# adaptive outer panels for measures


def osc_quad_1d(phase_fn, amp_fn, a: float, b: float, max_deriv: float,
                n_base: int = 32) -> complex:
    """Reference quadrature of int_a^b e^{i h(x)} phi(x) dx.

    max_deriv bounds |h'| on [a, b]; panels are sized so each holds a
    bounded number of phase cycles and a generous Gauss order nails them.
    """
    cycles = max_deriv * (b - a) / (2.0 * math.pi)
    panels = max(1, int(math.ceil(cycles / 10.0)))
    edges = np.linspace(a, b, panels + 1)
    t, w = legendre_rule(n_base)
    total = 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        h = 0.5 * (hi - lo)
        xs = lo + h * (t + 1.0)
        ph = phase_fn(xs)
        total += h * np.dot(w, amp_fn(xs) * np.exp(1j * ph))
    return total


@dataclass(order=True)
class _Panel:
    neg_err: float
    a: float = field(compare=False)
    b: float = field(compare=False)
    value: float = field(compare=False)
    err: float = field(compare=False)
    side_beta: tuple = field(compare=False)   # (beta_left or None, beta_right or None)
    graded: tuple = field(compare=False)      # (bool left, bool right)
    depth: int = field(compare=False)


def _outer_rule(a: float, b: float, n: int, side_beta):
    """Outer nodes/weights, using Jacobi when an endpoint carries an exponent."""
    bl, br = side_beta
    h = 0.5 * (b - a)
    if bl is not None and br is None:
        t, w = jacobi_rule(n, bl)
        x = a + h * (t + 1.0)
        return x, w * h ** (bl + 1.0), (a, bl)
    if br is not None and bl is None:
        t, w = jacobi_rule(n, br)
        x = b - h * (t + 1.0)
        return x, w * h ** (br + 1.0), (b, br)
    t, w = legendre_rule(n)
    return a + h * (t + 1.0), w * h, None


def _eval_panel(integrand, a, b, side_beta, y_lo, y_hi, inner_n, n_outer,
                y_bounds_fn, graded=(False, False), complex_phase=False,
                cycles_fn=None):
    def one(n, inner, with_phase):
        xs, wx, sing = _outer_rule(a, b, n, side_beta)
        if sing is None:
            off = None
        else:
            ref, beta = sing

            def off(x, _ref=ref, _beta=beta):
                return -_beta * math.log(max(abs(x - _ref), 1e-300))
        return integrate_slices(integrand, xs, wx, y_lo, y_hi, inner,
                                outer_log_offset=off, y_bounds_fn=y_bounds_fn,
                                cycles_fn=cycles_fn,
                                complex_phase=with_phase)
    v1 = one(n_outer, inner_n, complex_phase)
    v2 = one(max(6, int(0.62 * n_outer)), max(6, int(0.7 * inner_n)), complex_phase)
    err = abs(v1 - v2)
    if graded[0] or graded[1]:
        # unknown endpoint exponent: the unresolved tail can be comparable
        # to the full weight mass of the panel, so refine until that is small
        absmass = abs(v1) if not complex_phase else abs(one(max(8, n_outer // 2),
                                                            inner_n, False))
        err = max(err, 0.25 * absmass)
    return v1, err


def measure_integral(integrand: Integrand, x_lo: float, x_hi: float,
                     y_lo: float, y_hi: float, rel_tol: float = 1e-4,
                     candidates=(), inner_n: int = 24, n_outer: int = 18,
                     max_panels: int = 2400, y_bounds_fn=None,
                     complex_phase: bool = False, cycles_fn=None,
                     abs_tol: float = 0.0) -> tuple:
    """Adaptive integral of the weight (times a phase) over the region.

    Returns (value, err).  candidates: (x*, beta or None) outer structure
    points; a float beta is absorbed by an outer Jacobi rule, None triggers
    geometric grading.  With complex_phase the integrand carries
    exp(i*phase) and the result is complex.
    """
    pts = sorted({x_lo, x_hi} | {c for c, _ in candidates if x_lo < c < x_hi})
    cand_map = {c: be for c, be in candidates}
    for c, be in candidates:
        if be is not None and be <= -1.0 + _EPS_BETA:
            raise NonintegrableWeightError(f"outer weight exponent {be} not integrable")
    heap = []
    total = 0.0 + 0.0j if complex_phase else 0.0
    total_err = 0.0
    graded_history: dict = {}

    def push(a, b, depth):
        nonlocal total, total_err
        bl = cand_map.get(a) if a in cand_map else None
        br = cand_map.get(b) if b in cand_map else None
        graded = (a in cand_map and cand_map[a] is None,
                  b in cand_map and cand_map[b] is None)
        side = (bl if bl is not None else None, br if br is not None else None)
        v, e = _eval_panel(integrand, a, b, side, y_lo, y_hi, inner_n, n_outer,
                           y_bounds_fn, graded, complex_phase, cycles_fn)
        if graded[0] or graded[1]:
            key = a if graded[0] else b
            hist = graded_history.setdefault(key, [])
            hist.append(abs(v))
            if len(hist) > 8 and all(x2 > x1 * 1.01 for x1, x2 in
                                     zip(hist[-7:], hist[-6:])):
                raise NonintegrableWeightError(
                    f"graded refinement diverges near x = {key}")
        heapq.heappush(heap, _Panel(-e, a, b, v, e, side, graded, depth))
        total += v
        total_err += e

    for a, b in zip(pts, pts[1:]):
        if b > a:
            push(a, b, 0)
    count = len(heap)
    frozen = []
    while heap and count < max_panels:
        scale = max(abs(total), 1e-300)
        if total_err <= max(rel_tol * scale, abs_tol):
            break
        worst = heapq.heappop(heap)
        a, b = worst.a, worst.b
        if b - a < 1e-15 * max(1.0, abs(a) + abs(b)) or worst.depth > 52:
            frozen.append(worst)
            continue
        total -= worst.value
        total_err -= worst.err
        if worst.graded[0]:
            mid = a + (b - a) / 8.0
        elif worst.graded[1]:
            mid = b - (b - a) / 8.0
        else:
            mid = 0.5 * (a + b)
        for lo, hi in ((a, mid), (mid, b)):
            push(lo, hi, worst.depth + 1)
            count += 1
    # deterministic re-summation
    panels = sorted((p.a, p.b, p.value, p.err) for p in list(heap) + frozen)
    if complex_phase:
        value = complex(math.fsum(p[2].real for p in panels),
                        math.fsum(p[2].imag for p in panels))
    else:
        value = math.fsum(p[2] for p in panels)
    err = math.fsum(p[3] for p in panels)
    return value, err
