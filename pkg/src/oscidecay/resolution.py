"""Decomposition of the plane into curved wedges monomializing the data.

Each of the eight triangles is recursively split into zones bounded by
curves y = c * x^e.  Zones come in three kinds: vertex zones (a single
support vertex of the product polynomial dominates), sliver zones (pieces
of an edge scale y ~ u x^s away from edge-polynomial roots, after a shift
to the piece's lower edge) and root zones (neighborhoods of a branch,
handled by shifting onto the branch and recursing).  On every emitted
chart each resolved function is, within relative accuracy eta on a grid,
a constant times a monomial in the chart coordinates.

The same charts drive the compatibility verdict (a chart with a genuinely
curved shift whose phase monomial is the pure power x^s of the shift order
signals resonant rays) and the shear decomposition used to repair it.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .branches import PuiseuxBranch, PuiseuxPoly, shift_ypoly
from .newton import TriangleSplit, pick_triangle_slopes, vertex_dominates
from .polynomials import BivariatePoly
from .problem import ProblemSpec
from .puiseux import polygon_edges, _edge_poly_roots

PHASE = "phase"
PHASE_DY = "phase_dy"

DEFAULT_ETA = 0.1
DEFAULT_N0 = 8
MAX_N = 4096
MAX_RADIUS_HALVINGS = 8
MAX_SLIVER_SPLITS = 9
MAX_DEPTH = 24


class VerificationFailedError(RuntimeError):
    pass


class NotIncompatibleError(ValueError):
    pass


class _ZoneFailure(RuntimeError):
    """Internal: a vertex/root chart failed at the current N."""


@dataclass(frozen=True)
class Monomial:
    d: float
    alpha: Fraction
    beta: int

    def to_json(self):
        return {"d": self.d, "alpha": str(self.alpha), "beta": self.beta}

    @staticmethod
    def from_json(data):
        return Monomial(float(data["d"]), Fraction(data["alpha"]), int(data["beta"]))


@dataclass(eq=False)
class Chart:
    """One curved wedge with its shift map and per-function monomial data.

    Points of the chart are (x, t) with 0 < x < radius and
    g(x) < t < G(x); they map to wedge coordinates via
    (x, t) -> (x, shift(x) + sign * t) and on to the original plane by the
    triangle reflection.
    """

    index: int
    triangle: int
    reflection: tuple
    shift: PuiseuxBranch
    sign: int
    lower: PuiseuxBranch
    upper: PuiseuxBranch
    radius: Fraction
    eta: float
    monomials: dict
    kind: str                 # vertex | sliver | root-floor | unit
    verification: float = 0.0
    marginal: bool = False

    # -- structural helpers --------------------------------------------------
    @property
    def upper_leading(self):
        e, c = self.upper.leading()
        return float(c), e

    @property
    def lower_leading(self):
        if self.lower.is_zero():
            return None
        e, c = self.lower.leading()
        return float(c), e

    @property
    def shift_is_linear(self) -> bool:
        return self.shift.is_linear()

    @property
    def shift_nonlinear_part(self):
        """(s, l) of the first curved shift term, or None."""
        return self.shift.first_nonlinear()

    def q_signs(self):
        return {name: (1 if m.d > 0 else -1) for name, m in self.monomials.items()
                if name.startswith("q")}

    @property
    def in_region(self) -> bool:
        return all(s > 0 for s in self.q_signs().values())

    def contains_wedge_point(self, X: float, Y: float) -> bool:
        if not (0.0 < X < float(self.radius)):
            return False
        t = self.sign * (Y - self.shift.eval(X))
        if t <= 0.0:
            return False
        g = self.lower.eval(X) if not self.lower.is_zero() else 0.0
        return g < t < self.upper.eval(X)

    def t_interval(self, X: float):
        g = self.lower.eval(X) if not self.lower.is_zero() else 0.0
        return g, self.upper.eval(X)

    def to_json(self):
        return {
            "index": self.index, "triangle": self.triangle,
            "reflection": [list(r) for r in self.reflection],
            "shift": self.shift.to_json(), "sign": self.sign,
            "lower": self.lower.to_json(), "upper": self.upper.to_json(),
            "radius": str(self.radius), "eta": self.eta,
            "monomials": {k: m.to_json() for k, m in self.monomials.items()},
            "kind": self.kind, "verification": self.verification,
            "marginal": self.marginal,
        }

    @staticmethod
    def from_json(data):
        return Chart(
            index=int(data["index"]), triangle=int(data["triangle"]),
            reflection=tuple(tuple(r) for r in data["reflection"]),
            shift=PuiseuxBranch.from_json(data["shift"]), sign=int(data["sign"]),
            lower=PuiseuxBranch.from_json(data["lower"]),
            upper=PuiseuxBranch.from_json(data["upper"]),
            radius=Fraction(data["radius"]), eta=float(data["eta"]),
            monomials={k: Monomial.from_json(m) for k, m in data["monomials"].items()},
            kind=data["kind"], verification=float(data["verification"]),
            marginal=bool(data.get("marginal", False)),
        )


@dataclass(frozen=True)
class ResolutionResult:
    charts: tuple
    split: TriangleSplit
    radius: Fraction
    eta: float
    names: tuple
    triangle_polys: dict      # (triangle, name) -> BivariatePoly in wedge coords
    spec_hash: str
    weight_gammas: tuple = ()

    def charts_in_region(self):
        return [c for c in self.charts if c.in_region]

    def poly_for(self, chart: Chart, name: str) -> BivariatePoly:
        return self.triangle_polys[(chart.triangle, name)]

    def to_json(self):
        return {
            "spec_hash": self.spec_hash,
            "radius": str(self.radius),
            "eta": self.eta,
            "names": list(self.names),
            "slope_pos": str(self.split.slope_pos),
            "slope_neg": str(self.split.slope_neg),
            "charts": [c.to_json() for c in self.charts],
        }


@dataclass(frozen=True)
class CompatibilityVerdict:
    compatible: bool
    offending_charts: tuple   # (chart index, s, d)
    evidence: tuple           # per offending chart: {"c1":..., "c2":..., "vertex_dominates":...}

    def to_json(self):
        return {
            "compatible": self.compatible,
            "offending_charts": [
                {"chart": i, "s": str(s), "d": d} for i, s, d in self.offending_charts],
            "evidence": list(self.evidence),
        }


@dataclass(frozen=True)
class ShearPiece:
    """A sliver around y = p*x + q*x^s carrying a shear in the third variable."""

    chart_index: int
    p: float
    q: float
    s: int
    sliver_halfwidth: float
    shear: tuple                  # (a1, a2) in original coordinates
    reflection: tuple
    constraints: tuple            # BivariatePoly > 0 each, original coordinates
    replacement_phase: BivariatePoly   # phase after the shear, original coords
    residual: PuiseuxBranch       # r(x) = f(x, p x + q x^s + ...) - d x^s in wedge coords

    def to_json(self):
        return {
            "chart_index": self.chart_index, "p": self.p, "q": self.q, "s": self.s,
            "sliver_halfwidth": self.sliver_halfwidth,
            "shear": list(self.shear),
            "reflection": [list(r) for r in self.reflection],
            "constraints": [c.to_json() for c in self.constraints],
            "replacement_phase": self.replacement_phase.to_json(),
            "residual": self.residual.to_json(),
        }


# ---------------------------------------------------------------------------
# frame machinery


@dataclass
class _Frame:
    funcs: dict               # name -> list[PuiseuxPoly] in frame coordinates
    shift: PuiseuxPoly        # accumulated k(x) in wedge coordinates
    sign: int
    top_coeff: object         # Fraction or float
    top_exp: Fraction
    depth: int


def _minimizer(ycoeffs, sigma: Fraction):
    """Support point (j, v) minimizing v + sigma*j, with its leading coeff."""
    best = None
    for j, c in enumerate(ycoeffs):
        v = c.valuation()
        if v is None:
            continue
        key = v + sigma * j
        if best is None or key < best[0] or (key == best[0] and j < best[1]):
            best = (key, j, v)
    if best is None:
        raise ValueError("zero polynomial has no minimizing vertex")
    _, j, v = best
    return j, v, ycoeffs[j].coeffs[v]


def _edge_data(ycoeffs, s: Fraction):
    """Restriction of a function to the scale y ~ u x^s.

    Returns (t, poly_coeffs) with t = min(v + s*j) and poly_coeffs a dict
    j -> leading coefficient for the support points on the minimizing line.
    """
    t = None
    for j, c in enumerate(ycoeffs):
        v = c.valuation()
        if v is None:
            continue
        key = v + s * j
        if t is None or key < t:
            t = key
    line = {}
    for j, c in enumerate(ycoeffs):
        v = c.valuation()
        if v is not None and v + s * j == t:
            line[j] = c.coeffs[v]
    return t, line


def _edge_eval(line: dict, u: float) -> float:
    return sum(float(c) * u**j for j, c in line.items())


def _vanishes_at_origin(ycoeffs) -> bool:
    c0 = ycoeffs[0]
    v = c0.valuation()
    return v is None or v > 0


def _product(ypolys):
    out = [PuiseuxPoly.constant(Fraction(1))]
    for yc in ypolys:
        res = [PuiseuxPoly.zero() for _ in range(len(out) + len(yc) - 1)]
        for i, a in enumerate(out):
            if a.is_zero():
                continue
            for j, b in enumerate(yc):
                if b.is_zero():
                    continue
                res[i + j] = res[i + j] + a * b
        out = res
    return out


def _curve_branch(coeff, exp: Fraction, radius) -> PuiseuxBranch:
    if coeff == 0:
        return PuiseuxBranch.zero(validity_radius=radius)
    c = coeff if isinstance(coeff, (int, Fraction)) else float(coeff)
    return PuiseuxBranch.from_terms([(exp, c)], truncation_order=exp,
                                    validity_radius=radius, tail_coeff=0.0)


def _shift_branch(shift: PuiseuxPoly, radius) -> PuiseuxBranch:
    if shift.is_zero():
        return PuiseuxBranch.zero(validity_radius=radius)
    return PuiseuxBranch.from_poly(shift, truncation_order=shift.max_exponent(),
                                   validity_radius=radius, tail_coeff=0.0)


class _Builder:
    """Per-spec chart construction with adaptive N / sliver / radius control."""

    def __init__(self, spec: ProblemSpec, eta: float, seed: int, trunc_cap: Fraction):
        self.spec = spec
        self.eta = eta
        self.seed = seed
        self.trunc_cap = trunc_cap
        f = spec.phase
        self.base_funcs = {PHASE: f}
        fy_source = {}
        for j, q in enumerate(spec.constraints):
            self.base_funcs[f"q{j}"] = q
        for j, (h, _g) in enumerate(spec.weights):
            self.base_funcs[f"h{j}"] = h
        product = f
        fy = f.derive(0, 1)
        fx = f.derive(1, 0)
        for p in [fy, fx] + list(spec.constraints) + [h for h, _ in spec.weights]:
            if not p.is_zero():
                product = product * p
        self.split = pick_triangle_slopes(product, seed=seed)
        self.names = tuple([PHASE, PHASE_DY] + [f"q{j}" for j in range(len(spec.constraints))]
                           + [f"h{j}" for j in range(len(spec.weights))])

    # -- top-level driver ---------------------------------------------------
    def build(self):
        radius = self.spec.disk_radius
        last_err = None
        for _halving in range(MAX_RADIUS_HALVINGS + 1):
            try:
                charts, tri_polys = self._build_all_triangles(radius)
            except (_ZoneFailure, VerificationFailedError) as err:
                last_err = err
                radius = radius / 2
                continue
            return ResolutionResult(
                charts=tuple(charts), split=self.split, radius=radius,
                eta=self.eta, names=self.names, triangle_polys=tri_polys,
                spec_hash=self.spec.content_hash(),
                weight_gammas=tuple(float(g) for _, g in self.spec.weights))
        raise VerificationFailedError(
            f"chart verification failed after radius halvings: {last_err}")

    def _build_all_triangles(self, radius: Fraction):
        charts = []
        tri_polys = {}
        for tri in range(8):
            tri_funcs = {}
            for name, poly in self.base_funcs.items():
                tri_funcs[name] = self.split.reflect_poly(tri, poly)
            fy = tri_funcs[PHASE].derive(0, 1)
            if not fy.is_zero():
                tri_funcs[PHASE_DY] = fy
            for name, poly in tri_funcs.items():
                tri_polys[(tri, name)] = poly
            b = self.split.wedge_bound(tri)
            tri_charts = self._build_triangle(tri, tri_funcs, b, radius)
            for ch in tri_charts:
                ch.index = len(charts)
                charts.append(ch)
        return charts, tri_polys

    def _build_triangle(self, tri: int, tri_funcs: dict, b: Fraction, radius: Fraction):
        last = None
        N = DEFAULT_N0
        while N <= MAX_N:
            frame = _Frame(
                funcs={name: [PuiseuxPoly.from_x_poly(c) for c in poly.y_coefficients()]
                       for name, poly in tri_funcs.items()},
                shift=PuiseuxPoly.zero(), sign=1,
                top_coeff=b, top_exp=Fraction(1), depth=0)
            out = []
            try:
                self._process_frame(tri, tri_funcs, frame, Fraction(N), radius, out)
                return out
            except _ZoneFailure as err:
                last = err
                N *= 2
        raise VerificationFailedError(f"triangle {tri}: {last}")

    # -- frame recursion ------------------------------------------------------
    def _process_frame(self, tri, tri_funcs, frame: _Frame, N: Fraction,
                       radius: Fraction, out: list):
        if frame.depth > MAX_DEPTH or frame.top_exp > self.trunc_cap:
            raise VerificationFailedError(
                "truncation-exhausted: branch separation exceeds depth/order cap")
        vanishing = [yc for yc in frame.funcs.values() if _vanishes_at_origin(yc)]
        if not vanishing:
            self._emit_vertex(tri, tri_funcs, frame, radius, out,
                              lower=(0, frame.top_exp), upper=(frame.top_coeff, frame.top_exp),
                              kind="unit")
            return
        F = _product(vanishing)
        edges = [(s, pts) for s, pts in polygon_edges(F) if s >= frame.top_exp]
        edges.sort(key=lambda e: e[0])
        cur_upper = (frame.top_coeff, frame.top_exp)
        for s, edge_points in edges:
            roots = [(u, m) for u, m in _edge_poly_roots(edge_points, F) if float(u) > 0]
            if s == frame.top_exp:
                top_u = frame.top_coeff
                roots = [(u, m) for u, m in roots if u < top_u]
            else:
                top_u = None
            lo_u = min(N ** -1, min((Fraction(u) if isinstance(u, (int, Fraction))
                                     else Fraction(float(u)).limit_denominator(10**6)) / 2
                                    for u, _ in roots) if roots else N ** -1)
            hi_u = top_u if top_u is not None else max(
                N, max((Fraction(u) if isinstance(u, (int, Fraction))
                        else Fraction(float(u)).limit_denominator(10**6)) * 2
                       for u, _ in roots) if roots else N)
            if s > frame.top_exp:
                self._emit_vertex(tri, tri_funcs, frame, radius, out,
                                  lower=(hi_u, s), upper=cur_upper, kind="vertex")
            self._emit_edge_zone(tri, tri_funcs, frame, N, radius, out,
                                 s, lo_u, hi_u, roots)
            cur_upper = (lo_u, s)
        kind = "root-floor" if frame.depth > 0 and not edges else "vertex"
        self._emit_vertex(tri, tri_funcs, frame, radius, out,
                          lower=(0, cur_upper[1]), upper=cur_upper, kind=kind)

    def _emit_edge_zone(self, tri, tri_funcs, frame, N, radius, out,
                        s, lo_u, hi_u, roots):
        roots = sorted(roots, key=lambda rm: float(rm[0]))
        rhos = []
        for i, (u, _m) in enumerate(roots):
            uf = float(u)
            left = uf - (float(roots[i - 1][0]) if i > 0 else 0.0)
            right = (float(roots[i + 1][0]) if i + 1 < len(roots) else 2 * float(hi_u)) - uf
            rho = min(left / 3.0, right / 3.0, uf / 2.0)
            if float(hi_u) - uf < rho:
                rho = (float(hi_u) - uf) / 2.0
            rhos.append(rho)
        # sliver segments between root zones
        cursor = float(lo_u)
        segments = []
        for (u, _m), rho in zip(roots, rhos):
            seg_hi = float(u) - rho
            if seg_hi > cursor * (1 + 1e-12):
                segments.append((cursor, seg_hi))
            cursor = float(u) + rho
        if float(hi_u) > cursor * (1 + 1e-12):
            segments.append((cursor, float(hi_u)))
        for seg in segments:
            self._emit_slivers(tri, tri_funcs, frame, radius, out, s, seg)
        # root zones: shift onto the branch and recurse on both sides
        for (u, _m), rho in zip(roots, rhos):
            shift_term = PuiseuxPoly.term(u, s)
            for child_sign in (1, -1):
                child = _Frame(
                    funcs={name: shift_ypoly(yc, shift_term, child_sign)
                           for name, yc in frame.funcs.items()},
                    shift=frame.shift + shift_term.scale(frame.sign),
                    sign=frame.sign * child_sign,
                    top_coeff=rho, top_exp=s, depth=frame.depth + 1)
                self._process_frame(tri, tri_funcs, child, N, radius, out)

    def _emit_slivers(self, tri, tri_funcs, frame, radius, out, s, seg):
        stack = [(seg[0], seg[1], 0)]
        while stack:
            lo, hi, depth = stack.pop()
            chart = self._make_sliver_chart(tri, tri_funcs, frame, radius, s, lo, hi)
            disc = self._verify(tri_funcs, chart)
            if disc <= self.eta / 2:
                chart.verification = disc
                out.append(chart)
            elif depth >= MAX_SLIVER_SPLITS:
                if disc <= self.eta:
                    chart.verification = disc
                    chart.marginal = True
                    out.append(chart)
                else:
                    raise _ZoneFailure(
                        f"sliver at scale {s} failed verification ({disc:.3g})")
            else:
                mid = (lo * hi) ** 0.5 if lo > 0 else (lo + hi) / 2
                stack.append((lo, mid, depth + 1))
                stack.append((mid, hi, depth + 1))

    def _make_sliver_chart(self, tri, tri_funcs, frame, radius, s, lo, hi):
        u_mid = (lo + hi) / 2.0
        monos = {}
        for name, yc in frame.funcs.items():
            t_f, line = _edge_data(yc, s)
            monos[name] = Monomial(_edge_eval(line, u_mid), t_f, 0)
        shift = frame.shift + PuiseuxPoly.term(lo, s).scale(frame.sign)
        return Chart(
            index=-1, triangle=tri, reflection=self.split.reflections[tri],
            shift=_shift_branch(shift, radius), sign=frame.sign,
            lower=PuiseuxBranch.zero(validity_radius=radius),
            upper=_curve_branch(hi - lo, s, radius),
            radius=radius, eta=self.eta, monomials=monos, kind="sliver")

    def _emit_vertex(self, tri, tri_funcs, frame, radius, out, lower, upper, kind):
        lo_c, lo_e = lower
        up_c, up_e = upper
        if kind == "unit":
            sigma = frame.top_exp + 1
        elif lo_c == 0:
            max_edge = self._max_edge_exponent(frame)
            sigma = max(up_e, max_edge if max_edge is not None else up_e) + 1
        else:
            sigma = (Fraction(up_e) + Fraction(lo_e)) / 2
        monos = {}
        for name, yc in frame.funcs.items():
            j, v, lc = _minimizer(yc, sigma)
            monos[name] = Monomial(float(lc), v, j)
        chart = Chart(
            index=-1, triangle=tri, reflection=self.split.reflections[tri],
            shift=_shift_branch(frame.shift, radius), sign=frame.sign,
            lower=_curve_branch(lo_c, lo_e, radius) if lo_c != 0
            else PuiseuxBranch.zero(validity_radius=radius),
            upper=_curve_branch(up_c, up_e, radius),
            radius=radius, eta=self.eta, monomials=monos, kind=kind)
        disc = self._verify(tri_funcs, chart)
        if disc > self.eta / 2:
            if disc > self.eta:
                raise _ZoneFailure(f"{kind} zone failed verification ({disc:.3g})")
            chart.marginal = True
        chart.verification = disc
        out.append(chart)

    def _max_edge_exponent(self, frame):
        vanishing = [yc for yc in frame.funcs.values() if _vanishes_at_origin(yc)]
        if not vanishing:
            return None
        exps = [s for s, _ in polygon_edges(_product(vanishing))]
        return max(exps) if exps else None

    # -- verification ---------------------------------------------------------
    def _verify(self, tri_funcs, chart: Chart, nx: int = 9, nt: int = 5) -> float:
        xs = float(chart.radius) * np.exp2(-np.linspace(0.0, 10.0, nx))
        worst = 0.0
        for x in xs:
            g, G = chart.t_interval(x)
            if not (G > 0) or G <= g:
                continue
            lo = max(g, G * 2.0**-8) if g == 0.0 else g
            ts = np.geomspace(max(lo, G * 1e-12), G, nt + 2)[1:-1] if g == 0.0 else \
                np.linspace(g, G, nt + 2)[1:-1]
            k_val = chart.shift.eval(x)
            for t in ts:
                Y = k_val + chart.sign * t
                for name, mono in chart.monomials.items():
                    val = tri_funcs[name].eval(x, Y)
                    main = mono.d * x ** float(mono.alpha) * t ** mono.beta
                    if main == 0.0:
                        worst = max(worst, abs(val))
                        continue
                    worst = max(worst, abs(val / main - 1.0))
        return worst


def resolve(spec: ProblemSpec, eta: float = DEFAULT_ETA, trunc=None,
            seed: int = 0) -> ResolutionResult:
    """Cover the eight triangles with verified monomializing charts.

    Resolves the phase, its second-variable derivative, every constraint
    and every weight polynomial simultaneously.  Raises
    VerificationFailedError when the requested accuracy is unattainable
    even after shrinking the radius.
    """
    if not (0 < eta < 1):
        raise ValueError("eta must lie in (0, 1)")
    ydeg = max(1, spec.phase.y_degree() + sum(q.y_degree() for q in spec.constraints)
               + sum(h.y_degree() for h, _ in spec.weights))
    trunc_cap = Fraction(trunc) if trunc is not None else Fraction(2 * ydeg + 4)
    return _Builder(spec, eta, seed, trunc_cap).build()


# ---------------------------------------------------------------------------
# derivative verification


def _deriv_expression(l: int, m: int):
    """Expansion of d^l/dx^l d^m/dt^m of S(x, k(x) + sign*t).

    Terms are keyed by (i, j, k_orders): coefficient times the mixed partial
    (d^{i,j} S)(x, k + sign*t) times prod of k^(r)(x) over the multiset
    k_orders.  Each t-derivative carries one overall factor of sign, applied
    at evaluation time.
    """
    terms = {(0, 0, ()): 1}
    for _ in range(m):
        terms = {(i, j + 1, P): c for (i, j, P), c in terms.items()}
    for _ in range(l):
        new = {}
        for (i, j, P), c in terms.items():
            _bump(new, (i + 1, j, P), c)
            _bump(new, (i, j + 1, tuple(sorted(P + (1,)))), c)
            for r in set(P):
                n_r = P.count(r)
                lst = list(P)
                lst.remove(r)
                _bump(new, (i, j, tuple(sorted(lst + [r + 1]))), c * n_r)
        terms = new
    return {k: c for k, c in terms.items() if c != 0}


def _bump(d, k, c):
    if c == 0:
        return
    d[k] = d.get(k, 0) + c
    if d[k] == 0:
        del d[k]


def falling_factorial(a, n: int) -> float:
    out = 1.0
    a = float(a)
    for i in range(n):
        out *= a - i
    return out


@dataclass(frozen=True)
class VerificationReport:
    func: str
    order: tuple
    max_discrepancy: float
    eta: float
    grid: int

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.eta

    def to_json(self):
        return {"func": self.func, "order": list(self.order),
                "max_discrepancy": self.max_discrepancy, "eta": self.eta,
                "grid": self.grid, "passed": self.passed}


def verify_chart(resolution: ResolutionResult, chart: Chart, name: str,
                 order: tuple = (0, 0), eta: float | None = None,
                 grid: int = 9) -> VerificationReport:
    """Check the derivative bounds on a fresh grid in the chart.

    Compares the (l, m) mixed partial of the resolved function in chart
    coordinates against the falling-factorial multiple of the chart's
    monomial; the discrepancy is measured relative to
    |d| x^(alpha-l) t^(beta-m).
    """
    l, m = order
    if l < 0 or m < 0:
        raise ValueError("derivative order must be nonnegative")
    eta = chart.eta if eta is None else eta
    poly = resolution.poly_for(chart, name)
    mono = chart.monomials[name]
    partials = {}
    expr = _deriv_expression(l, m)
    for (i, j, _P) in expr:
        if (i, j) not in partials:
            partials[(i, j)] = poly.derive(i, j)
    shift_poly = chart.shift.as_poly()
    k_derivs = {}
    for (_i, _j, P) in expr:
        for r in P:
            if r not in k_derivs:
                k_derivs[r] = shift_poly.derivative(r)
    xs = float(chart.radius) * np.exp2(-np.linspace(0.5, 11.0, grid))
    worst = 0.0
    for x in xs:
        g, G = chart.t_interval(x)
        if not (G > 0) or G <= g:
            continue
        lo = max(g, G * 2.0**-8) if g == 0.0 else g
        ts = np.geomspace(max(lo, G * 1e-12), G, 5)[1:-1] if g == 0.0 else \
            np.linspace(g, G, 6)[1:-1]
        k_val = chart.shift.eval(x)
        kd_vals = {r: kd.eval(x) for r, kd in k_derivs.items()}
        sign_factor = chart.sign ** m
        for t in ts:
            Y = k_val + chart.sign * t
            val = 0.0
            for (i, j, P), c in expr.items():
                term = c * sign_factor * partials[(i, j)].eval(x, Y)
                for r in P:
                    term *= kd_vals[r]
                val += term
            main = (mono.d * falling_factorial(mono.alpha, l)
                    * falling_factorial(mono.beta, m)
                    * x ** (float(mono.alpha) - l) * t ** (mono.beta - m))
            denom = abs(mono.d) * x ** (float(mono.alpha) - l) * t ** (mono.beta - m)
            worst = max(worst, abs(val - main) / denom)
    return VerificationReport(name, (l, m), worst, eta, grid)


# ---------------------------------------------------------------------------
# compatibility and the shear split


def check_compatibility(spec: ProblemSpec, resolution: ResolutionResult | None = None,
                        eta: float = DEFAULT_ETA, seed: int = 0) -> CompatibilityVerdict:
    """Hunt for charts with a curved shift whose phase is the pure power x^s.

    Such a chart makes the graph locally a sheared copy of x^s and produces
    a resonant ray direction; its presence is the incompatibility verdict.
    """
    if resolution is None:
        resolution = resolve(spec, eta=eta, seed=seed)
    offending = []
    evidence = []
    for chart in resolution.charts:
        if not chart.in_region:
            continue
        nl = chart.shift_nonlinear_part
        if nl is None:
            continue
        s, _lcoef = nl
        mono = chart.monomials[PHASE]
        if mono.beta != 0 or mono.alpha != s:
            continue
        f_tri = resolution.poly_for(chart, PHASE)
        dominates = vertex_dominates(f_tri, s)
        c1, c2 = _fit_two_sided(resolution, chart)
        offending.append((chart.index, s, mono.d))
        evidence.append({"chart": chart.index, "s": str(s), "d": mono.d,
                         "vertex_dominates": dominates, "c1": c1, "c2": c2})
    return CompatibilityVerdict(not offending, tuple(offending), tuple(evidence))


def _fit_two_sided(resolution: ResolutionResult, chart: Chart):
    """Sampled constants c1, c2 with c1 x^s < |f∘eta| < c2 x^s on the chart."""
    poly = resolution.poly_for(chart, PHASE)
    s = float(chart.monomials[PHASE].alpha)
    xs = float(chart.radius) * np.exp2(-np.linspace(0.5, 10.0, 9))
    ratios = []
    for x in xs:
        g, G = chart.t_interval(x)
        if G <= max(g, 0):
            continue
        for t in np.linspace(max(g, G * 1e-6), G, 5)[1:-1]:
            Y = chart.shift.eval(x) + chart.sign * t
            ratios.append(abs(poly.eval(x, Y)) / x**s)
    if not ratios:
        return 0.0, 0.0
    return 0.9 * min(ratios), 1.1 * max(ratios)


def incompatible_split(spec: ProblemSpec, resolution: ResolutionResult | None = None,
                       verdict: CompatibilityVerdict | None = None,
                       eta: float = DEFAULT_ETA, seed: int = 0) -> list:
    """Cover each offending chart by slivers along y = p x + q x^s carrying
    the shear (x1, x2, x3) -> (x1, x2, x3 - (d/q)(x2 - p x1))."""
    if resolution is None:
        resolution = resolve(spec, eta=eta, seed=seed)
    if verdict is None:
        verdict = check_compatibility(spec, resolution)
    if verdict.compatible:
        raise NotIncompatibleError("spec is compatible; no shear split applies")
    by_index = {c.index: c for c in resolution.charts}
    pieces = []
    for chart_index, s, d in verdict.offending_charts:
        chart = by_index[chart_index]
        s_int = int(s)
        p = float(chart.shift.linear_coefficient())
        l_coef = float(chart.shift_nonlinear_part[1])
        up_c, up_e = chart.upper_leading
        if up_e == s:
            thickness = up_c
            eta_sliver = thickness / 4.0
            mids = [thickness / 4.0, 3.0 * thickness / 4.0]
        else:
            # chart thinner than x^s: one sliver around the shift curve covers it
            eta_sliver = max(up_c * float(chart.radius) ** float(up_e - s), 1e-9)
            mids = [0.0]
        for t_mid in mids:
            q_val = l_coef + chart.sign * t_mid
            if q_val == 0.0:
                continue
            pieces.append(_make_shear_piece(spec, resolution, chart, p, q_val,
                                            s_int, eta_sliver, d))
    return pieces


def _make_shear_piece(spec, resolution, chart, p, q_val, s_int, eta_sliver, d):
    tri = chart.triangle
    split = resolution.split
    (m11, m12), (m21, m22) = split.reflections[tri]
    # wedge coordinates as polynomials in the original variables (inverse map)
    det = m11 * m22 - m12 * m21
    Xw = BivariatePoly({(1, 0): Fraction(m22, det), (0, 1): Fraction(-m12, det)})
    Yw = BivariatePoly({(1, 0): Fraction(-m21, det), (0, 1): Fraction(m11, det)})
    pq = Fraction(p).limit_denominator(10**9)
    qq = Fraction(q_val).limit_denominator(10**9)
    hw = Fraction(eta_sliver).limit_denominator(10**9)
    center = Yw - pq * Xw - qq * Xw**s_int
    constraints = (
        hw * Xw**s_int - center,
        center + hw * Xw**s_int,
        Xw,
    )
    # shear in wedge coordinates: x3 -> x3 - (d/q)(Yw - p Xw)
    dq = Fraction(d).limit_denominator(10**9) / qq
    shear_poly = -dq * (Yw - pq * Xw)
    a1 = float(shear_poly.coefficient(1, 0))
    a2 = float(shear_poly.coefficient(0, 1))
    replacement = spec.phase + shear_poly
    # residual r(x) = f_tri(x, k(x)) - d x^s in wedge coordinates
    f_tri = resolution.poly_for(chart, PHASE)
    ycoeffs = [PuiseuxPoly.from_x_poly(c) for c in f_tri.y_coefficients()]
    restricted = shift_ypoly(ycoeffs, chart.shift.as_poly(), 1)[0]
    residual = restricted + PuiseuxPoly.term(-Fraction(d).limit_denominator(10**9), s_int)
    residual_branch = (PuiseuxBranch.zero() if residual.is_zero()
                       else PuiseuxBranch.from_poly(
                           residual, truncation_order=residual.max_exponent()))
    val = residual_branch.as_poly().valuation()
    if val is not None and (val.denominator != 1 or val < 2):
        raise VerificationFailedError(
            f"shear residual vanishing order {val} is not an integer >= 2")
    return ShearPiece(
        chart_index=chart.index, p=p, q=q_val, s=s_int,
        sliver_halfwidth=eta_sliver, shear=(a1, a2),
        reflection=split.reflections[tri], constraints=constraints,
        replacement_phase=replacement, residual=residual_branch)


# ---------------------------------------------------------------------------
# coverage


def coverage_check(resolution: ResolutionResult, spec: ProblemSpec,
                   samples: int = 100_000, seed: int = 0) -> dict:
    """Monte Carlo check that in-region charts cover E cap D.

    Returns the uncovered fraction of sampled region points and the
    estimated uncovered area.
    """
    rng = np.random.default_rng(seed)
    R = float(resolution.radius)
    split = resolution.split
    charts_by_tri = {}
    for ch in resolution.charts_in_region():
        charts_by_tri.setdefault(ch.triangle, []).append(ch)
    total = 0
    uncovered = 0
    batch = 4096
    drawn = 0
    while total < samples and drawn < 400 * samples:
        pts = rng.uniform(-R, R, size=(batch, 2))
        drawn += batch
        mask = pts[:, 0]**2 + pts[:, 1]**2 < R * R
        for q in spec.constraints:
            mask &= q.eval_grid(pts[:, 0], pts[:, 1]) > 0
        for x1, x2 in pts[mask]:
            if total >= samples:
                break
            total += 1
            found = False
            for tri in range(8):
                X, Y = split.to_wedge(tri, x1, x2)
                b = float(split.wedge_bound(tri))
                if not (0 < X and 0 < Y < b * X):
                    continue
                for ch in charts_by_tri.get(tri, ()):
                    if ch.contains_wedge_point(X, Y):
                        found = True
                        break
                break
            if not found:
                uncovered += 1
    frac = uncovered / max(total, 1)
    area = np.pi * R * R
    return {"samples": total, "uncovered": uncovered, "uncovered_fraction": frac,
            "uncovered_area_estimate": frac * area, "area": area}
