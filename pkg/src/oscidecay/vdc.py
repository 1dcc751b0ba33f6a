"""Certified Van der Corput bounds and dyadic cell bounds.

The one-dimensional kth-derivative bound, the first-derivative variant
with a second-derivative control, and the two-dimensional mixed-derivative
bound are plain formula evaluators whose constants are explicit and
configurable.  The cell bounds integrate the min-form of the decay kernel
against the chart-coordinate weight monomials in closed form over dyadic
rectangles; one fitted constant per problem is calibrated on a small grid
of chart cells and frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quadrature import legendre_rule
from .resolution import PHASE, PHASE_DY, Chart, ResolutionResult

#: constant of the classical inductive proof of the kth-derivative lemma
def default_ck(k: int) -> float:
    return 5.0 * 2.0 ** (k - 1) - 2.0


def default_ckl(k: int, l: int) -> float:
    return 10.0 * k * l


@dataclass(frozen=True)
class CertifiedBound:
    value: float
    lemma: str
    inputs: dict

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("certified bound must be nonnegative")

    def to_json(self):
        return {"value": self.value, "lemma": self.lemma,
                "inputs": {k: (str(v) if isinstance(v, Fraction) else v)
                           for k, v in self.inputs.items()}}


def bound_kth(A: float, k: int, amp_boundary: float, amp_variation: float,
              ck=None) -> CertifiedBound:
    """c_k A^(-1/k) (|phi(b)| + int |phi'|) for |h^(k)| > A.

    For k = 1 the caller asserts monotonicity of h'.
    """
    if A <= 0:
        raise ValueError("nonpositive-A")
    if k < 1:
        raise ValueError("derivative order must be >= 1")
    c = default_ck(k) if ck is None else float(ck)
    value = c * A ** (-1.0 / k) * (abs(amp_boundary) + abs(amp_variation))
    return CertifiedBound(value, "kth", {"A": A, "k": k, "c_k": c,
                                         "amp_boundary": amp_boundary,
                                         "amp_variation": amp_variation})


def bound_first(A: float, B: float, amp_sup: float,
                amp_variation: float) -> CertifiedBound:
    """A^(-1) (int |phi'| + (B+2) sup |phi|) for |h'| > A, |h''| < B A/(b-a)."""
    if A <= 0:
        raise ValueError("nonpositive-A")
    if B < 0:
        raise ValueError("B must be nonnegative")
    value = (abs(amp_variation) + (B + 2.0) * abs(amp_sup)) / A
    return CertifiedBound(value, "first", {"A": A, "B": B, "amp_sup": amp_sup,
                                           "amp_variation": amp_variation})


def bound_mixed(M: float, N: float, l1: float, l2: float, k: int, l: int,
                ckl=None) -> CertifiedBound:
    """C_kl N sqrt(l1 l2 / M) for |d2P/dxdy| > M on at most l intervals."""
    if M <= 0:
        raise ValueError("nonpositive-M")
    c = default_ckl(k, l) if ckl is None else float(ckl)
    value = c * abs(N) * math.sqrt(l1 * l2 / M)
    return CertifiedBound(value, "mixed", {"M": M, "N": N, "l1": l1, "l2": l2,
                                           "k": k, "l": l, "C_kl": c,
                                           "conservative": True})


# ---------------------------------------------------------------------------
# dyadic cell bounds


def _power_integral(p: float, a: float, b: float) -> float:
    """int_a^b t^p dt for 0 <= a < b (a may be 0 when p > -1)."""
    if b <= a:
        return 0.0
    if a <= 0.0:
        if p <= -1.0:
            return float("inf")
        return b ** (p + 1.0) / (p + 1.0)
    if abs(p + 1.0) < 1e-12:
        return math.log(b / a)
    return (b ** (p + 1.0) - a ** (p + 1.0)) / (p + 1.0)


def _chart_weight_data(resolution: ResolutionResult, chart: Chart):
    A0 = 0.0
    B0 = 0.0
    W = 1.0
    for name, mono in chart.monomials.items():
        if not name.startswith("h"):
            continue
        gamma = resolution.weight_gammas[int(name[1:])]
        A0 += gamma * float(mono.alpha)
        B0 += gamma * mono.beta
        W *= abs(mono.d) ** gamma
    return A0, B0, W


def chart_variant(chart: Chart) -> str:
    return "cell-4.9a" if chart.shift_is_linear else "cell-4.9b"


def cell_bound(resolution: ResolutionResult, chart: Chart, cell, lam,
               variant: str = "auto", fitted_c: float = 1.0) -> CertifiedBound:
    """Closed-form bound for the chart-cell piece of |U| at lam.

    cell = (l, m) selects [2^-l-1, 2^-l] x [2^-m-1, 2^-m] in chart
    coordinates, clipped to the chart; negative m extends the final cell
    down to the chart's lower boundary.  The min of the decay-kernel
    candidates is bounded by the min of their closed-form integrals.
    """
    l, m = cell
    lam0, lam1, lam2 = (float(v) for v in lam)
    if variant == "auto":
        variant = chart_variant(chart)
    a = float(chart.radius)
    x_lo, x_hi = 2.0 ** (-l - 1), 2.0 ** -l
    x_lo, x_hi = min(x_lo, a), min(x_hi, a)
    if x_hi <= x_lo:
        return CertifiedBound(0.0, variant, {"empty": True})
    up_c, up_e = chart.upper_leading
    G_hi = up_c * x_hi ** float(up_e)
    low = chart.lower_leading
    g_lo = 0.0 if low is None else low[0] * x_lo ** float(low[1])
    if m < 0:
        y_lo, y_hi = g_lo, 2.0 ** m
    else:
        y_lo, y_hi = 2.0 ** (-m - 1), 2.0 ** -m
    y_hi = min(y_hi, G_hi)
    if y_hi <= y_lo:
        return CertifiedBound(0.0, variant, {"empty": True})
    A0, B0, W = _chart_weight_data(resolution, chart)
    f_mono = chart.monomials[PHASE]
    alpha, beta, d_f = float(f_mono.alpha), f_mono.beta, abs(f_mono.d)
    candidates = [_power_integral(A0, x_lo, x_hi) * _power_integral(B0, y_lo, y_hi)]
    lam_prime = math.hypot(lam1, lam2)
    if variant == "cell-4.9a" and lam2 != 0.0:
        candidates.append(abs(lam2) ** (-1.0 / 3.0)
                          * _power_integral(A0, x_lo, x_hi)
                          * _power_integral(B0 - 1.0 / 3.0, y_lo, y_hi))
    if variant == "cell-4.9b" and lam2 != 0.0:
        nl = chart.shift_nonlinear_part
        s = float(nl[0]) if nl is not None else 1.0
        candidates.append(abs(lam2) ** (-1.0 / 3.0)
                          * _power_integral(A0 - s / 3.0, x_lo, x_hi)
                          * _power_integral(B0, y_lo, y_hi))
    if variant == "cell-6.1" and lam_prime != 0.0:
        candidates.append(lam_prime ** -0.5
                          * _power_integral(A0, x_lo, x_hi)
                          * _power_integral(B0 - 0.5, y_lo, y_hi))
    if variant in ("cell-4.9a", "cell-4.9b") and lam0 != 0.0 and d_f > 0.0:
        candidates.append((abs(lam0) * d_f) ** (-1.0 / 3.0)
                          * _power_integral(A0 - alpha / 3.0, x_lo, x_hi)
                          * _power_integral(B0 - beta / 3.0, y_lo, y_hi))
    base = min(candidates)
    value = fitted_c * W * base
    if math.isnan(value):
        value = float("inf")
    return CertifiedBound(value, variant,
                          {"l": l, "m": m, "lam": list(lam), "A0": A0, "B0": B0,
                           "W": W, "fitted_c": fitted_c})


def chart_cells(chart: Chart, l_cap: int = 42):
    """Dyadic (l, m) indices meeting the chart, including tail cells m = -M."""
    a = float(chart.radius)
    l_min = max(0, int(math.floor(-math.log2(a))))
    out = []
    up_c, up_e = chart.upper_leading
    low = chart.lower_leading
    for l in range(l_min, l_cap):
        x_lo, x_hi = 2.0 ** (-l - 1), min(2.0 ** -l, a)
        if x_hi <= x_lo:
            continue
        G_hi = up_c * x_hi ** float(up_e)
        g_lo = 0.0 if low is None else low[0] * x_lo ** float(low[1])
        if G_hi <= 0:
            continue
        m_min = max(0, int(math.floor(-math.log2(G_hi))))
        m_cap = int(math.ceil(-math.log2(max(g_lo, G_hi * 2.0 ** -26))))
        for m in range(m_min, m_cap + 1):
            out.append((l, m))
        # tail below the last dyadic row, down to the lower boundary
        out.append((l, -(m_cap + 1)))
    return out


def chart_cell_U(resolution: ResolutionResult, spec, chart: Chart, cell, lam,
                 n: int = 48) -> complex:
    """Direct quadrature of the chart-cell piece of U in chart coordinates."""
    l, m = cell
    lam0, lam1, lam2 = (float(v) for v in lam)
    a = float(chart.radius)
    x_lo, x_hi = 2.0 ** (-l - 1), min(2.0 ** -l, a)
    if x_hi <= x_lo:
        return 0.0j
    tx, wx = legendre_rule(n)
    ty, wy = legendre_rule(n)
    hx = 0.5 * (x_hi - x_lo)
    xs = x_lo + hx * (tx + 1.0)
    total = 0.0j
    f_tri = resolution.poly_for(chart, PHASE)
    h_tris = [(resolution.poly_for(chart, f"h{j}"), g)
              for j, (_h, g) in enumerate(spec.weights)]
    amp = spec.amplitude
    refl = chart.reflection
    for xi, wxi in zip(xs, wx):
        g, G = chart.t_interval(xi)
        y_lo = max(g, 2.0 ** (-m - 1)) if m >= 0 else g
        y_hi = min(G, 2.0 ** -m) if m >= 0 else min(G, 2.0 ** m)
        if y_hi <= y_lo:
            continue
        hy = 0.5 * (y_hi - y_lo)
        ts = y_lo + hy * (ty + 1.0)
        k_val = chart.shift.eval(xi)
        Yw = k_val + chart.sign * ts
        fv = f_tri.eval_grid(np.full_like(ts, xi), Yw)
        x1o = refl[0][0] * xi + refl[0][1] * Yw
        x2o = refl[1][0] * xi + refl[1][1] * Yw
        wgt = np.abs(amp.eval_grid(x1o, x2o))
        for h_tri, gamma in h_tris:
            hv = np.abs(h_tri.eval_grid(np.full_like(ts, xi), Yw))
            wgt = wgt * np.maximum(hv, 1e-300) ** float(gamma)
        phase = lam0 * fv + lam1 * x1o + lam2 * x2o
        total += wxi * hy * np.dot(wy, wgt * np.exp(1j * phase))
    return total * hx


DEFAULT_CALIBRATION_LAMBDAS = ((16.0, 0.0, 0.0), (48.0, 0.0, 16.0),
                               (0.0, 12.0, 36.0))


def calibrate_fitted_c(resolution: ResolutionResult, spec,
                       lambdas=DEFAULT_CALIBRATION_LAMBDAS,
                       safety: float = 2.0) -> dict:
    """Frozen per-problem constant: max |U_cell| / base bound on a small grid."""
    worst = 1.0
    samples = []
    for chart in resolution.charts_in_region():
        cells = chart_cells(chart, l_cap=8)
        probe = [c for c in cells if c[1] >= 0][:3]
        for cell in probe:
            for lam in lambdas:
                base = cell_bound(resolution, chart, cell, lam, fitted_c=1.0)
                if base.value <= 0 or math.isinf(base.value):
                    continue
                u_val = abs(chart_cell_U(resolution, spec, chart, cell, lam))
                ratio = u_val / base.value
                samples.append((chart.index, cell, lam, ratio))
                worst = max(worst, ratio)
    return {"fitted_c": worst * safety, "max_ratio": worst, "safety": safety,
            "samples": len(samples)}


def certify_total(resolution: ResolutionResult, spec, lam, fitted_c: float,
                  variant: str = "auto", l_cap: int = 42):
    """Sum of cell bounds over all in-region charts; dominates |U(lam)|."""
    per_chart = []
    total = 0.0
    for chart in resolution.charts_in_region():
        sub = 0.0
        for cell in chart_cells(chart, l_cap=l_cap):
            b = cell_bound(resolution, chart, cell, lam, variant=variant,
                           fitted_c=fitted_c)
            sub += b.value
        per_chart.append({"chart": chart.index, "bound": sub})
        total += sub
    return {"lam": [float(v) for v in lam], "total": total,
            "per_chart": per_chart, "fitted_c": fitted_c}
