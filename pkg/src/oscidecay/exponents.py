"""Slab exponents, the global tangential exponent and sublevel exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fitting import ExponentEstimate, fit_power_law
from .measures import slab_measure, sublevel_measure, total_mass
from .newton import exceptional_directions
from .problem import ProblemSpec

DEFAULT_SCALE_RANGE = (4, 16)
DEFAULT_DIRECTIONS = 64


def _dyadic_scales(lo: int, hi: int):
    return [2.0 ** -k for k in range(lo, hi + 1)]


def slab_exponent(spec: ProblemSpec, v, rel_tol: float = 1e-4,
                  scale_range=DEFAULT_SCALE_RANGE) -> ExponentEstimate:
    """Fit the slab mass {|x.v| < r} ~ r^delta |log r|^e over dyadic r."""
    c = 0.5 * float(spec.disk_radius)
    scales = [r for r in _dyadic_scales(*scale_range) if r < 0.99 * c]
    if len(scales) < 5:
        scales = [c * 2.0 ** -k for k in range(1, 12)]
    values = [slab_measure(spec, v, r, c, rel_tol=rel_tol) for r in scales]
    kept = [(r, m) for r, m in zip(scales, values) if m > 0]
    for (r1, m1), (r2, m2) in zip(kept, kept[1:]):
        if m2 > m1 * (1 + 1e-9):
            raise AssertionError("slab measure must be nondecreasing in r")
    return fit_power_law([r for r, _ in kept], [m for _, m in kept])


def global_delta(spec: ProblemSpec, directions: int = DEFAULT_DIRECTIONS,
                 rel_tol: float = 1e-4, scale_range=DEFAULT_SCALE_RANGE,
                 seed: int = 0):
    """(estimate, minimizing direction): delta = inf over directions of delta_v.

    Directions are the exceptional perpendiculars plus a uniform grid; the
    returned estimate carries the minimal exponent and the maximal log power
    among near-minimizers.
    """
    dirs = list(exceptional_directions(spec))
    thetas = (np.arange(directions) + 0.5 * (seed % 7) / 7.0) * math.pi / directions
    dirs += [(math.cos(t), math.sin(t)) for t in thetas]
    fits = []
    for v in dirs:
        fits.append((slab_exponent(spec, v, rel_tol=rel_tol,
                                   scale_range=scale_range), v))
    best = min(fits, key=lambda fv: fv[0].exponent)
    tol_band = 0.02
    near = [f for f, _v in fits if f.exponent <= best[0].exponent + tol_band]
    log_power = max(f.log_power for f in near)
    est = ExponentEstimate(best[0].exponent, log_power, best[0].samples,
                           best[0].residual, best[0].confidence_interval,
                           best[0].log_ambiguous)
    return est, best[1]


def sublevel_exponent(spec: ProblemSpec, rel_tol: float = 1e-4,
                      scale_range=DEFAULT_SCALE_RANGE) -> ExponentEstimate:
    """Fit mu_h({|f| < t}) ~ t^eps |log t|^l over dyadic t.

    Saturated scales (sublevel set filling the whole region) are dropped
    before fitting.
    """
    scales = _dyadic_scales(*scale_range)
    mass = total_mass(spec, rel_tol=rel_tol)
    values = [sublevel_measure(spec, t, rel_tol=rel_tol) for t in scales]
    kept = [(t, m) for t, m in zip(scales, values) if 0 < m < 0.995 * mass]
    for (t1, m1), (t2, m2) in zip(kept, kept[1:]):
        if m2 > m1 * (1 + 1e-9):
            raise AssertionError("sublevel measure must be nondecreasing in t")
    if len(kept) < 5:
        raise ValueError("too few unsaturated sublevel scales to fit")
    return fit_power_law([t for t, _ in kept], [m for _, m in kept])
