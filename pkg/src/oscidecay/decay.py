"""Ray-wise decay fitting, the decay predictor and sharpness probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exponents import global_delta, sublevel_exponent
from .fitting import ExponentEstimate, fit_power_law
from .measures import weight_lp_norm
from .oscillatory import integrate_U
from .problem import ProblemSpec
from .resolution import (check_compatibility, incompatible_split, resolve)

DEFAULT_LADDER = tuple(float(2 ** k) for k in range(4, 21))
CRITICAL = 1.0 / 3.0
CRITICAL_BAND = 0.02
FIT_DROP_SMALLEST = 2


@dataclass(frozen=True)
class RaySpec:
    direction: tuple                  # (d0, d1, d2), not all zero
    magnitudes: tuple = DEFAULT_LADDER

    def __post_init__(self):
        if all(v == 0 for v in self.direction):
            raise ValueError("ray direction must be nonzero")
        mags = tuple(float(t) for t in self.magnitudes)
        if any(t2 <= t1 for t1, t2 in zip(mags, mags[1:])):
            raise ValueError("magnitude ladder must be strictly increasing")

    def lam(self, t: float):
        d0, d1, d2 = self.direction
        return (d0 * t, d1 * t, d2 * t)

    def to_json(self):
        return {"direction": list(self.direction),
                "magnitudes": list(self.magnitudes)}


@dataclass(frozen=True)
class Prediction:
    exponent: float
    log_power: float
    provenance: str
    critical_band: bool = False

    def to_json(self):
        return {"exponent": self.exponent, "log_power": self.log_power,
                "provenance": self.provenance, "critical_band": self.critical_band}


@dataclass(frozen=True)
class DecayReport:
    ray: RaySpec
    samples: tuple            # (t, complex U, error bound)
    fitted: ExponentEstimate
    predicted: Prediction | None
    verdict: str              # consistent | bound-only-verified | violation-flagged
    tolerance: float

    def to_json(self):
        return {
            "ray": self.ray.to_json(),
            "samples": [[t, u.real, u.imag, e] for t, u, e in self.samples],
            "fitted": self.fitted.to_json(),
            "predicted": self.predicted.to_json() if self.predicted else None,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
        }


def _verdict(fitted: float, predicted: float | None, tol: float) -> str:
    if predicted is None:
        return "bound-only-verified"
    diff = fitted - predicted
    if diff < -tol:
        return "violation-flagged"
    if diff > tol:
        return "bound-only-verified"
    return "consistent"


def decay_fit(spec: ProblemSpec, ray: RaySpec, tol: float = 1e-5,
              predicted: Prediction | None = None,
              fit_tolerance: float = 0.05) -> DecayReport:
    """Fit log|U| against log t along the ray and compare to a prediction.

    The two smallest magnitudes are dropped as pre-asymptotic; the fit
    refuses ladders shorter than six points.
    """
    if len(ray.magnitudes) < 6:
        raise ValueError("magnitude ladder needs at least six points")
    samples = []
    for t in ray.magnitudes:
        res = integrate_U(spec, ray.lam(t), tol=tol)
        samples.append((t, res.value, res.error))
    fit_pts = samples[FIT_DROP_SMALLEST:]
    scales = [1.0 / t for t, _u, _e in fit_pts]
    values = [abs(u) for _t, u, _e in fit_pts]
    fitted = fit_power_law(scales, values)
    verdict = _verdict(fitted.exponent,
                       predicted.exponent if predicted else None, fit_tolerance)
    return DecayReport(ray, tuple(samples), fitted, predicted, verdict,
                       fit_tolerance)


@dataclass(frozen=True)
class PredictionBundle:
    compatible: bool
    normal: Prediction | None
    tangential: Prediction | None
    lp: tuple                    # (p, norm, Prediction or None)
    sublevel: ExponentEstimate | None
    delta: ExponentEstimate | None
    delta_direction: tuple | None
    pieces: tuple = ()
    warning: str | None = None

    def to_json(self):
        return {
            "compatible": self.compatible,
            "normal": self.normal.to_json() if self.normal else None,
            "tangential": self.tangential.to_json() if self.tangential else None,
            "lp": [{"p": p, "norm": (None if math.isinf(n) else n),
                    "finite": not math.isinf(n),
                    "prediction": pr.to_json() if pr else None}
                   for p, n, pr in self.lp],
            "sublevel": self.sublevel.to_json() if self.sublevel else None,
            "delta": self.delta.to_json() if self.delta else None,
            "delta_direction": list(self.delta_direction) if self.delta_direction else None,
            "pieces": [pc for pc in self.pieces],
            "warning": self.warning,
        }


def _min_third(value: float, log_power: int, tag: str) -> Prediction:
    if value < CRITICAL - CRITICAL_BAND:
        return Prediction(value, log_power, tag)
    if value <= CRITICAL + CRITICAL_BAND:
        # critical case: extra logarithm, bound-direction checks only
        return Prediction(CRITICAL, log_power + 1, tag + "-critical", True)
    return Prediction(CRITICAL, 0, tag + "-supercritical")


def predict(spec: ProblemSpec, p_values=(), resolution=None, verdict=None,
            seed: int = 0, directions: int = 64) -> PredictionBundle:
    """Decay predictions for normal and tangential rays and the L^p route.

    Compatible specs get min(eps, 1/3) in the normal direction and
    min(delta, 1/3) tangentially, with the fitted log powers; each finite
    L^p norm contributes a tangential bound min(1/p', 1/2).  Incompatible
    specs get per-piece predictions for the sheared replacement phases and
    a warning that the sublevel exponent may degenerate to zero.
    """
    if resolution is None:
        resolution = resolve(spec, seed=seed)
    if verdict is None:
        verdict = check_compatibility(spec, resolution)
    sub = sublevel_exponent(spec)
    delta_est, vmin = global_delta(spec, directions=directions, seed=seed)
    lp_entries = []
    for p in p_values:
        norm = weight_lp_norm(spec, p, resolution=resolution)
        if math.isinf(norm):
            lp_entries.append((p, norm, None))
            continue
        p_conj = float("inf") if p == 1 else p / (p - 1.0)
        exponent = min(1.0 / p_conj if not math.isinf(p_conj) else 0.0, 0.5)
        log_power = 0.5 if p == 2 else 0.0
        lp_entries.append((p, norm, Prediction(exponent, log_power, "lp-tangential")))
    if verdict.compatible:
        normal = _min_third(sub.exponent, sub.log_power, "normal")
        tangential = _min_third(delta_est.exponent, delta_est.log_power, "tangential")
        return PredictionBundle(True, normal, tangential, tuple(lp_entries),
                                sub, delta_est, vmin)
    pieces = incompatible_split(spec, resolution, verdict)
    piece_reports = []
    for piece in pieces:
        piece_spec = ProblemSpec.build(
            phase=piece.replacement_phase, weights=spec.weights,
            constraints=tuple(spec.constraints) + tuple(piece.constraints),
            amplitude=spec.amplitude, disk_radius=spec.disk_radius)
        try:
            piece_sub = sublevel_exponent(piece_spec)
            piece_pred = _min_third(piece_sub.exponent, piece_sub.log_power,
                                    "piece-normal")
            piece_reports.append({
                "chart_index": piece.chart_index, "q": piece.q, "s": piece.s,
                "shear": list(piece.shear),
                "sublevel": piece_sub.to_json(),
                "prediction": piece_pred.to_json()})
        except (ValueError, ArithmeticError) as err:
            piece_reports.append({
                "chart_index": piece.chart_index, "q": piece.q, "s": piece.s,
                "shear": list(piece.shear), "error": str(err)})
    return PredictionBundle(
        False, None, None, tuple(lp_entries), sub, delta_est, vmin,
        tuple(piece_reports),
        warning="incompatible weights: the sublevel exponent of the sheared "
                "pieces may vanish and Theorem-style decay can fail on "
                "resonant rays")


class NoProbeRecipeError(ValueError):
    pass


def _pure_power_x1(phase) -> tuple | None:
    """(m, c) when the phase is c * x1^m, else None."""
    terms = phase.terms
    if len(terms) != 1:
        return None
    (a, b), c = next(iter(terms.items()))
    if b != 0 or a < 2:
        return None
    return a, float(c)


@dataclass(frozen=True)
class ProbeReport:
    recipe: str
    ray: RaySpec
    report: DecayReport
    floor: float
    sharp: bool
    note: str

    def to_json(self):
        return {"recipe": self.recipe, "ray": self.ray.to_json(),
                "report": self.report.to_json(), "floor": self.floor,
                "sharp": self.sharp, "note": self.note}


def sharpness_probe(spec: ProblemSpec, resolution=None, seed: int = 0,
                    ladder=None, tol: float = 1e-5,
                    fit_tolerance: float = 0.05) -> ProbeReport:
    """Probe whether the predicted decay floor is attained.

    Pure-power phases c*x1^m get the adversarial ray with an order-3
    stationary point at x0 inside the disk (the two stationarity equations
    are linear in the ray ratios); other compatible specs get the normal
    ray against the sublevel exponent floor.
    """
    if resolution is None:
        resolution = resolve(spec, seed=seed)
    sub = sublevel_exponent(spec)
    ladder = tuple(ladder) if ladder is not None else DEFAULT_LADDER
    pp = _pure_power_x1(spec.phase)
    if pp is not None:
        m, c = pp
        r = 0.9 * float(spec.disk_radius)
        x0 = 0.75 * r
        # solve d/dx and d2/dx2 of c x^m + c1 x + c2 x^3 = 0 at x0
        c2 = -c * m * (m - 1) * x0 ** (m - 3) / 6.0
        c1 = -c * m * x0 ** (m - 1) - 3.0 * c2 * x0 * x0
        ray = RaySpec((1.0, c1, c2), ladder)
        floor = min(sub.exponent, CRITICAL)
        report = decay_fit(spec, ray, tol=tol, fit_tolerance=fit_tolerance)
        sharp = report.fitted.exponent <= floor + 0.17
        note = ("order-3 stationary ray at x0=%.4g: fitted %.4f vs floor %.4f"
                % (x0, report.fitted.exponent, floor))
        return ProbeReport("order-3-stationary", ray, report, floor, sharp, note)
    verdict = check_compatibility(spec, resolution)
    if not verdict.compatible:
        raise NoProbeRecipeError("no probe recipe for incompatible non-power phases")
    ray = RaySpec((1.0, 0.0, 0.0), ladder)
    floor = min(sub.exponent, CRITICAL)
    pred = _min_third(sub.exponent, sub.log_power, "normal")
    report = decay_fit(spec, ray, tol=tol, predicted=pred,
                       fit_tolerance=fit_tolerance)
    sharp = abs(report.fitted.exponent - floor) <= fit_tolerance + 0.03
    note = ("normal-direction probe: fitted %.4f vs floor %.4f"
            % (report.fitted.exponent, floor))
    return ProbeReport("normal-direction", ray, report, floor, sharp, note)
