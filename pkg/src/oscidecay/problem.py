"""Problem specification: phase, power-law weights, region and amplitude.

The integral under study is

    U(l0, l1, l2) = integral over {q_j > 0} cap D of
        exp(i*(l0*f + l1*x1 + l2*x2)) * alpha * prod |h_j|^gamma_j

with polynomial f, h_j, q_j, alpha and a disk D of rational radius.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .polynomials import BivariatePoly, format_rational, parse_rational


class OutsideRegionError(ValueError):
    """Raised when a point violates some constraint q_j > 0."""


class SpecValidationError(ValueError):
    pass


@dataclass(frozen=True)
class WeightSignal:
    """Tagged result of weight evaluation on a zero set of some h_j."""

    value: float            # +inf (some gamma_j < 0 there) or 0.0
    factors: tuple          # indices of the vanishing h_j

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class ProblemSpec:
    phase: BivariatePoly
    weights: tuple          # ((BivariatePoly h_j, Fraction gamma_j), ...)
    constraints: tuple      # (BivariatePoly q_j, ...)
    amplitude: BivariatePoly
    disk_radius: Fraction

    def __post_init__(self):
        if self.phase.eval(Fraction(0), Fraction(0)) != 0:
            raise SpecValidationError("phase must vanish at the origin")
        fx = self.phase.derive(1, 0).eval(Fraction(0), Fraction(0))
        fy = self.phase.derive(0, 1).eval(Fraction(0), Fraction(0))
        if fx != 0 or fy != 0:
            raise SpecValidationError("phase gradient must vanish at the origin")
        for h, _ in self.weights:
            if h.is_zero():
                raise SpecValidationError("weight polynomial is identically zero")
        if self.disk_radius <= 0:
            raise SpecValidationError("disk_radius must be positive")
        if not self._region_nonempty():
            raise SpecValidationError("region E cap D appears empty (sampled)")

    def _region_nonempty(self, samples: int = 4096) -> bool:
        rng = np.random.default_rng(19)
        R = float(self.disk_radius)
        pts = rng.uniform(-R, R, size=(samples, 2))
        inside = pts[:, 0] ** 2 + pts[:, 1] ** 2 < R * R
        pts = pts[inside]
        if not self.constraints:
            return len(pts) > 0
        mask = np.ones(len(pts), dtype=bool)
        for q in self.constraints:
            mask &= q.eval_grid(pts[:, 0], pts[:, 1]) > 0
        return bool(mask.any())

    # -- construction ------------------------------------------------------
    @staticmethod
    def build(phase, weights=(), constraints=(), amplitude=None, disk_radius=Fraction(1, 4)):
        weights = tuple((h, parse_rational(g) if not isinstance(g, float) or g == int(g)
                         else Fraction(g).limit_denominator(10**9)) for h, g in weights)
        if amplitude is None:
            amplitude = BivariatePoly.constant(1)
        return ProblemSpec(phase, weights, tuple(constraints), amplitude,
                           parse_rational(disk_radius))

    # -- evaluation --------------------------------------------------------
    def inside_region(self, x, y) -> bool:
        if float(x) ** 2 + float(y) ** 2 >= float(self.disk_radius) ** 2:
            return False
        return all(q.eval(x, y) > 0 for q in self.constraints)

    def eval_weight(self, point):
        """Weight alpha * prod |h_j|^gamma_j at a point inside the region.

        Returns a float, or a WeightSignal when the point lies on the zero
        set of some h_j (value +inf for a negative exponent there, 0.0 for
        a positive one).  Raises OutsideRegionError outside {q_j > 0}.
        """
        x, y = point
        for q in self.constraints:
            if q.eval(x, y) <= 0:
                raise OutsideRegionError(f"constraint {q!r} nonpositive at {point}")
        vanishing = []
        negative = False
        value = float(self.amplitude.eval(x, y))
        for j, (h, gamma) in enumerate(self.weights):
            hv = h.eval(x, y)
            if hv == 0:
                if gamma != 0:
                    vanishing.append(j)
                    negative = negative or gamma < 0
                continue
            value *= abs(float(hv)) ** float(gamma)
        if vanishing:
            return WeightSignal(float("inf") if negative else 0.0, tuple(vanishing))
        return value

    def amplitude_bound(self) -> float:
        """Constant A bounding |alpha| on the disk (coefficient sum bound)."""
        R = float(self.disk_radius)
        return sum(abs(float(c)) * R ** (a + b) for (a, b), c in self.amplitude.terms.items()) or 1.0

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        out = {
            "phase": self.phase.to_json(),
            "weights": [{"poly": h.to_json(), "gamma": _gamma_json(g)} for h, g in self.weights],
            "constraints": [q.to_json() for q in self.constraints],
            "disk_radius": format_rational(self.disk_radius),
        }
        if self.amplitude != BivariatePoly.constant(1):
            out["amplitude"] = self.amplitude.to_json()
        return out

    @staticmethod
    def from_json(data) -> "ProblemSpec":
        if isinstance(data, str):
            data = json.loads(data)
        weights = tuple((BivariatePoly.from_json(w["poly"]), parse_rational(w["gamma"]))
                        for w in data.get("weights", []))
        constraints = tuple(BivariatePoly.from_json(q) for q in data.get("constraints", []))
        amplitude = (BivariatePoly.from_json(data["amplitude"])
                     if "amplitude" in data else BivariatePoly.constant(1))
        return ProblemSpec(
            BivariatePoly.from_json(data["phase"]), weights, constraints,
            amplitude, parse_rational(data["disk_radius"]))

    def content_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _gamma_json(g: Fraction):
    return format_rational(g)


def load_problem(path) -> ProblemSpec:
    with open(path) as fh:
        return ProblemSpec.from_json(json.load(fh))


def save_problem(spec: ProblemSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
