"""Truncated Puiseux series in one variable and branch data.

A PuiseuxPoly is a finite sum of c * x^e with rational exponents e >= 0;
coefficients stay exact Fractions as long as the input data allows and
degrade to high-precision mpmath floats once an irrational branch
coefficient enters.  A PuiseuxBranch is the user-facing truncated branch
y = k(x) with its ramification index, truncation order and validity radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import mpmath

from .polynomials import BivariatePoly, format_rational, parse_rational

DEFAULT_PRECISION_BITS = 100


class InsufficientTruncationError(ValueError):
    pass


class OutsideValidityRadiusError(ValueError):
    pass


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


def coeff_is_zero(c, scale: float = 1.0) -> bool:
    """Zero test: exact for rationals, thresholded for floats."""
    if _is_exact(c):
        return c == 0
    return abs(float(c)) <= 2.0**-70 * max(scale, 1.0)


class PuiseuxPoly:
    """Finite Puiseux polynomial sum(c_e * x^e), exponents rational >= 0."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        out = {}
        for e, c in items:
            e = e if isinstance(e, Fraction) else Fraction(e)
            if e in out:
                c = _add(out[e], c)
            if not coeff_is_zero(c):
                out[e] = c
            elif e in out:
                del out[e]
        self.coeffs = dict(sorted(out.items()))

    @staticmethod
    def zero():
        return PuiseuxPoly()

    @staticmethod
    def constant(c):
        return PuiseuxPoly({Fraction(0): c}) if not coeff_is_zero(c) else PuiseuxPoly()

    @staticmethod
    def term(coeff, exponent):
        return PuiseuxPoly({Fraction(exponent): coeff})

    @staticmethod
    def from_x_poly(p: BivariatePoly):
        """From a bivariate polynomial that only involves x."""
        if p.y_degree() > 0:
            raise ValueError("polynomial involves y")
        return PuiseuxPoly({Fraction(a): c for (a, b), c in p.terms.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def valuation(self) -> Fraction | None:
        return min(self.coeffs) if self.coeffs else None

    def leading(self):
        """(exponent, coefficient) of the lowest-order term."""
        if not self.coeffs:
            return None
        e = min(self.coeffs)
        return e, self.coeffs[e]

    def __add__(self, other):
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = _add(out.get(e, 0), c)
        return PuiseuxPoly(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        if coeff_is_zero(c):
            return PuiseuxPoly()
        return PuiseuxPoly({e: _mul(v, c) for e, v in self.coeffs.items()})

    def __mul__(self, other):
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                out[e] = _add(out.get(e, 0), _mul(c1, c2))
        return PuiseuxPoly(out)

    def shift_exponents(self, delta: Fraction):
        return PuiseuxPoly({e + delta: c for e, c in self.coeffs.items()})

    def truncate(self, max_exp: Fraction):
        return PuiseuxPoly({e: c for e, c in self.coeffs.items() if e <= max_exp})

    def derivative(self, order: int = 1):
        cur = self
        for _ in range(order):
            cur = PuiseuxPoly({e - 1: _mul(c, e) for e, c in cur.coeffs.items() if e != 0})
        return cur

    def eval(self, x: float) -> float:
        return sum(float(c) * x ** float(e) for e, c in self.coeffs.items())

    def ramification(self) -> int:
        return lcm(1, *(e.denominator for e in self.coeffs)) if self.coeffs else 1

    def max_exponent(self) -> Fraction:
        return max(self.coeffs) if self.coeffs else Fraction(0)

    def __repr__(self):
        if not self.coeffs:
            return "PuiseuxPoly(0)"
        return "PuiseuxPoly(" + " + ".join(f"{c}*x^{e}" for e, c in self.coeffs.items()) + ")"

    def __eq__(self, other):
        return isinstance(other, PuiseuxPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))


def _to_mpf(v):
    if isinstance(v, mpmath.mpf):
        return v
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def _add(a, b):
    if _is_exact(a) and _is_exact(b):
        return (a if isinstance(a, Fraction) else Fraction(a)) + b
    if isinstance(a, mpmath.mpf) or isinstance(b, mpmath.mpf):
        return _to_mpf(a) + _to_mpf(b)
    return float(a) + float(b)


def _mul(a, b):
    if _is_exact(a) and _is_exact(b):
        return (a if isinstance(a, Fraction) else Fraction(a)) * b
    if isinstance(a, mpmath.mpf) or isinstance(b, mpmath.mpf):
        return _to_mpf(a) * _to_mpf(b)
    return float(a) * float(b)


@dataclass(frozen=True)
class PuiseuxBranch:
    """Truncated branch y = sum(coeff * x^exp) with bookkeeping.

    Exponents are exact rationals whose denominators divide the
    ramification index; coefficients are exact rationals or high-precision
    floats.  truncation_order bounds the honest content of the expansion
    and the tail constant turns it into an evaluation error bound.
    """

    ramification: int
    terms: tuple  # ((Fraction exponent, coefficient), ...)
    truncation_order: Fraction
    validity_radius: Fraction = Fraction(1)
    tail_coeff: float = 1.0

    def __post_init__(self):
        if self.ramification < 1:
            raise ValueError("ramification must be a positive integer")
        exps = [e for e, _ in self.terms]
        if any(e2 <= e1 for e1, e2 in zip(exps, exps[1:])):
            raise ValueError("exponents must be strictly increasing")
        if any((e * self.ramification).denominator != 1 for e in exps):
            raise ValueError("exponent denominators must divide ramification")
        if exps and self.truncation_order < max(exps):
            raise ValueError("truncation_order below largest stored exponent")
        if self.validity_radius <= 0:
            raise ValueError("validity_radius must be positive")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero(truncation_order=Fraction(10), validity_radius=Fraction(1)):
        return PuiseuxBranch(1, (), Fraction(truncation_order), Fraction(validity_radius), 0.0)

    @staticmethod
    def from_terms(terms, truncation_order=None, validity_radius=Fraction(1), tail_coeff=None):
        """terms: iterable of (exponent, coefficient)."""
        clean = []
        for e, c in terms:
            e = Fraction(e)
            if not coeff_is_zero(c):
                clean.append((e, c if _is_exact(c) else float(c)))
        clean.sort(key=lambda t: t[0])
        ram = lcm(1, *(e.denominator for e, _ in clean)) if clean else 1
        if truncation_order is None:
            truncation_order = max((e for e, _ in clean), default=Fraction(1))
        if tail_coeff is None:
            tail_coeff = max(1.0, sum(abs(float(c)) for _, c in clean))
        return PuiseuxBranch(ram, tuple(clean), Fraction(truncation_order),
                             Fraction(validity_radius), float(tail_coeff))

    @staticmethod
    def from_poly(poly: PuiseuxPoly, truncation_order=None, validity_radius=Fraction(1), tail_coeff=None):
        return PuiseuxBranch.from_terms(poly.coeffs.items(), truncation_order,
                                        validity_radius, tail_coeff)

    # -- structure ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def as_poly(self) -> PuiseuxPoly:
        return PuiseuxPoly({e: c for e, c in self.terms})

    def linear_coefficient(self):
        """Coefficient p of the x term (0 when absent)."""
        for e, c in self.terms:
            if e == 1:
                return c
        return 0

    def first_nonlinear(self):
        """(s, l) for the lowest exponent s > 1 with l != 0, else None."""
        for e, c in self.terms:
            if e > 1:
                return e, c
            if e < 1:
                return e, c  # exponents below 1 also make the shift nonlinear
        return None

    def is_linear(self) -> bool:
        return all(e == 1 for e, _ in self.terms)

    def leading(self):
        return (self.terms[0][0], self.terms[0][1]) if self.terms else None

    # -- evaluation --------------------------------------------------------
    def eval(self, x: float) -> float:
        return sum(float(c) * x ** float(e) for e, c in self.terms)

    def eval_with_bound(self, x) -> tuple[float, float]:
        """Value and truncation-error bound C * x^truncation_order."""
        x = float(x)
        if not (0 < x < float(self.validity_radius)):
            if x == 0.0:
                return 0.0, 0.0
            raise OutsideValidityRadiusError(f"x={x} outside (0, {self.validity_radius})")
        return self.eval(x), self.tail_coeff * x ** float(self.truncation_order)

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "ramification": self.ramification,
            "terms": [[format_rational(e), _coeff_str(c)] for e, c in self.terms],
            "truncation_order": format_rational(self.truncation_order),
            "validity_radius": format_rational(self.validity_radius),
            "tail_coeff": self.tail_coeff,
        }

    @staticmethod
    def from_json(data: dict) -> "PuiseuxBranch":
        terms = []
        for e_str, c_str in data["terms"]:
            e = parse_rational(e_str)
            c = Fraction(c_str) if "/" in str(c_str) else (
                Fraction(c_str) if _looks_exact(c_str) else float(c_str))
            terms.append((e, c))
        return PuiseuxBranch(
            int(data["ramification"]), tuple(terms),
            parse_rational(data["truncation_order"]),
            parse_rational(data.get("validity_radius", 1)),
            float(data.get("tail_coeff", 1.0)),
        )


def _coeff_str(c) -> str:
    if isinstance(c, Fraction):
        return format_rational(c)
    if isinstance(c, int):
        return str(c)
    return repr(float(c))


def _looks_exact(s) -> bool:
    s = str(s)
    return "." not in s and "e" not in s and "E" not in s


@dataclass(frozen=True)
class ShiftedPoly:
    """p(x, sign*y + k(x)) expanded: y-coefficients are Puiseux series in x."""

    coeffs: tuple  # tuple[PuiseuxPoly], index = power of y
    trunc_exponent: Fraction

    def y_degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, j: int) -> PuiseuxPoly:
        return self.coeffs[j] if j < len(self.coeffs) else PuiseuxPoly.zero()

    def eval(self, x: float, y: float) -> float:
        return sum(c.eval(x) * y**j for j, c in enumerate(self.coeffs))

    def constant_series(self) -> PuiseuxPoly:
        return self.coeffs[0] if self.coeffs else PuiseuxPoly.zero()


def shift_ypoly(ycoeffs: list[PuiseuxPoly], shift: PuiseuxPoly, sign: int = 1) -> list[PuiseuxPoly]:
    """Substitute y -> sign*y + shift(x) into sum(c_j(x) y^j)."""
    deg = len(ycoeffs) - 1
    out = [PuiseuxPoly.zero() for _ in range(deg + 1)]
    # powers of (sign*y + shift): maintain as list over y-powers of PuiseuxPoly
    pow_coeffs = [PuiseuxPoly.constant(1)]  # (sign*y + shift)^0
    for j, cj in enumerate(ycoeffs):
        if j > 0:
            new = [PuiseuxPoly.zero() for _ in range(j + 1)]
            for i, pc in enumerate(pow_coeffs):
                if pc.is_zero():
                    continue
                new[i] = new[i] + pc * shift          # times shift(x)
                new[i + 1] = new[i + 1] + pc.scale(sign)  # times sign*y
            pow_coeffs = new
        if cj.is_zero():
            continue
        for i, pc in enumerate(pow_coeffs):
            if not pc.is_zero():
                out[i] = out[i] + pc * cj
    while len(out) > 1 and out[-1].is_zero():
        out.pop()
    return out


def substitute_branch(p: BivariatePoly, branch: PuiseuxBranch, sign: int = 1,
                      trunc=None) -> ShiftedPoly:
    """Expand p(x, sign*y + k(x)) and truncate the series coefficients.

    The returned object is exact when the branch coefficients are exact;
    trunc_exponent states the order beyond which x-terms were dropped.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if trunc is None:
        trunc = branch.truncation_order
    trunc = Fraction(trunc)
    if trunc > branch.truncation_order:
        raise InsufficientTruncationError(
            f"requested truncation {trunc} exceeds branch order {branch.truncation_order}")
    ycoeffs = [PuiseuxPoly.from_x_poly(c) for c in p.y_coefficients()] or [PuiseuxPoly.zero()]
    shifted = shift_ypoly(ycoeffs, branch.as_poly(), sign)
    return ShiftedPoly(tuple(c.truncate(trunc) for c in shifted), trunc)


def eval_branch(branch: PuiseuxBranch, x) -> tuple[float, float]:
    """Evaluate a branch at 0 < x < validity_radius with an error bound."""
    return branch.eval_with_bound(x)
