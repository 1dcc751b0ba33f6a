"""Exact bivariate polynomials with rational coefficients.

Terms are stored sparsely as a mapping from exponent pairs (a, b) to
nonzero Fraction coefficients.  These polynomials carry the phase, the
weight factors, the region constraints and the amplitude; every geometric
decision downstream (Newton polygons, branch expansions, vertex tests)
is made in exact arithmetic on this representation.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

Exponent = tuple[int, int]


def parse_rational(value) -> Fraction:
    """Accept Fraction, int, 'num/den' strings and exact floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


class BivariatePoly:
    """Sparse bivariate polynomial over the rationals."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, Fraction] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[Exponent, Fraction] = {}
        for (a, b), c in items:
            if a < 0 or b < 0:
                raise ValueError(f"negative exponent pair ({a}, {b})")
            c = parse_rational(c)
            if c != 0:
                key = (int(a), int(b))
                clean[key] = clean.get(key, Fraction(0)) + c
        self.terms = {k: v for k, v in sorted(clean.items()) if v != 0}
        self._hash = None

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero() -> "BivariatePoly":
        return BivariatePoly()

    @staticmethod
    def constant(c) -> "BivariatePoly":
        return BivariatePoly({(0, 0): parse_rational(c)})

    @staticmethod
    def monomial(a: int, b: int, c=1) -> "BivariatePoly":
        return BivariatePoly({(a, b): parse_rational(c)})

    @staticmethod
    def x(power: int = 1) -> "BivariatePoly":
        return BivariatePoly.monomial(power, 0)

    @staticmethod
    def y(power: int = 1) -> "BivariatePoly":
        return BivariatePoly.monomial(0, power)

    # -- structure ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def support(self) -> list[Exponent]:
        return list(self.terms)

    def degree(self) -> int:
        return max((a + b for a, b in self.terms), default=-1)

    def x_degree(self) -> int:
        return max((a for a, _ in self.terms), default=-1)

    def y_degree(self) -> int:
        return max((b for _, b in self.terms), default=-1)

    def coefficient(self, a: int, b: int) -> Fraction:
        return self.terms.get((a, b), Fraction(0))

    def __eq__(self, other) -> bool:
        return isinstance(other, BivariatePoly) and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self.terms.items()))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "BivariatePoly(0)"
        bits = []
        for (a, b), c in self.terms.items():
            mono = "".join(
                (f"x^{a}" if a > 1 else "x" if a == 1 else "",
                 f"y^{b}" if b > 1 else "y" if b == 1 else ""))
            bits.append(f"{c}{'*' if mono else ''}{mono}")
        return "BivariatePoly(" + " + ".join(bits) + ")"

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return BivariatePoly(out)

    def __sub__(self, other):
        return self + (_coerce(other) * -1)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, str)):
            c = parse_rational(other)
            return BivariatePoly({k: v * c for k, v in self.terms.items()})
        other = _coerce(other)
        out: dict[Exponent, Fraction] = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                k = (a1 + a2, b1 + b2)
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return BivariatePoly(out)

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = BivariatePoly.constant(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- calculus ----------------------------------------------------------
    def derive(self, dx: int = 0, dy: int = 0) -> "BivariatePoly":
        """Mixed partial derivative with exact rational coefficients."""
        if dx < 0 or dy < 0:
            raise ValueError("derivative orders must be nonnegative")
        out = {}
        for (a, b), c in self.terms.items():
            if a < dx or b < dy:
                continue
            for i in range(dx):
                c = c * (a - i)
            for j in range(dy):
                c = c * (b - j)
            out[(a - dx, b - dy)] = c
        return BivariatePoly(out)

    # -- evaluation --------------------------------------------------------
    def eval(self, x, y):
        """Evaluate at a point; exact when inputs are Fractions."""
        total = 0
        for (a, b), c in self.terms.items():
            if isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction)):
                total += c * x**a * y**b
            else:
                total += float(c) * x**a * y**b
        return total

    def eval_grid(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval2d(X, Y, self.coeff_matrix())

    def coeff_matrix(self) -> np.ndarray:
        """Dense float matrix C with C[a, b] the coefficient of x^a y^b."""
        nx, ny = self.x_degree() + 1, self.y_degree() + 1
        if nx <= 0:
            return np.zeros((1, 1))
        C = np.zeros((nx, ny))
        for (a, b), c in self.terms.items():
            C[a, b] = float(c)
        return C

    def range_bound(self, x_lo: float, x_hi: float, y_lo: float, y_hi: float):
        """Rigorous (loose) interval bound of values on a rectangle."""
        lo = hi = 0.0
        for (a, b), c in self.terms.items():
            xs = sorted((x_lo**a, x_hi**a) if (x_lo >= 0 or a % 2 == 0 or x_hi <= 0)
                        else (min(x_lo**a, 0.0), max(x_hi**a, 0.0)))
            if x_lo < 0 < x_hi and a % 2 == 0 and a > 0:
                xs = (0.0, max(x_lo**a, x_hi**a))
            ys = sorted((y_lo**b, y_hi**b))
            if y_lo < 0 < y_hi and b % 2 == 0 and b > 0:
                ys = (0.0, max(y_lo**b, y_hi**b))
            cands = [float(c) * vx * vy for vx in xs for vy in ys]
            lo += min(cands)
            hi += max(cands)
        return lo, hi

    # -- composition -------------------------------------------------------
    def compose_linear(self, m11, m12, m21, m22) -> "BivariatePoly":
        """Return p(m11*x + m12*y, m21*x + m22*y) with rational entries."""
        m11, m12, m21, m22 = map(parse_rational, (m11, m12, m21, m22))
        xs = BivariatePoly({(1, 0): m11, (0, 1): m12}) if (m11 or m12) else BivariatePoly.zero()
        ys = BivariatePoly({(1, 0): m21, (0, 1): m22}) if (m21 or m22) else BivariatePoly.zero()
        out = BivariatePoly.zero()
        xa_pows = _powers(xs, self.x_degree())
        yb_pows = _powers(ys, self.y_degree())
        for (a, b), c in self.terms.items():
            out = out + xa_pows[a] * yb_pows[b] * c
        return out

    def shift_y(self, offset) -> "BivariatePoly":
        """Return p(x, y + offset) for a rational offset."""
        off = parse_rational(offset)
        out = BivariatePoly.zero()
        ypows = _powers(BivariatePoly({(0, 1): Fraction(1), (0, 0): off}), self.y_degree())
        for (a, b), c in self.terms.items():
            out = out + ypows[b] * BivariatePoly.monomial(a, 0, c)
        return out

    def y_coefficients(self) -> list["BivariatePoly"]:
        """Coefficients of powers of y, each a polynomial in x alone."""
        out = [BivariatePoly.zero() for _ in range(self.y_degree() + 1)]
        for (a, b), c in self.terms.items():
            out[b] = out[b] + BivariatePoly.monomial(a, 0, c)
        return out

    # -- serialization -----------------------------------------------------
    def to_json(self) -> list[dict]:
        return [{"a": a, "b": b, "c": format_rational(c)} for (a, b), c in self.terms.items()]

    @staticmethod
    def from_json(data) -> "BivariatePoly":
        if isinstance(data, str):
            data = json.loads(data)
        return BivariatePoly({(t["a"], t["b"]): parse_rational(t["c"]) for t in data})


def _coerce(value) -> BivariatePoly:
    if isinstance(value, BivariatePoly):
        return value
    if isinstance(value, (int, Fraction, str)):
        return BivariatePoly.constant(value)
    raise TypeError(f"cannot coerce {value!r} to BivariatePoly")


def _powers(p: BivariatePoly, n: int) -> list[BivariatePoly]:
    out = [BivariatePoly.constant(1)]
    for _ in range(n):
        out.append(out[-1] * p)
    return out


def derive(p: BivariatePoly, dx: int, dy: int) -> BivariatePoly:
    """Module-level alias for the mixed partial derivative."""
    return p.derive(dx, dy)
