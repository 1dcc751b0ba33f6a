"""Log-log regression with optional log-log correction term.

Fits measure(scale) ~ C * scale^e * |log scale|^l with l in {0, 1}; the
log power is chosen by an AIC-style penalized residual comparison, with
near-ties resolved toward l = 0 and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExponentEstimate:
    exponent: float
    log_power: int
    samples: tuple              # (scale, value) pairs used in the fit
    residual: float             # RMS residual of log-values
    confidence_interval: tuple  # 95% CI for the exponent
    log_ambiguous: bool = False

    def to_json(self):
        return {
            "exponent": self.exponent,
            "log_power": self.log_power,
            "samples": [[s, v] for s, v in self.samples],
            "residual": self.residual,
            "confidence_interval": list(self.confidence_interval),
            "log_ambiguous": self.log_ambiguous,
        }


def _fit(logs_s, logs_v, with_loglog):
    n = len(logs_s)
    cols = [logs_s, np.ones(n)]
    if with_loglog:
        cols.insert(1, np.log(np.abs(logs_s)))
    A = np.column_stack(cols)
    coef, _res, _rank, _sv = np.linalg.lstsq(A, logs_v, rcond=None)
    resid = logs_v - A @ coef
    rss = float(np.dot(resid, resid))
    k = A.shape[1]
    dof = max(n - k, 1)
    sigma2 = rss / dof
    cov = sigma2 * np.linalg.pinv(A.T @ A)
    se = math.sqrt(max(cov[0, 0], 0.0))
    aic = n * math.log(max(rss / n, 1e-300)) + 2 * k
    return coef[0], se, rss, aic


def fit_power_law(scales, values, allow_log: bool = True,
                  tie_fraction: float = 0.05) -> ExponentEstimate:
    """Fit values ~ C * scales^e |log scales|^l and pick l in {0, 1}."""
    pairs = [(float(s), float(v)) for s, v in zip(scales, values) if v > 0]
    if len(pairs) < 3:
        raise ValueError("need at least three positive samples to fit")
    logs_s = np.array([math.log(s) for s, _ in pairs])
    logs_v = np.array([math.log(v) for _, v in pairs])
    e0, se0, rss0, aic0 = _fit(logs_s, logs_v, with_loglog=False)
    if not allow_log or len(pairs) < 5:
        ci = (e0 - 1.96 * se0, e0 + 1.96 * se0)
        return ExponentEstimate(float(e0), 0, tuple(pairs),
                                math.sqrt(rss0 / len(pairs)), ci)
    e1, se1, rss1, aic1 = _fit(logs_s, logs_v, with_loglog=True)
    ambiguous = abs(aic0 - aic1) <= tie_fraction * max(abs(aic0), abs(aic1), 1.0)
    if ambiguous or aic0 <= aic1:
        ci = (e0 - 1.96 * se0, e0 + 1.96 * se0)
        return ExponentEstimate(float(e0), 0, tuple(pairs),
                                math.sqrt(rss0 / len(pairs)), ci, ambiguous)
    ci = (e1 - 1.96 * se1, e1 + 1.96 * se1)
    return ExponentEstimate(float(e1), 1, tuple(pairs),
                            math.sqrt(rss1 / len(pairs)), ci, False)
