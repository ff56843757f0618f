"""Robust line fits used across the moment diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import theilslopes


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_lo: float
    slope_hi: float

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def theil_sen(x, y, alpha: float = 0.95) -> LineFit:
    """Median-of-slopes fit; tolerant of a few bad points at either end."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2:
        raise ValueError("need at least two finite points")
    s, b, lo, hi = theilslopes(y[ok], x[ok], alpha)
    return LineFit(float(s), float(b), float(lo), float(hi))


def ols(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    (s, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return LineFit(float(s), float(b), float("nan"), float("nan"))


def growth_exponent(Ns, log_moments) -> LineFit:
    """Estimate c in log M_N = c N log N + O(N).

    Successive increments log M_N - log M_{N-1} behave like c log N + const, so a
    fit of the increments against log N removes the linear term that swamps a direct
    fit of log M_N against N log N at small N.
    """
    Ns = np.asarray(Ns, dtype=int)
    lm = np.asarray(log_moments, dtype=float)
    order = np.argsort(Ns)
    Ns, lm = Ns[order], lm[order]
    if np.any(np.diff(Ns) != 1):
        raise ValueError("growth fit needs consecutive N")
    inc = np.diff(lm)
    return theil_sen(np.log(Ns[1:]), inc)
