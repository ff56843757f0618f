"""Upper-tail exponent of |mu(f)| from large replica batches.

If P(|mu(f)| > t) ~ exp(-c t^a), then log(-log P) is linear in log t with slope a.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from imchaos.chaos.montecarlo import circle_pairings
from imchaos.chaos.testfunctions import TestFunction, constant, fourier_mode
from imchaos.errors import InsufficientTail
from imchaos.field.grids import circle_grid
from imchaos.field.schemes import ApproxScheme
from imchaos.moments.fits import theil_sen
from imchaos.reports import FAIL, PASS, MomentReport

MIN_EXCEEDANCES = 100
# the small-beta control: mu(e^{i theta}) / beta -> i <X, e^{i theta}>, a circular complex Gaussian
CONTROL_BETA = 0.02


@dataclass
class TailFit:
    exponent: float
    lo: float
    hi: float
    thresholds: np.ndarray
    probabilities: np.ndarray
    exceedances: int


def tail_exponent(values, p_hi: float = 1e-1, p_lo: float = 1e-4, n_thresholds: int = 16) -> TailFit:
    """Theil-Sen slope of log(-log P(|v| > t)) against log t at log-spaced tail levels."""
    v = np.abs(np.asarray(values)).ravel()
    ps = np.logspace(np.log10(p_hi), np.log10(p_lo), n_thresholds)
    lam = np.quantile(v, 1.0 - ps)
    top = int(np.sum(v > lam[-1]))
    if top < MIN_EXCEEDANCES or v.size * p_lo < MIN_EXCEEDANCES:
        raise InsufficientTail(f"only {min(top, int(v.size * p_lo))} exceedances at the top threshold")
    # empirical survival at each threshold (ties make this differ slightly from ps)
    surv = np.array([np.mean(v > t) for t in lam])
    fit = theil_sen(np.log(lam), np.log(-np.log(surv)))
    return TailFit(fit.slope, fit.slope_lo, fit.slope_hi, lam, surv, top)


def tail_samples(
    beta: float,
    f: TestFunction,
    replicas: int = 10**6,
    n_modes: int = 128,
    grid_points: int = 256,
    seed: int = 0,
    workers: int = 1,
) -> np.ndarray:
    P = circle_pairings([ApproxScheme.fourier(n_modes)], circle_grid(grid_points), [beta], [f], replicas, seed, chunk=5000, workers=workers)
    return P[:, 0, 0, 0]


def tail_fit(
    beta: float,
    replicas: int = 10**6,
    f: TestFunction | None = None,
    n_modes: int = 128,
    grid_points: int = 256,
    seed: int = 0,
    workers: int = 1,
    band: float = 0.3,
) -> MomentReport:
    """Circle field, f = 1 by default; PASS if the exponent is within +-band of 2d/beta^2."""
    f = constant() if f is None else f
    fit = tail_exponent(tail_samples(beta, f, replicas, n_modes, grid_points, seed, workers))
    target = 2.0 / beta**2
    ok = abs(fit.exponent / target - 1.0) <= band
    return MomentReport(
        "tail_fit",
        fit.exponent,
        0.5 * (fit.hi - fit.lo) / 1.96,
        replicas,
        target,
        PASS if ok else FAIL,
        f"exponent within +-{band:.0%} of 2d/beta^2",
        {"beta": beta, "f": f.name, "n_modes": n_modes, "grid": grid_points, "ci": [fit.lo, fit.hi], "exceedances": fit.exceedances, "seed": seed},
    )


def gaussian_control(replicas: int = 10**6, seed: int = 0, workers: int = 1, tol: float = 0.3) -> MomentReport:
    z = tail_samples(CONTROL_BETA, fourier_mode(1), replicas, seed=seed, workers=workers) / CONTROL_BETA
    fit = tail_exponent(z)
    return MomentReport(
        "tail_gaussian_control",
        fit.exponent,
        0.5 * (fit.hi - fit.lo) / 1.96,
        replicas,
        2.0,
        PASS if abs(fit.exponent - 2.0) <= tol else FAIL,
        f"2 +- {tol}",
        {"beta": CONTROL_BETA, "f": "mode(1)", "ci": [fit.lo, fit.hi], "seed": seed},
    )


def tail_sweep(betas=(0.6, 0.8, 0.95), replicas: int = 10**6, seed: int = 0, workers: int = 1) -> MomentReport:
    """Exponents must strictly decrease in beta (heavier tails)."""
    P = circle_pairings([ApproxScheme.fourier(128)], circle_grid(256), list(betas), [constant()], replicas, seed, chunk=5000, workers=workers)
    ex = [tail_exponent(P[:, 0, b, 0]).exponent for b in range(len(betas))]
    ok = bool(np.all(np.diff(ex) < 0))
    return MomentReport(
        "tail_monotonicity",
        float(ex[-1]),
        0.0,
        replicas,
        None,
        PASS if ok else FAIL,
        "strictly decreasing in beta",
        {"betas": list(betas), "exponents": ex, "targets": [2.0 / b**2 for b in betas]},
    )
