"""Besov-exponent fit for circle chaos and the total-variation blow-up diagnostic."""
from __future__ import annotations

import numpy as np

from imchaos.chaos.chaos import chaos_values
from imchaos.errors import NonUniformGrid
from imchaos.field.grids import circle_grid
from imchaos.field.norms import besov_block_norms
from imchaos.field.samplers import CircleSampler
from imchaos.field.schemes import ApproxScheme, circle_weights
from imchaos.moments.fits import theil_sen
from imchaos.reports import FAIL, PASS, MomentReport
from imchaos.rng import stream


def block_slopes(values: np.ndarray, j_min: int = 4, j_max: int | None = None) -> np.ndarray:
    """Per-replica least-squares slope of log2 ||Delta_j mu||_inf against j."""
    values = np.atleast_2d(values)
    blocks = besov_block_norms(values)
    js = np.array([j for j, _ in blocks])
    logs = np.log2(np.array([np.atleast_1d(v) for _, v in blocks]))
    # the last block holds only the Nyquist frequency
    j_max = js[-2] if j_max is None else j_max
    sel = (js >= j_min) & (js <= j_max)
    A = np.vstack([js[sel], np.ones(sel.sum())]).T
    coef, *_ = np.linalg.lstsq(A, logs[sel], rcond=None)
    return coef[0]


def regularity_fit(
    beta: float,
    replicas: int = 200,
    grid_points: int = 2**14,
    n_modes: int | None = None,
    seed: int = 0,
    j_min: int = 4,
    band: float = 0.15,
    chunk: int = 25,
) -> MomentReport:
    """s* = -(median slope); PASS if |s* + beta^2/2| <= band.

    ``n_modes`` defaults to the grid size, i.e. the field resolves beyond Nyquist.
    """
    m = grid_points
    if m & (m - 1):
        raise NonUniformGrid("grid size must be a power of two")
    n = m if n_modes is None else n_modes
    sampler = CircleSampler([circle_weights(ApproxScheme.fourier(n))], circle_grid(m))
    var = sampler.variances()[0]
    slopes = []
    for idx, start in enumerate(range(0, replicas, chunk)):
        size = min(chunk, replicas - start)
        x = sampler.synthesize(sampler.coefficients(stream(seed, idx), size), 0)
        slopes.append(block_slopes(chaos_values(x, var, beta), j_min))
    slopes = np.concatenate(slopes)
    s_star = -float(np.median(slopes))
    target = -(beta**2) / 2
    return MomentReport(
        "regularity_fit",
        s_star,
        float(1.2533 * slopes.std(ddof=1) / np.sqrt(len(slopes))),
        replicas,
        target,
        PASS if abs(s_star - target) <= band else FAIL,
        f"s* within +-{band} of -beta^2/2",
        {"beta": beta, "grid": m, "n_modes": n, "j_min": j_min, "seed": seed},
    )


def regularity_sweep(betas=(0.4, 0.7, 0.9), replicas: int = 200, grid_points: int = 2**14, seed: int = 0) -> MomentReport:
    """s*(beta) must be strictly decreasing."""
    s = [regularity_fit(b, replicas, grid_points, seed=seed).value for b in betas]
    ok = bool(np.all(np.diff(s) < 0))
    return MomentReport(
        "regularity_monotonicity",
        float(s[0] - s[-1]),
        0.0,
        replicas,
        None,
        PASS if ok else FAIL,
        "s* strictly decreasing in beta",
        {"betas": list(betas), "s_star": s, "targets": [-(b**2) / 2 for b in betas]},
    )


def total_variation_scan(
    beta: float,
    n_list=(64, 128, 256, 512, 1024, 2048, 4096),
    grid_points: int = 2**13,
    replicas: int = 8,
    seed: int = 0,
    band: float = 0.25,
) -> MomentReport:
    """int |mu_n| d theta against n; the log-log slope should match beta^2/2.

    Growth without bound means mu_n has no limit as a complex measure.
    """
    g = circle_grid(grid_points)
    schemes = [ApproxScheme.fourier(n) for n in n_list]
    sampler = CircleSampler([circle_weights(s) for s in schemes], g)
    W = sampler.coefficients(stream(seed), replicas)
    tv = []
    for j, v in enumerate(sampler.variances()):
        mu = chaos_values(sampler.synthesize(W, j), v, beta)
        tv.append(float(np.mean(np.abs(mu)) * 2.0 * np.pi))
    fit = theil_sen(np.log(n_list), np.log(tv))
    target = beta**2 / 2
    return MomentReport(
        "total_variation_growth",
        fit.slope,
        0.0,
        replicas,
        target,
        PASS if abs(fit.slope / target - 1.0) <= band else FAIL,
        f"slope within +-{band:.0%} of beta^2/2",
        {"beta": beta, "n": list(n_list), "tv": tv},
    )
