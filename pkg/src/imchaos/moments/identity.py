"""The second-moment identity E|mu_n(f)|^2 = int int f conj(f) e^{beta^2 C_n} on the circle."""
from __future__ import annotations

import numpy as np

from imchaos.chaos.montecarlo import circle_pairings
from imchaos.chaos.testfunctions import TestFunction, constant
from imchaos.field.grids import circle_grid
from imchaos.field.schemes import ApproxScheme, circle_profile, circle_weights
from imchaos.moments.quadrature import circle_pair_integral, circle_power_integral
from imchaos.reports import FAIL, PASS, MomentReport, mean_stderr

LADDER = (32, 64, 128, 256, 512, 1024, 2048, 4096)


def truncated_second_moment(f: TestFunction, beta: float, n: int) -> float:
    """Adaptive quadrature of int int f conj(f) exp(beta^2 C_n) for the n-mode Fourier truncation."""
    w = circle_weights(ApproxScheme.fourier(n))
    conj = TestFunction("conj " + f.name, f.domain, lambda x: np.conj(f(x)), f.center, f.radius, f.sup_norm)
    kernel = lambda t: np.exp(beta**2 * circle_profile(w, w, np.array([t]))[0])  # noqa: E731
    return float(circle_pair_integral(f, conj, kernel, width=1.0 / n).real)


def second_moment_identity(
    beta: float = 1 / np.sqrt(2),
    n: int = 512,
    replicas: int = 200_000,
    seed: int = 0,
    f: TestFunction | None = None,
    grid_points: int = 2048,
    ladder=LADDER,
    sigmas: float = 3.0,
    workers: int = 1,
    chunk: int = 500,
) -> MomentReport:
    """MC E|mu_n(f)|^2 against quadrature, plus monotone approach of the truncated integrals
    to the limit int int f conj(f) |e^{i theta} - e^{i theta'}|^{-beta^2}."""
    f = f or constant(1.0)
    mu = circle_pairings([ApproxScheme.fourier(n)], circle_grid(grid_points), beta, [f], replicas, seed, chunk=chunk, workers=workers)[:, 0, 0, 0]
    est, se = mean_stderr(np.abs(mu) ** 2)
    exact = truncated_second_moment(f, beta, n)
    conj = TestFunction("conj " + f.name, f.domain, lambda x: np.conj(f(x)), f.center, f.radius, f.sup_norm)
    limit = float(circle_power_integral(f, conj, beta**2).real)
    steps = sorted(set(ladder) | {n})
    values = [truncated_second_moment(f, beta, m) for m in steps]
    gaps = [limit - v for v in values]
    monotone = all(g1 > g2 > 0 for g1, g2 in zip(gaps, gaps[1:]))
    ok = abs(est - exact) < sigmas * se and monotone
    return MomentReport(
        "second_moment_identity",
        float(est),
        float(se),
        replicas,
        exact,
        PASS if ok else FAIL,
        f"{sigmas} sigma vs quadrature; truncated integrals increase to the limit",
        {
            "beta": beta,
            "n": n,
            "f": f.name,
            "grid_points": grid_points,
            "z": float((est - exact) / se),
            "limit": limit,
            "ladder": steps,
            "ladder_values": values,
            "monotone": monotone,
        },
    )
