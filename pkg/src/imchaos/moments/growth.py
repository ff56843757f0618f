"""Moment checks built on the QMC estimator: quadrature agreement and N log N growth."""
from __future__ import annotations

import numpy as np

from imchaos.chaos.testfunctions import TestFunction
from imchaos.field.models import LogCorrelatedModel
from imchaos.moments.fits import growth_exponent
from imchaos.moments.qmc import qmc_moment_2N
from imchaos.moments.quadrature import exact_moment_2N
from imchaos.reports import FAIL, PASS, MomentReport


def qmc_vs_exact(model: LogCorrelatedModel, f: TestFunction, beta: float, N: int, n_points: int = 2**14, scrambles: int = 16, seed: int = 0, sigmas: float = 3.0) -> MomentReport:
    """PASS if |qmc - exact| < sigmas * stderr, with the quadrature error folded into the stderr."""
    exact, qerr = exact_moment_2N(model, f, beta, N)
    rep = qmc_moment_2N(model, f, beta, N, n_points, scrambles, seed)
    se = float(np.hypot(rep.stderr, qerr))
    rep.name = "qmc_vs_exact"
    rep.oracle = exact
    rep.verdict = PASS if abs(rep.value.real - exact) < sigmas * se else FAIL
    rep.tolerance = f"{sigmas} sigma"
    rep.meta.update({"quadrature_error": qerr, "combined_stderr": se})
    return rep


def moment_growth(
    model: LogCorrelatedModel,
    f: TestFunction,
    beta: float,
    n_max: int = 6,
    n_points: int = 2**13,
    scrambles: int = 16,
    seed: int = 0,
    band: float = 0.3,
) -> MomentReport:
    """Fitted c in log E|mu(f)|^{2N} = c N log N + O(N), against beta^2 / d."""
    Ns = list(range(1, n_max + 1))
    reps = [qmc_moment_2N(model, f, beta, N, n_points, scrambles, seed) for N in Ns]
    logs = [float(np.log(r.value.real)) for r in reps]
    fit = growth_exponent(Ns, logs)
    target = beta**2 / model.dimension
    return MomentReport(
        "moment_growth",
        fit.slope,
        0.25 * (fit.slope_hi - fit.slope_lo) / 1.96,
        sum(r.replicas for r in reps),
        target,
        PASS if abs(fit.slope / target - 1.0) <= band else FAIL,
        f"slope within +-{band:.0%} of beta^2/d",
        {
            "model": model.name,
            "f": f.name,
            "beta": beta,
            "N": Ns,
            "moments": [r.value.real for r in reps],
            "rel_stderr": [r.stderr / r.value.real for r in reps],
            "fit": "Theil-Sen slope of log M_N - log M_{N-1} against log N",
        },
    )
