"""Approach to beta^2 = d: the rescaled second moment tends to a white-noise variance."""
from __future__ import annotations

import numpy as np

from imchaos.chaos.testfunctions import TestFunction
from imchaos.errors import ConfigError, QuadratureDivergence
from imchaos.field.models import Domain, LogCorrelatedModel
from imchaos.moments.quadrature import _outer_nodes, exact_mixed_moment, exact_second_moment
from imchaos.reports import FAIL, PASS, MomentReport


def sphere_area(d: int) -> float:
    """|S^{d-1}|: two points for d = 1, 2 pi for d = 2."""
    return {1: 2.0, 2: 2.0 * np.pi}[d]


def white_noise_target(model: LogCorrelatedModel, f: TestFunction, beta: float, nodes=(64, 64)) -> float:
    """int |f|^2 e^{beta^2 g(x, x)} dx."""
    if model.domain is Domain.CIRCLE:
        t = 2.0 * np.pi * (np.arange(4096) + 0.5) / 4096
        return float(np.sum(np.abs(f(t)) ** 2) * 2.0 * np.pi / 4096)
    xs, wx = _outer_nodes(f, *nodes)
    return float(np.sum(wx * np.abs(f(xs)) ** 2 * np.exp(beta**2 * model.g(xs, xs))))


def default_betas(d: int) -> list[float]:
    return [float(np.sqrt(q * d)) for q in (0.81, 0.85, 0.9, 0.95, 0.98, 0.99, 0.995, 0.998)]


def critical_limit_scan(
    model: LogCorrelatedModel,
    f: TestFunction,
    betas=None,
    tol: float = 0.05,
    mixed_tol: float = 0.10,
    nodes=(48, 64, 64, 64),
) -> MomentReport:
    """Ratio ((d - beta^2) / |S^{d-1}|) E|mu|^2 / target per beta, from quadrature only.

    PASS if |ratio - 1| shrinks monotonically, ends below ``tol``, and the scaled
    mixed moment E mu(f)^2 is below ``mixed_tol`` of the scaled absolute one at the last beta.
    """
    d = model.dimension
    betas = default_betas(d) if betas is None else list(betas)
    if any(not (0.8 * np.sqrt(d) < b < np.sqrt(d)) for b in betas):
        raise ConfigError("betas must lie in (0.8 sqrt(d), sqrt(d))")
    S = sphere_area(d)
    ratios, scaled, mixed, targets = [], [], [], []
    for b in betas:
        scale = (d - b**2) / S
        m2 = exact_second_moment(model, f, b, nodes).real
        if not np.isfinite(m2) or m2 <= 0:
            raise QuadratureDivergence(f"second moment quadrature failed at beta={b}")
        tgt = white_noise_target(model, f, b)
        scaled.append(scale * m2)
        targets.append(tgt)
        ratios.append(scale * m2 / tgt)
        mixed.append(abs(scale * exact_mixed_moment(model, f, b, nodes)))
    dev = np.abs(np.array(ratios) - 1.0)
    monotone = bool(np.all(np.diff(dev) <= 1e-12))
    mixed_ok = mixed[-1] < mixed_tol * scaled[-1]
    ok = monotone and dev[-1] < tol and mixed_ok
    return MomentReport(
        "critical_limit",
        ratios[-1],
        0.0,
        0,
        1.0,
        PASS if ok else FAIL,
        f"|ratio - 1| decreasing, final < {tol}; scaled mixed < {mixed_tol:.0%} of scaled absolute",
        {
            "model": model.name,
            "f": f.name,
            "betas": betas,
            "ratios": ratios,
            "scaled_second_moment": scaled,
            "scaled_mixed_moment": mixed,
            "targets": targets,
            "monotone": monotone,
        },
    )
