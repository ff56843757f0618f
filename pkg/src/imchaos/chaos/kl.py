"""KL truncation on the square: the pairings Y_n form an L^2-bounded martingale."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from imchaos.chaos.montecarlo import square_kl_pairings
from imchaos.chaos.testfunctions import TestFunction
from imchaos.field.grids import square_grid
from imchaos.field.models import unit_square
from imchaos.moments.quadrature import exact_second_moment


@dataclass
class KLDiagnostic:
    n_sequence: list[int]
    means: list[complex]
    mean_stderr: list[float]
    second: list[float]
    second_stderr: list[float]
    integral_f: complex
    bound: float
    mean_ok: bool
    monotone_ok: bool
    bound_ok: bool
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.mean_ok and self.monotone_ok and self.bound_ok

    def to_dict(self) -> dict:
        return {
            "n_sequence": self.n_sequence,
            "means": [{"re": m.real, "im": m.imag} for m in self.means],
            "mean_stderr": self.mean_stderr,
            "second": self.second,
            "second_stderr": self.second_stderr,
            "integral_f": {"re": self.integral_f.real, "im": self.integral_f.imag},
            "bound": self.bound,
            "mean_ok": self.mean_ok,
            "monotone_ok": self.monotone_ok,
            "bound_ok": self.bound_ok,
            **self.meta,
        }


def kl_martingale_diagnostic(
    f: TestFunction,
    beta: float,
    n_sequence: list[int],
    replicas: int = 400,
    seed: int = 0,
    grid_points: int = 256,
    workers: int = 1,
    sigmas: float = 4.0,
) -> KLDiagnostic:
    """Mean constancy, monotone second moments, and the bound E|Y_n|^2 <= int int f f e^{beta^2 C}.

    The grid covers the bounding box of supp f with ``grid_points`` cells per side.
    """
    c, R = f.center, f.radius
    lo = min(c.real, c.imag) - R
    hi = max(c.real, c.imag) + R
    lo, hi = max(lo, 0.0), min(hi, 1.0)
    grid = square_grid(grid_points, lo, hi)
    ints = complex(np.sum(f(grid.points) * grid.weights))
    seq = [n for n in n_sequence if n > 0]
    Y = square_kl_pairings(seq, grid, beta, [f], replicas, seed, workers=workers)[:, :, 0]
    means = [complex(Y[:, j].mean()) for j in range(len(seq))]
    mse = [float(np.sqrt((np.var(Y[:, j].real, ddof=1) + np.var(Y[:, j].imag, ddof=1)) / replicas)) for j in range(len(seq))]
    sec = np.abs(Y) ** 2
    m2 = [float(sec[:, j].mean()) for j in range(len(seq))]
    # differences between consecutive levels are positively correlated: use paired errors
    s2 = [float(sec[:, j].std(ddof=1) / np.sqrt(replicas)) for j in range(len(seq))]
    diff_ok = all(
        (sec[:, j + 1] - sec[:, j]).mean() > -sigmas * (sec[:, j + 1] - sec[:, j]).std(ddof=1) / np.sqrt(replicas)
        for j in range(len(seq) - 1)
    )
    bound = float(exact_second_moment(unit_square(), f, beta).real)
    mean_ok = all(abs(m - ints) < sigmas * e for m, e in zip(means, mse))
    bound_ok = all(v - sigmas * e <= bound for v, e in zip(m2, s2))
    levels = ([0] if 0 in n_sequence else []) + seq
    if 0 in n_sequence:
        means = [ints] + means
        mse = [0.0] + mse
        m2 = [abs(ints) ** 2] + m2
        s2 = [0.0] + s2
    return KLDiagnostic(levels, means, mse, m2, s2, ints, bound, mean_ok, diff_ok, bound_ok, {"beta": beta, "replicas": replicas})
