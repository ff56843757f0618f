"""Imaginary chaos approximants mu_n = exp(i beta X_n + beta^2/2 E X_n^2) and their pairings."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from imchaos.errors import BetaOutOfRange, OutsideDomain, UncoupledSchemes, UnresolvedSupport
from imchaos.field.grids import Grid
from imchaos.field.models import Domain
from imchaos.field.samplers import FieldRealization
from imchaos.chaos.testfunctions import TestFunction

MIN_POINTS_ACROSS = 16


@dataclass(frozen=True, eq=False)
class ChaosField:
    grid: Grid
    values: np.ndarray
    beta: float
    source: FieldRealization


def check_beta(beta: float, d: int, force: bool = False) -> None:
    if not force and not (0 < abs(beta) < np.sqrt(d)):
        raise BetaOutOfRange(f"|beta| = {abs(beta)} outside (0, sqrt({d})); pass force=True for supercritical runs")


def chaos_values(x: np.ndarray, variance: np.ndarray, beta: float) -> np.ndarray:
    """exp(i beta x + beta^2/2 variance), broadcasting over replica rows."""
    return np.exp(0.5 * beta**2 * variance) * np.exp(1j * beta * x)


def build_chaos(field: FieldRealization, beta: float, force: bool = False) -> ChaosField:
    check_beta(beta, field.dimension, force)
    return ChaosField(field.grid, chaos_values(field.values, field.variance_profile, beta), beta, field)


def quadrature_weights(grid: Grid, f: TestFunction) -> np.ndarray:
    """Midpoint weights f(x_j) |cell_j|, after checking that the grid resolves f."""
    if f.domain is not grid.domain:
        raise OutsideDomain("test function and grid live on different domains")
    if f.is_zero:
        return np.zeros(len(grid), dtype=complex)
    across = (2.0 * np.pi if f.radius is None else 2.0 * f.radius) / grid.spacing
    if across < MIN_POINTS_ACROSS:
        raise UnresolvedSupport(f"only {across:.1f} grid points across the support of {f.name}")
    return np.asarray(f(grid.points), dtype=complex) * grid.weights


def pair(chaos: ChaosField, f: TestFunction) -> complex:
    return complex(np.dot(chaos.values, quadrature_weights(chaos.grid, f)))


def cosine_pair(chaos: ChaosField, f: TestFunction) -> float:
    return float(np.real(pair(chaos, f)))


def pair_two_schemes(field_a: FieldRealization, field_b: FieldRealization, beta: float, f: TestFunction) -> float:
    """|mu_A(f) - mu_B(f)|^2 for one coupled draw; average over seeds for the L^2 distance."""
    if field_a.seed != field_b.seed:
        raise UncoupledSchemes("fields were drawn from different seeds")
    if field_a.scheme == field_b.scheme:
        return 0.0
    a = pair(build_chaos(field_a, beta), f)
    b = pair(build_chaos(field_b, beta), f)
    return float(abs(a - b) ** 2)
