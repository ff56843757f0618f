"""Closed-form test functions with compact support."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from imchaos.field.models import Domain, as_points


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def angular_gap(x, c) -> np.ndarray:
    return np.abs(np.angle(np.exp(1j * (np.asarray(x) - c))))


@dataclass(frozen=True, eq=False)
class TestFunction:
    """f: U -> C with support in the ball (or arc) of ``radius`` around ``center``.

    ``radius = None`` means the support is the whole circle (circle only).
    """

    __test__ = False  # not a pytest class

    name: str
    domain: Domain
    func: Callable[[np.ndarray], np.ndarray]
    center: complex | float
    radius: float | None
    sup_norm: float
    invariant: bool = False  # unchanged by rotations of the domain (disc about 0, circle)

    def __call__(self, x) -> np.ndarray:
        return self.func(as_points(x, self.domain))

    def scaled(self, a: complex, name: str | None = None) -> "TestFunction":
        f = self.func
        return TestFunction(name or f"{a}*{self.name}", self.domain, lambda x: a * f(x), self.center, self.radius, abs(a) * self.sup_norm)

    def times(self, w: Callable[[np.ndarray], np.ndarray], sup_w: float, name: str) -> "TestFunction":
        f = self.func
        return TestFunction(name, self.domain, lambda x: f(x) * w(x), self.center, self.radius, self.sup_norm * sup_w)

    @property
    def is_zero(self) -> bool:
        return self.sup_norm == 0.0


def bump(center: complex | float = 0.0, radius: float = 0.5, amplitude: float = 1.0, domain: Domain = Domain.UNIT_DISC) -> TestFunction:
    """amplitude * exp(1 - 1/(1 - |x - c|^2 / R^2)) inside the ball, peak value = amplitude."""

    def f(x):
        if domain is Domain.CIRCLE:
            r2 = (angular_gap(x, center) / radius) ** 2
        else:
            r2 = np.abs(x - center) ** 2 / radius**2
        inside = r2 < 1.0
        out = np.zeros(np.shape(x))
        with np.errstate(divide="ignore", over="ignore"):
            out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    inv = domain is Domain.UNIT_DISC and center == 0
    return TestFunction(f"bump(c={center},r={radius},a={amplitude})", domain, f, center, radius, abs(amplitude), inv)


def constant(value: float = 1.0) -> TestFunction:
    """Constant on the whole circle (smooth there, so no mollification is needed)."""
    return TestFunction(f"const({value})", Domain.CIRCLE, lambda x: np.full(np.shape(x), float(value)), 0.0, None, abs(value), True)


def fourier_mode(k: int) -> TestFunction:
    """e^{ik theta} on the circle."""
    return TestFunction(f"mode({k})", Domain.CIRCLE, lambda x: np.exp(1j * k * np.asarray(x, dtype=float)), 0.0, None, 1.0)


def zero(domain: Domain = Domain.CIRCLE) -> TestFunction:
    return TestFunction("zero", domain, lambda x: np.zeros(np.shape(x)), 0.0, None if domain is Domain.CIRCLE else 0.5, 0.0)


def mollified_indicator(lo: float, hi: float, margin: float, domain: Domain = Domain.UNIT_SQUARE) -> TestFunction:
    """Smoothed indicator of [lo, hi]^2 (or of the arc [lo, hi]), ramping over ``margin``."""

    def ramp(t):
        return _smooth_step((t - lo) / margin) * _smooth_step((hi - t) / margin)

    if domain is Domain.CIRCLE:
        f = lambda x: ramp(np.mod(x, 2 * np.pi))  # noqa: E731
        return TestFunction(f"ind[{lo},{hi}]", domain, f, 0.5 * (lo + hi), 0.5 * (hi - lo), 1.0)
    f = lambda x: ramp(x.real) * ramp(x.imag)  # noqa: E731
    c = 0.5 * (lo + hi)
    return TestFunction(f"ind[{lo},{hi}]^2", domain, f, c + 1j * c, (hi - lo) / np.sqrt(2), 1.0)


# -- conformal weights on the disc ------------------------------------------------------


def half_plane_map(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi(z) = i (1 - z)/(1 + z) from the disc onto the upper half-plane, and phi'(z)."""
    z = np.asarray(z, dtype=complex)
    return 1j * (1 - z) / (1 + z), -2j / (1 + z) ** 2


def conformal_ratio(z: np.ndarray) -> np.ndarray:
    """|phi'(z)| / (2 Im phi(z)) = 1 / (1 - |z|^2)."""
    phi, dphi = half_plane_map(z)
    return np.abs(dphi) / (2.0 * phi.imag)


def chi_weight(f: TestFunction, scale: float = 1.0) -> TestFunction:
    """scale * f * (2|phi'|/Im phi)^{1/4}: the test function seen by the cosine field."""
    if f.domain is not Domain.UNIT_DISC:
        raise ValueError("CHI weight is defined on the disc")
    r = abs(f.center) + (f.radius or 1.0)
    sup_w = (4.0 / (1.0 - min(r, 0.999) ** 2)) ** 0.25
    g = f.times(lambda x: (4.0 * conformal_ratio(x)) ** 0.25, sup_w, f"chi[{f.name}]")
    return g.scaled(scale, f"{scale:.6g}*chi[{f.name}]") if scale != 1.0 else g
