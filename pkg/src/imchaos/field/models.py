"""Log-correlated covariance models C(x, y) = log 1/|x - y| + g(x, y).

Points in the plane are complex numbers; circle points are angles.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import ellipj, ellipk

from imchaos.errors import CoincidentPoints, OutsideDomain


class Domain(Enum):
    UNIT_SQUARE = "square"
    UNIT_DISC = "disc"
    CIRCLE = "circle"


def as_points(x, domain: Domain) -> np.ndarray:
    """Coerce to complex (plane) or float (circle) arrays; (n, 2) arrays become complex."""
    a = np.asarray(x)
    if domain is Domain.CIRCLE:
        return np.asarray(a, dtype=float)
    if a.ndim >= 1 and a.shape[-1] == 2 and not np.iscomplexobj(a):
        return a[..., 0] + 1j * a[..., 1]
    return np.asarray(a, dtype=complex)


def distance(x, y, domain: Domain) -> np.ndarray:
    if domain is Domain.CIRCLE:
        return np.abs(2.0 * np.sin((np.asarray(x) - np.asarray(y)) / 2.0))
    return np.abs(np.asarray(x) - np.asarray(y))


# -- square: conformal map to the upper half-plane through Jacobi sn ---------------------


@lru_cache(maxsize=1)
def _square_modulus() -> tuple[float, float]:
    """Parameter m with K(1-m) = 2 K(m), so [-K, K] x [0, K'] is a square."""
    m = brentq(lambda m: ellipk(1.0 - m) / ellipk(m) - 2.0, 1e-6, 0.999)
    return m, float(ellipk(m))


def _sn_cn_dn(z: np.ndarray, m: float):
    u, v = z.real, z.imag
    s, c, d, _ = ellipj(u, m)
    s1, c1, d1, _ = ellipj(v, 1.0 - m)
    den = c1**2 + m * s**2 * s1**2
    sn = (s * d1 + 1j * c * d * s1 * c1) / den
    cn = (c * c1 - 1j * s * d * s1 * d1) / den
    dn = (d * c1 * d1 - 1j * m * s * c * s1) / den
    return sn, cn, dn


def square_to_half_plane(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Conformal map of the open unit square onto the upper half-plane, with derivative."""
    m, K = _square_modulus()
    z = 2.0 * K * ((np.real(x) - 0.5) + 1j * np.imag(x))
    sn, cn, dn = _sn_cn_dn(np.asarray(z), m)
    return sn, cn * dn * 2.0 * K


def _g_square(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    wx, dx = square_to_half_plane(x)
    wy, _ = square_to_half_plane(y)
    diff = np.abs(x - y)
    same = diff < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.log(np.abs(wx - np.conj(wy)) / np.abs(wx - wy)) + np.log(diff)
    diag = np.log(2.0 * wx.imag / np.abs(dx))
    return np.where(same, diag, off)


def _g_disc(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.log(np.abs(1.0 - x * np.conj(y)))


@dataclass(frozen=True)
class LogCorrelatedModel:
    """Covariance model on one of the three built-in domains."""

    domain: Domain

    @property
    def dimension(self) -> int:
        return 1 if self.domain is Domain.CIRCLE else 2

    @property
    def name(self) -> str:
        return self.domain.value

    def contains(self, x) -> np.ndarray:
        x = as_points(x, self.domain)
        if self.domain is Domain.CIRCLE:
            return np.isfinite(x)
        if self.domain is Domain.UNIT_DISC:
            return np.abs(x) < 1.0
        return (x.real > 0) & (x.real < 1) & (x.imag > 0) & (x.imag < 1)

    def g(self, x, y) -> np.ndarray:
        """Regular part; on the diagonal this is the log conformal radius (plane domains)."""
        x = as_points(x, self.domain)
        y = as_points(y, self.domain)
        if self.domain is Domain.CIRCLE:
            return np.zeros(np.broadcast(x, y).shape)
        if self.domain is Domain.UNIT_DISC:
            return _g_disc(x, y)
        x, y = np.broadcast_arrays(x, y)
        return _g_square(x, y)

    def kernel(self, x, y) -> np.ndarray:
        """C(x, y) without validation; +inf on the diagonal."""
        x = as_points(x, self.domain)
        y = as_points(y, self.domain)
        r = distance(x, y, self.domain)
        with np.errstate(divide="ignore"):
            return -np.log(r) + self.g(x, y)


def circle() -> LogCorrelatedModel:
    return LogCorrelatedModel(Domain.CIRCLE)


def unit_disc() -> LogCorrelatedModel:
    return LogCorrelatedModel(Domain.UNIT_DISC)


def unit_square() -> LogCorrelatedModel:
    return LogCorrelatedModel(Domain.UNIT_SQUARE)


def covariance(model: LogCorrelatedModel, x, y) -> np.ndarray | float:
    """C(x, y) = log 1/|x - y| + g(x, y) with domain and coincidence checks."""
    xa = as_points(x, model.domain)
    ya = as_points(y, model.domain)
    if not (np.all(model.contains(xa)) and np.all(model.contains(ya))):
        raise OutsideDomain("point outside the open domain")
    if np.any(distance(xa, ya, model.domain) < 1e-14):
        raise CoincidentPoints("covariance is singular on the diagonal")
    out = model.kernel(xa, ya)
    return float(out) if np.ndim(out) == 0 else out
