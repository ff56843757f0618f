"""Bump function, its transforms, and mollified covariance kernels."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma, jv

# eta(x) = c_d (1 - |x|^2)^4 on the unit ball, unit mass
BUMP_NORM = {1: 315.0 / 256.0, 2: 5.0 / np.pi}


def bump(r: np.ndarray, d: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.where(r < 1.0, BUMP_NORM[d] * (1.0 - r**2) ** 4, 0.0)


def bump_hat_1d(xi: np.ndarray) -> np.ndarray:
    """Fourier transform of the 1-D bump, normalized so the value at 0 is 1."""
    xi = np.abs(np.asarray(xi, dtype=float))
    out = np.ones_like(xi)
    big = xi > 1e-3
    x = xi[big]
    out[big] = BUMP_NORM[1] * np.sqrt(np.pi) * gamma(5.0) * (2.0 / x) ** 4.5 * jv(4.5, x)
    small = ~big
    # second moment of the bump is 1/11: eta_hat = 1 - xi^2/22 + O(xi^4)
    out[small] = 1.0 - xi[small] ** 2 / 22.0
    return out


def _log_potential_unit(t: np.ndarray) -> np.ndarray:
    """Phi(t) = int eta(v) log 1/|t e1 - v| dv for the 2-D bump, in closed form."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    outside = t >= 1.0
    out[outside] = -np.log(t[outside])
    ti = np.maximum(t[~outside], 1e-150)
    a = ti**2
    mass = 1.0 - (1.0 - a) ** 5
    # (5/2) int_a^1 (1-u)^4 (-log u) du, expanded in powers of u
    coeffs = [1.0, -4.0, 6.0, -4.0, 1.0]
    tail = np.zeros_like(a)
    loga = np.log(a)
    for k, c in enumerate(coeffs):
        p = k + 1
        ap = a**p
        tail += c * (1.0 / p**2 + ap * loga / p - ap / p**2)
    out[~outside] = -np.log(ti) * mass + 2.5 * tail
    return out


@lru_cache(maxsize=32)
def _mollified_table(tau: float, n_s: int = 801) -> tuple[CubicSpline, float]:
    """J(s) = int eta(a) Phi(|s e1 + a| / tau) da - log tau on s in [0, 1 + tau]."""
    rho, wr = np.polynomial.legendre.leggauss(96)
    rho = 0.5 * (rho + 1.0)
    wr = 0.5 * wr
    n_phi = 192
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    a = (rho[:, None] * np.exp(1j * phi)[None, :]).ravel()
    w = (wr[:, None] * rho[:, None] * bump(rho, 2)[:, None] * (2.0 * np.pi / n_phi) * np.ones(n_phi)[None, :]).ravel()
    smax = 1.0 + tau
    s = np.linspace(0.0, smax, n_s)
    vals = np.array([np.dot(w, _log_potential_unit(np.abs(si + a) / tau)) for si in s]) - np.log(tau)
    return CubicSpline(s, vals), smax


def mollified_log(r: np.ndarray, eps: float, delta: float | None = None) -> np.ndarray:
    """int int eta_eps(u) eta_delta(v) log 1/|r + u - v| du dv for planar distance r."""
    if delta is None:
        delta = eps
    big, small = max(eps, delta), min(eps, delta)
    tau = round(small / big, 12)
    spline, smax = _mollified_table(tau)
    r = np.asarray(r, dtype=float)
    s = r / big
    with np.errstate(divide="ignore"):
        far = -np.log(r)
    near = np.log(1.0 / big) + spline(np.minimum(s, smax))
    return np.where(s >= smax, far, near)
