"""Continuum limit of critical Ising spin correlations in the unit disc.

The disc is mapped to the upper half-plane by phi(z) = i(1 - z)/(1 + z); then
|phi'|/(2 Im phi) = 1/(1 - |z|^2) and the cross-ratio modulus
|phi_k - phi_m| / |phi_k - conj(phi_m)| is the pseudo-hyperbolic distance.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from imchaos.chaos.testfunctions import half_plane_map
from imchaos.errors import ConfigError, PointsTooClose

MIN_SEPARATION = 0.01
MAX_POINTS = 20
PILOT_CONSTANT = 0.8387  # cross-check only; the constant is recomputed below


def log_glaisher(n: int = 20) -> float:
    """log A from Euler-Maclaurin on sum_{k<=n} k log k; the first omitted term is O(n^-10).

    The n(n+1)/2 log n part is folded into the sum as k log(k/n) to avoid cancellation.
    """
    terms = [k * math.log(k / n) for k in range(1, n + 1)]
    terms += [-math.log(n) / 12, n * n / 4, -1 / (720 * n**2), 1 / (5040 * n**4), -1 / (10080 * n**6), 1 / (9504 * n**8)]
    return math.fsum(terms)


@lru_cache(maxsize=None)
def zeta_prime_minus_one() -> float:
    """zeta'(-1) = 1/12 - log A."""
    return 1.0 / 12.0 - log_glaisher()


@lru_cache(maxsize=None)
def spin_constant() -> float:
    """2^{5/48} e^{(3/2) zeta'(-1)}."""
    c = 2.0 ** (5.0 / 48.0) * math.exp(1.5 * zeta_prime_minus_one())
    if abs(c - PILOT_CONSTANT) > 1e-3:
        raise ConfigError(f"spin constant {c} disagrees with the pilot value")
    return c


def _check_points(z: np.ndarray) -> None:
    if z.size == 0:
        raise ConfigError("need at least one point")
    if z.size > MAX_POINTS:
        raise ConfigError(f"{z.size} points: the 2^n sign sum is limited to n <= {MAX_POINTS}")
    if np.any(1.0 - np.abs(z) <= MIN_SEPARATION):
        raise PointsTooClose("point within 0.01 of the boundary")
    if z.size > 1:
        d = np.abs(z[:, None] - z[None, :])
        d[np.diag_indices(z.size)] = np.inf
        if d.min() <= MIN_SEPARATION:
            raise PointsTooClose("points closer than 0.01")


def cross_ratios(z: np.ndarray) -> np.ndarray:
    """|phi_k - phi_m| / |phi_k - conj phi_m| for all pairs (ones on the diagonal)."""
    phi, _ = half_plane_map(z)
    num = np.abs(phi[:, None] - phi[None, :])
    den = np.abs(phi[:, None] - np.conj(phi[None, :]))
    q = num / den
    q[np.diag_indices(z.size)] = 1.0
    return q


def sign_sum(q: np.ndarray, chunk: int = 1 << 16) -> float:
    """sum over mu in {-1,1}^n of prod_{k<m} q_km^{mu_k mu_m / 2}.

    mu and -mu give the same term, so only mu_0 = +1 is enumerated and doubled.
    """
    n = q.shape[0]
    if n == 1:
        return 2.0
    L = np.log(q)
    np.fill_diagonal(L, 0.0)
    total = 0.0
    m = n - 1
    for start in range(0, 1 << m, chunk):
        codes = np.arange(start, min(start + chunk, 1 << m))
        mu = np.ones((codes.size, n))
        mu[:, 1:] = 1 - 2 * ((codes[:, None] >> np.arange(m)[None, :]) & 1)
        # sum_{k<m} mu_k mu_m L_km / 2 = (mu^T L mu) / 4
        e = 0.25 * np.einsum("si,ij,sj->s", mu, L, mu)
        total += math.fsum(np.exp(e))
    return 2.0 * total


def chi_correlation(points) -> float:
    """lim delta^{-n/8} E prod sigma_delta(x_j) for the + boundary critical model in the disc."""
    z = np.atleast_1d(np.asarray(points, dtype=complex))
    _check_points(z)
    n = z.size
    phi, dphi = half_plane_map(z)
    w = np.prod((np.abs(dphi) / (2.0 * phi.imag)) ** 0.125)
    return float(spin_constant() ** n * w * np.sqrt(2.0 ** (-n / 2) * sign_sum(cross_ratios(z))))


def chi_small(points) -> float:
    """Closed forms for n = 1, 2 written with the Moebius form of the disc quantities."""
    z = np.atleast_1d(np.asarray(points, dtype=complex))
    _check_points(z)
    C = spin_constant()
    r = (1.0 - np.abs(z) ** 2) ** (-1.0 / 8.0)
    if z.size == 1:
        return float(C * 2.0**0.25 * r[0])
    if z.size == 2:
        rho = abs(z[0] - z[1]) / abs(1.0 - z[0] * np.conj(z[1]))
        return float(C * C * r[0] * r[1] * math.sqrt(math.sqrt(rho) + 1.0 / math.sqrt(rho)))
    raise ConfigError("closed form only for one or two points")


def pairing_weight(z: np.ndarray) -> np.ndarray:
    """(|phi'|/(2 Im phi))^{1/4} = (1 - |z|^2)^{-1/4}; zero off the disc."""
    t = 1.0 - np.abs(z) ** 2
    return np.where(t > 0, np.abs(t) ** -0.25, 0.0)


def pairing_kernel(zs: np.ndarray) -> np.ndarray:
    """sum_mu prod_{i<j} q_ij^{mu_i mu_j / 2} for a batch of k-tuples (rows of ``zs``)."""
    zs = np.atleast_2d(zs)
    k = zs.shape[1]
    if k == 1:
        return np.full(zs.shape[0], 2.0)
    logq = {}
    for i, j in itertools.combinations(range(k), 2):
        a, b = zs[:, i], zs[:, j]
        logq[i, j] = np.log(np.abs(a - b) / np.abs(1.0 - a * np.conj(b)))
    out = np.zeros(zs.shape[0])
    for signs in itertools.product((1, -1), repeat=k - 1):
        mu = (1,) + signs
        e = sum(0.5 * mu[i] * mu[j] * L for (i, j), L in logq.items())
        out += np.exp(e)
    return 2.0 * out
