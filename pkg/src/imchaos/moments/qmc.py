"""Randomized quasi-Monte Carlo for E|mu(f)|^{2N}.

Proposal: the x_i are uniform on the support of f; a uniformly chosen matching
sigma places y_{sigma(i)} at x_i + t_i with |t_i| drawn from a density
proportional to |t|^{-beta^2}. The importance weight uses the full mixture over
matchings (a permanent), so the integrand-to-density ratio stays bounded by the
matching inequality.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.stats import qmc

from imchaos.chaos.testfunctions import TestFunction
from imchaos.errors import ConfigError, VarianceBlowup
from imchaos.field.models import Domain, LogCorrelatedModel
from imchaos.reports import INFO, MomentReport


def log_permanent(A: np.ndarray) -> np.ndarray:
    """log perm(A) for nonnegative A, with rows rescaled to avoid overflow."""
    scale = A.max(axis=-1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    return np.log(np.maximum(permanent(A / scale), 1e-300)) + np.log(scale[..., 0]).sum(axis=-1)


def permanent(A: np.ndarray) -> np.ndarray:
    """Ryser's formula, batched over the leading axis."""
    n = A.shape[-1]
    total = np.zeros(A.shape[:-2], dtype=A.dtype)
    for mask in range(1, 1 << n):
        cols = [j for j in range(n) if mask >> j & 1]
        rows = A[..., cols].sum(axis=-1)
        total = total + (-1) ** len(cols) * np.prod(rows, axis=-1)
    return (-1) ** n * total


def log_moment_integrand(
    model: LogCorrelatedModel, beta: float, x: np.ndarray, y: np.ndarray, dxy: np.ndarray | None = None
) -> np.ndarray:
    """beta^2 [sum_ij C(x_i, y_j) - sum_{i<j} C(x_i, x_j) - sum_{i<j} C(y_i, y_j)], batched.

    ``dxy[:, i, j]`` may supply |x_i - y_j| when it is below floating resolution of the coordinates.
    """
    N = x.shape[1]
    out = np.zeros(x.shape[0])
    for i in range(N):
        for j in range(N):
            if dxy is None:
                out += model.kernel(x[:, i], y[:, j])
            else:
                out += -np.log(dxy[:, i, j]) + model.g(x[:, i], y[:, j])
        for j in range(i + 1, N):
            out -= model.kernel(x[:, i], x[:, j]) + model.kernel(y[:, i], y[:, j])
    return beta**2 * out


class _Proposal:
    def __init__(self, model: LogCorrelatedModel, f: TestFunction, beta: float, N: int):
        self.model, self.f, self.N = model, f, N
        self.d = model.dimension
        self.s = beta**2
        self.perms = list(itertools.permutations(range(N)))
        if model.domain is Domain.CIRCLE:
            if f.radius is None:
                self.lo, self.width = 0.0, 2.0 * np.pi
            else:
                self.lo, self.width = f.center - f.radius, 2.0 * f.radius
            self.vol = self.width
            self.reach = np.pi
            # q(t) = (1 - s) / (2 pi^{1-s}) |t|^{-s} on (-pi, pi)
            self.qnorm = (1.0 - self.s) / (2.0 * np.pi ** (1.0 - self.s))
        else:
            self.R = f.radius
            self.vol = np.pi * self.R**2
            self.reach = 2.0 * self.R
            # q(t) = (2 - s) / (2 pi reach^{2-s}) |t|^{-s} on |t| < reach
            self.qnorm = (2.0 - self.s) / (2.0 * np.pi * self.reach ** (2.0 - self.s))

    @property
    def dim(self) -> int:
        return 2 * self.N * self.d + 1

    def q(self, t: np.ndarray) -> np.ndarray:
        r = np.abs(t)
        with np.errstate(divide="ignore"):
            return np.where(r < self.reach, self.qnorm * r ** (-self.s), 0.0)

    def map(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unit-cube points -> (x, y, log proposal density)."""
        N, d = self.N, self.d
        n = u.shape[0]
        ux = u[:, : N * d].reshape(n, N, d)
        ut = u[:, N * d : 2 * N * d].reshape(n, N, d)
        sig = np.minimum((u[:, -1] * len(self.perms)).astype(int), len(self.perms) - 1)
        pa = np.array(self.perms)[sig]
        if d == 1:
            x = self.lo + self.width * ux[..., 0]
            # reuse the fractional digits for the sign so the map stays one-to-one
            rad = self.reach * np.maximum((2 * ut[..., 0]) % 1.0, 1e-15) ** (1.0 / (1.0 - self.s))
            sign = np.where(ut[..., 0] < 0.5, 1.0, -1.0)
            t = sign * rad
        else:
            rr = self.R * np.sqrt(ux[..., 0])
            x = self.f.center + rr * np.exp(2j * np.pi * ux[..., 1])
            rad = self.reach * ut[..., 0] ** (1.0 / (2.0 - self.s))
            t = rad * np.exp(2j * np.pi * ut[..., 1])
        y = np.empty_like(x)
        rows = np.arange(n)[:, None]
        y[rows, pa] = x + t
        if d == 1:
            y = np.mod(y, 2.0 * np.pi) if self.f.radius is None else y
        sep = self._sep(x[:, :, None], y[:, None, :])
        # matched separations are known exactly even when x + t rounds to x
        sep[rows, np.arange(N)[None, :], pa] = t
        Q = self.q(sep)
        logp = -N * np.log(self.vol) + log_permanent(Q) - math.lgamma(N + 1)
        dist = np.abs(2.0 * np.sin(sep / 2.0)) if d == 1 else np.abs(sep)
        return x, y, logp, dist

    def _sep(self, a, b):
        if self.d == 1:
            return np.angle(np.exp(1j * (b - a)))
        return b - a


def qmc_moment_2N(
    model: LogCorrelatedModel,
    f: TestFunction,
    beta: float,
    N: int,
    n_points: int = 2**14,
    scrambles: int = 16,
    seed: int = 0,
    max_rel_stderr: float = 0.3,
) -> MomentReport:
    """RQMC estimate of E|mu(f)|^{2N}; stderr from independent Owen scrambles."""
    if N == 0:
        return MomentReport("qmc_moment_2N", 1.0, 0.0, 0, 1.0, INFO, "", {"N": 0})
    if 2 * N * model.dimension > 24:
        raise ConfigError("2 N d must not exceed 24")
    prop = _Proposal(model, f, beta, N)
    ests = []
    m = int(np.ceil(np.log2(n_points)))
    for r in range(scrambles):
        sob = qmc.Sobol(prop.dim, scramble=True, seed=np.random.default_rng([seed, r]))
        u = sob.random_base2(m)
        u = np.clip(u, 1e-15, 1 - 1e-15)
        total = 0.0 + 0.0j
        for s in range(0, len(u), 4096):
            x, y, logp, dist = prop.map(u[s : s + 4096])
            fx = np.prod(np.asarray(f(x), dtype=complex), axis=1)
            fy = np.prod(np.conj(np.asarray(f(y), dtype=complex)), axis=1)
            ok = (fx != 0) & (fy != 0)
            val = np.zeros(len(x), dtype=complex)
            val[ok] = fx[ok] * fy[ok] * np.exp(log_moment_integrand(model, beta, x[ok], y[ok], dist[ok]) - logp[ok])
            total += val.sum()
        ests.append(total / len(u))
    ests = np.array(ests)
    value = ests.mean()
    stderr = float(ests.real.std(ddof=1) / np.sqrt(scrambles))
    if stderr > max_rel_stderr * abs(value.real):
        raise VarianceBlowup(f"relative stderr {stderr / abs(value.real):.2f}")
    meta = {"N": N, "beta": beta, "n_points": 2**m, "scrambles": scrambles, "model": model.name, "f": f.name}
    return MomentReport("qmc_moment_2N", complex(value), stderr, scrambles * 2**m, None, INFO, "", meta)
