"""Gaussian field samplers: circle Fourier series, square KL series, dense factorization."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from imchaos.errors import CoincidentPoints, ConfigError, FactorizationFailure, OutsideDomain
from imchaos.field.grids import Grid
from imchaos.field.models import Domain, LogCorrelatedModel, circle, unit_disc, unit_square
from imchaos.field.schemes import (
    ApproxScheme,
    SchemeKind,
    circle_weights,
    kl_cross,
    kl_scale,
    scheme_covariance,
)
from imchaos.rng import stream

PSD_SLACK = 1e-8


@dataclass(frozen=True, eq=False)
class FieldRealization:
    grid: Grid
    values: np.ndarray
    scheme: ApproxScheme
    seed: int
    variance_profile: np.ndarray
    model: LogCorrelatedModel = field(default_factory=circle)

    def __post_init__(self):
        if not (len(self.values) == len(self.grid) == len(self.variance_profile)):
            raise ConfigError("values, grid and variance profile lengths differ")

    @property
    def dimension(self) -> int:
        return self.model.dimension


# -- circle -----------------------------------------------------------------------------


class CircleSampler:
    """Batched draws of X = Re sum_k c_k e^{ik theta}, c_k = a_k sqrt(2/k) W_k (several weightings share W)."""

    def __init__(self, weights: list[np.ndarray], grid: Grid):
        if grid.domain is not Domain.CIRCLE:
            raise ConfigError("circle sampler needs an angular grid")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.K = max(len(w) for w in self.weights)
        self.grid = grid
        k = np.arange(1, self.K + 1)
        self.scale = [np.pad(w, (0, self.K - len(w))) / np.sqrt(k) for w in self.weights]
        self.m = len(grid)
        if grid.uniform:
            self.phase = np.exp(1j * k * grid.points[0])
        else:
            self.phase = None

    def variances(self) -> list[float]:
        k = np.arange(1, self.K + 1)
        return [float(np.sum(w**2 / k[: len(w)])) for w in self.weights]

    def coefficients(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, self.K, 2))
        return z[..., 0] + 1j * z[..., 1]

    def synthesize(self, W: np.ndarray, which: int = 0) -> np.ndarray:
        c = W * self.scale[which]
        size = c.shape[0]
        if self.phase is None:
            k = np.arange(1, self.K + 1)
            return (c @ np.exp(1j * np.outer(k, self.grid.points))).real
        c = c * self.phase
        m = self.m
        # coefficient k sits at FFT bin k mod m
        padded = np.zeros((size, ((self.K + 1 + m - 1) // m) * m), dtype=complex)
        padded[:, 1 : self.K + 1] = c
        folded = padded.reshape(size, -1, m).sum(axis=1)
        return (np.fft.ifft(folded, axis=1) * m).real

    def draw(self, rng: np.random.Generator, size: int) -> list[np.ndarray]:
        W = self.coefficients(rng, size)
        return [self.synthesize(W, j) for j in range(len(self.weights))]


def sample_circle_field(n_modes: int, grid: Grid, seed: int, scheme: ApproxScheme | None = None) -> FieldRealization:
    """Truncated Fourier series of the circle field on ``grid`` (or any circle ``scheme``)."""
    if scheme is None:
        if n_modes < 1:
            raise ConfigError("n_modes must be >= 1")
        scheme = ApproxScheme.fourier(n_modes)
    sampler = CircleSampler([circle_weights(scheme)], grid)
    values = sampler.draw(stream(seed), 1)[0][0]
    var = np.full(len(grid), sampler.variances()[0] + scheme.extra_variance())
    return FieldRealization(grid, values, scheme, seed, var, circle())


# -- square KL --------------------------------------------------------------------------


class SquareKLSampler:
    """Batched draws of the truncated sine-series GFF on the unit square."""

    def __init__(self, scheme: ApproxScheme, grid: Grid):
        if grid.domain is not Domain.UNIT_SQUARE:
            raise ConfigError("square sampler needs a square grid")
        n = scheme.n
        self.n = n
        self.grid = grid
        k = np.arange(1, n + 1)
        self.amp = np.sqrt(kl_scale(scheme) / (np.pi**2 * (k[:, None] ** 2 + k[None, :] ** 2))) * 2.0
        if grid.shape is not None:
            m = grid.shape[0]
            xs = grid.points.real.reshape(grid.shape)[0]
            ys = grid.points.imag.reshape(grid.shape)[:, 0]
            self.Sx = np.sin(np.pi * np.outer(xs, k))
            self.Sy = np.sin(np.pi * np.outer(ys, k))
        else:
            self.Sx = np.sin(np.pi * np.outer(grid.points.real, k))
            self.Sy = np.sin(np.pi * np.outer(grid.points.imag, k))

    def synthesize(self, A: np.ndarray) -> np.ndarray:
        """A has shape (size, n, n) indexed [k (x-mode), l (y-mode)]."""
        C = A * self.amp
        if self.grid.shape is not None:
            # values[i_y, i_x] = sum_kl Sy[i_y, l] C[k, l] Sx[i_x, k]
            vals = np.einsum("yl,skl,xk->syx", self.Sy, C, self.Sx, optimize=True)
            return vals.reshape(A.shape[0], -1)
        tmp = np.einsum("pk,skl->spl", self.Sx, C, optimize=True)
        return np.einsum("spl,pl->sp", tmp, self.Sy)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.synthesize(rng.standard_normal((size, self.n, self.n)))


def sample_square_gff(
    n_modes: int, grid: Grid, seed: int, normalization: str = "laplacian"
) -> FieldRealization:
    """Sine-series GFF truncated at n_modes^2 terms.

    ``normalization="laplacian"`` uses eigenvalues pi^2 (k^2 + l^2) of -Laplace;
    ``"log"`` rescales by sqrt(2 pi) so the covariance is log 1/|x - y| + g.
    """
    if n_modes < 1:
        raise ConfigError("n_modes must be >= 1")
    pts = grid.points
    if not np.all((pts.real > 0) & (pts.real < 1) & (pts.imag > 0) & (pts.imag < 1)):
        raise OutsideDomain("grid must lie in the open unit square")
    scheme = ApproxScheme.kl(n_modes, normalization)
    sampler = SquareKLSampler(scheme, grid)
    values = sampler.draw(stream(seed), 1)[0]
    var = kl_cross(n_modes, n_modes, pts, pts, kl_scale(scheme))
    return FieldRealization(grid, values, scheme, seed, var, unit_square())


# -- dense Gaussian sampling ------------------------------------------------------------


class GaussianSampler:
    """N(0, Sigma) via symmetric eigen-factorization with a PSD check."""

    def __init__(self, cov: np.ndarray):
        cov = 0.5 * (cov + cov.T)
        lam, vec = scipy.linalg.eigh(cov)
        scale = max(np.abs(lam).max(), 1e-300)
        if lam.min() < -PSD_SLACK * scale:
            raise FactorizationFailure(
                f"covariance not positive semi-definite (min eigenvalue {lam.min():.3e}, norm {scale:.3e})"
            )
        self.factor = vec * np.sqrt(np.clip(lam, 0.0, None))
        self.cov = cov

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, self.factor.shape[1]))
        return z @ self.factor.T


def convolution_covariance(model: LogCorrelatedModel, points: np.ndarray, eps: float) -> np.ndarray:
    """Mollified covariance matrix; exact when every eps-ball stays inside the domain."""
    scheme = ApproxScheme.convolution(eps)
    return scheme_covariance(model, scheme, points[:, None], points[None, :])


@lru_cache(maxsize=4)
def _disc_sampler(key: bytes, eps: float, n: int) -> GaussianSampler:
    pts = np.frombuffer(key, dtype=complex, count=n)
    return GaussianSampler(convolution_covariance(unit_disc(), pts, eps))


def disc_sampler(grid: Grid, eps: float, model: LogCorrelatedModel | None = None) -> GaussianSampler:
    model = model or unit_disc()
    pts = np.ascontiguousarray(grid.points, dtype=complex)
    if len(pts) > 8192:
        raise ConfigError("at most 8192 grid points")
    if model.domain is Domain.UNIT_DISC:
        if np.any(np.abs(pts) >= 1.0):
            raise OutsideDomain("grid must lie in the open unit disc")
        if np.any(np.abs(pts) > 1.0 - eps):
            raise OutsideDomain("mollification balls must stay inside the disc (|x| <= 1 - eps)")
    d = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(d, np.inf)
    if len(pts) > 1 and d.min() < 1e-14:
        raise CoincidentPoints("duplicate grid point")
    if model.domain is Domain.UNIT_DISC:
        return _disc_sampler(pts.tobytes(), float(eps), len(pts))
    return GaussianSampler(convolution_covariance(model, pts, eps))


def sample_disc_gff(grid: Grid, seed: int, eps: float = 0.05) -> FieldRealization:
    """Exact draw of the eps-mollified disc GFF at the grid points."""
    sampler = disc_sampler(grid, eps)
    values = sampler.draw(stream(seed), 1)[0]
    scheme = ApproxScheme.convolution(eps)
    return FieldRealization(grid, values, scheme, seed, np.diag(sampler.cov).copy(), unit_disc())
