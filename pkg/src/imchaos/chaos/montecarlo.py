"""Replica-parallel Monte Carlo engines returning paired chaos values.

Every engine splits ``replicas`` into fixed-size chunks; chunk ``j`` draws from
``stream(seed, j)`` so output does not depend on the worker count.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from imchaos.chaos.chaos import chaos_values, check_beta, quadrature_weights
from imchaos.chaos.testfunctions import TestFunction
from imchaos.field.grids import Grid
from imchaos.field.samplers import CircleSampler, GaussianSampler, SquareKLSampler
from imchaos.field.schemes import ApproxScheme, circle_weights
from imchaos.rng import chunk_sizes, parallel_map, stream

DEFAULT_CHUNK = 1000


def _weights_matrix(grid: Grid, fs: Sequence[TestFunction]) -> np.ndarray:
    return np.column_stack([quadrature_weights(grid, f) for f in fs])


@dataclass(frozen=True, eq=False)
class _CircleTask:
    schemes: tuple
    grid: Grid
    betas: tuple
    F: np.ndarray
    seed: int

    def __call__(self, job: tuple[int, int]) -> np.ndarray:
        idx, size = job
        sampler = CircleSampler([circle_weights(s) for s in self.schemes], self.grid)
        var = sampler.variances()
        W = sampler.coefficients(stream(self.seed, idx), size)
        out = np.empty((size, len(self.schemes), len(self.betas), self.F.shape[1]), dtype=complex)
        for j in range(len(self.schemes)):
            x = sampler.synthesize(W, j)
            for b, beta in enumerate(self.betas):
                out[:, j, b, :] = chaos_values(x, var[j] + self.schemes[j].extra_variance(), beta) @ self.F
        return out


def circle_pairings(
    schemes: Sequence[ApproxScheme],
    grid: Grid,
    betas: Sequence[float] | float,
    fs: Sequence[TestFunction],
    replicas: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
    workers: int = 1,
    force: bool = False,
) -> np.ndarray:
    """mu_s(f) for coupled circle schemes; shape (replicas, n_schemes, n_betas, n_f)."""
    betas = tuple(np.atleast_1d(betas).astype(float))
    for b in betas:
        check_beta(b, 1, force)
    task = _CircleTask(tuple(schemes), grid, betas, _weights_matrix(grid, fs), seed)
    jobs = list(enumerate(chunk_sizes(replicas, chunk)))
    return np.concatenate(parallel_map(task, jobs, workers), axis=0)


@dataclass(frozen=True, eq=False)
class _SquareTask:
    n_list: tuple
    normalization: str
    grid: Grid
    beta: float
    F: np.ndarray
    seed: int

    def __call__(self, job: tuple[int, int]) -> np.ndarray:
        idx, size = job
        nmax = max(self.n_list)
        rng = stream(self.seed, idx)
        A = rng.standard_normal((size, nmax, nmax))
        out = np.empty((size, len(self.n_list), self.F.shape[1]), dtype=complex)
        for j, n in enumerate(self.n_list):
            sampler = SquareKLSampler(ApproxScheme.kl(n, self.normalization), self.grid)
            var = _kl_variance(n, self.normalization, self.grid)
            x = sampler.synthesize(A[:, :n, :n])
            out[:, j, :] = chaos_values(x, var, self.beta) @ self.F
        return out


def _kl_variance(n: int, normalization: str, grid: Grid) -> np.ndarray:
    from imchaos.field.schemes import kl_cross

    scale = 1.0 if normalization == "laplacian" else 2.0 * np.pi
    return kl_cross(n, n, grid.points, grid.points, scale)


def square_kl_pairings(
    n_list: Sequence[int],
    grid: Grid,
    beta: float,
    fs: Sequence[TestFunction],
    replicas: int,
    seed: int,
    normalization: str = "log",
    chunk: int = 16,
    workers: int = 1,
) -> np.ndarray:
    """Pairings of the KL chaos for nested truncations sharing one coefficient array."""
    check_beta(beta, 2)
    task = _SquareTask(tuple(n_list), normalization, grid, beta, _weights_matrix(grid, fs), seed)
    jobs = list(enumerate(chunk_sizes(replicas, chunk)))
    return np.concatenate(parallel_map(task, jobs, workers), axis=0)


@dataclass(frozen=True, eq=False)
class _GaussianTask:
    sampler: GaussianSampler
    betas: tuple
    F: np.ndarray
    seed: int

    def __call__(self, job: tuple[int, int]) -> np.ndarray:
        idx, size = job
        x = self.sampler.draw(stream(self.seed, idx), size)
        var = np.diag(self.sampler.cov)
        out = np.empty((size, len(self.betas), self.F.shape[1]), dtype=complex)
        for b, beta in enumerate(self.betas):
            out[:, b, :] = chaos_values(x, var, beta) @ self.F
        return out


def gaussian_pairings(
    sampler: GaussianSampler,
    grid: Grid,
    betas: Sequence[float] | float,
    fs: Sequence[TestFunction],
    replicas: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> np.ndarray:
    """Pairings of chaos built on dense Gaussian draws; shape (replicas, n_betas, n_f)."""
    betas = tuple(np.atleast_1d(betas).astype(float))
    for b in betas:
        check_beta(b, 2)
    task = _GaussianTask(sampler, betas, _weights_matrix(grid, fs), seed)
    jobs = list(enumerate(chunk_sizes(replicas, chunk)))
    return np.concatenate(parallel_map(task, jobs, workers), axis=0)
