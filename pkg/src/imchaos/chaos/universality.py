"""Universality: periodic functions H(X_n) renormalize to a multiple of the cosine field."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from imchaos.errors import NotEven, NotMeanZero
from imchaos.field.samplers import FieldRealization
from imchaos.chaos.chaos import quadrature_weights
from imchaos.chaos.testfunctions import TestFunction


@dataclass(frozen=True)
class CosineSeries:
    """H(x) = mean + sum_k cos_k cos(k beta x) + sum_k sin_k sin(k beta x), period 2 pi / beta."""

    cos: dict[int, float]
    sin: dict[int, float] = field(default_factory=dict)
    mean: float = 0.0

    def validate(self) -> None:
        if abs(self.mean) > 1e-14 or 0 in self.cos:
            raise NotMeanZero("H must have mean zero")
        if any(abs(v) > 1e-14 for v in self.sin.values()):
            raise NotEven("H must be even")

    @property
    def a(self) -> float:
        """Coefficient of the first harmonic, the factor in front of the cosine field."""
        return float(self.cos.get(1, 0.0))

    def __call__(self, x: np.ndarray, beta: float) -> np.ndarray:
        out = np.full(np.shape(x), self.mean, dtype=float)
        for k, c in self.cos.items():
            out += c * np.cos(k * beta * x)
        for k, c in self.sin.items():
            out += c * np.sin(k * beta * x)
        return out

    @staticmethod
    def harmonic(k: int, amplitude: float = 1.0) -> "CosineSeries":
        return CosineSeries({k: amplitude})

    @staticmethod
    def square_wave(terms: int = 25) -> "CosineSeries":
        """sign(cos(beta x)) truncated to ``terms`` odd harmonics."""
        return CosineSeries({2 * j + 1: 4.0 / np.pi * (-1) ** j / (2 * j + 1) for j in range(terms)})


def universality_values(x: np.ndarray, variance: np.ndarray, H: CosineSeries, beta: float) -> np.ndarray:
    return np.exp(0.5 * beta**2 * variance) * H(x, beta)


@dataclass(frozen=True)
class UniversalityResult:
    value: float
    reference: float
    a: float

    @property
    def gap(self) -> float:
        return self.value - self.reference


def universality_pair(field: FieldRealization, H: CosineSeries, beta: float, f: TestFunction) -> UniversalityResult:
    """int f e^{beta^2 Var/2} H(X_n), and the predicted limit a <cos beta X, f>."""
    H.validate()
    w = quadrature_weights(field.grid, f)
    v = field.values
    value = float(np.real(np.dot(universality_values(v, field.variance_profile, H, beta), w)))
    cos_pair = float(np.real(np.dot(universality_values(v, field.variance_profile, CosineSeries.harmonic(1), beta), w)))
    return UniversalityResult(value, H.a * cos_pair, H.a)


def harmonic_second_moment_circle(f: TestFunction, beta: float, k: int, n: int) -> float:
    """E (int f e^{beta^2 H_n / 2} cos(k beta X_n))^2 for the circle truncation at n modes.

    Equals (1/2) e^{(1 - k^2) beta^2 H_n} int int f f [e^{k^2 beta^2 C_n} + e^{-k^2 beta^2 C_n}].
    """
    from imchaos.field.schemes import ApproxScheme, circle_profile, circle_weights
    from imchaos.moments.quadrature import circle_pair_integral

    w = circle_weights(ApproxScheme.fourier(n))
    Hn = float(np.sum(1.0 / np.arange(1, n + 1)))
    kb = k * k * beta * beta

    def kern(t):
        c = circle_profile(w, w, np.array([t]))[0]
        # scaled to avoid overflow: pull e^{kb H_n} out of the first term
        return 0.5 * (np.exp(kb * (c - Hn)) + np.exp(-kb * (c + Hn)))

    integral = circle_pair_integral(f, f, kern, width=1.0 / n).real
    return float(np.exp((1.0 - k * k) * beta**2 * Hn + kb * Hn) * integral)


def universality_scan(
    H: CosineSeries,
    beta: float,
    f: TestFunction,
    n_list=(16, 64, 256, 1024),
    replicas: int = 400,
    grid_points: int = 4096,
    seed: int = 0,
    chunk: int = 50,
) -> "MomentReport":
    """E|int f e^{beta^2 Var/2} H(X_n) - a <cos beta X_n, f>|^2 along coupled Fourier truncations.

    PASS if the mean squared gap strictly decreases in n.
    """
    from imchaos.field.grids import circle_grid
    from imchaos.field.samplers import CircleSampler
    from imchaos.field.schemes import ApproxScheme, circle_weights
    from imchaos.reports import FAIL, PASS, MomentReport, mean_stderr
    from imchaos.rng import chunk_sizes, stream

    H.validate()
    grid = circle_grid(grid_points)
    w = quadrature_weights(grid, f)
    one = CosineSeries.harmonic(1)
    sampler = CircleSampler([circle_weights(ApproxScheme.fourier(n)) for n in n_list], grid)
    var = sampler.variances()
    gaps = np.empty((replicas, len(n_list)))
    start = 0
    for idx, size in enumerate(chunk_sizes(replicas, chunk)):
        W = sampler.coefficients(stream(seed, idx), size)
        for j in range(len(n_list)):
            x = sampler.synthesize(W, j)
            u = universality_values(x, var[j], H, beta) @ w
            c = universality_values(x, var[j], one, beta) @ w
            gaps[start:start + size, j] = np.abs(u - H.a * c) ** 2
        start += size
    stats = [mean_stderr(gaps[:, j]) for j in range(len(n_list))]
    means = [float(np.real(m)) for m, _ in stats]
    ok = bool(np.all(np.diff(means) < 0))
    return MomentReport(
        "universality_gap",
        means[-1],
        stats[-1][1],
        replicas,
        None,
        PASS if ok else FAIL,
        "mean squared gap strictly decreasing in n",
        {"beta": beta, "f": f.name, "a": H.a, "n": list(n_list), "gap2": means, "gap2_stderr": [s for _, s in stats], "seed": seed},
    )
