"""Approximation schemes X_n and their analytic covariances."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from imchaos.errors import ConfigError, NotComparable
from imchaos.field.kernels import bump_hat_1d, mollified_log
from imchaos.field.models import Domain, LogCorrelatedModel, as_points, distance


class SchemeKind(Enum):
    CONVOLUTION = 0
    KL_TRUNCATION = 1
    FOURIER_TRUNCATION = 2
    CUE = 3


# convolution on the circle keeps modes with k * eps below this frequency
CIRCLE_CONV_XI_MAX = 400.0


@dataclass(frozen=True)
class ApproxScheme:
    """One member X_n of an approximation sequence.

    ``n`` counts modes for truncations (per axis on the square); ``epsilon`` is the
    mollification scale. On the circle a convolution may act on a truncated field
    (``base_modes`` > 0). ``weighting`` is "sharp" or "fejer" for Fourier schemes.
    ``normalization`` selects the square KL scaling: "laplacian" is the Green's
    function of -Laplace, "log" multiplies by 2 pi so the kernel is log 1/|x - y|.
    """

    kind: SchemeKind
    n: int = 0
    epsilon: float = 0.0
    weighting: str = "sharp"
    base_modes: int = 0
    normalization: str = "log"

    def __post_init__(self):
        if self.kind is SchemeKind.CONVOLUTION and not self.epsilon > 0:
            raise ConfigError("convolution needs epsilon > 0")
        if self.kind in (SchemeKind.KL_TRUNCATION, SchemeKind.FOURIER_TRUNCATION) and self.n < 0:
            raise ConfigError("truncation level must be >= 0")
        if self.weighting not in ("sharp", "fejer"):
            raise ConfigError(f"unknown weighting {self.weighting!r}")
        if self.normalization not in ("log", "laplacian"):
            raise ConfigError(f"unknown normalization {self.normalization!r}")

    @property
    def cutoff(self) -> float:
        if self.kind is SchemeKind.CONVOLUTION:
            return self.epsilon
        return 1.0 / max(self.n, 1)

    def extra_variance(self) -> float:
        """Additive variance shift; zero for every genuine scheme."""
        return 0.0

    @property
    def tag(self) -> int:
        return self.kind.value

    @staticmethod
    def fourier(n: int) -> "ApproxScheme":
        return ApproxScheme(SchemeKind.FOURIER_TRUNCATION, n=n)

    @staticmethod
    def fejer(n: int) -> "ApproxScheme":
        return ApproxScheme(SchemeKind.FOURIER_TRUNCATION, n=n, weighting="fejer")

    @staticmethod
    def kl(n: int, normalization: str = "log") -> "ApproxScheme":
        return ApproxScheme(SchemeKind.KL_TRUNCATION, n=n, normalization=normalization)

    @staticmethod
    def convolution(eps: float, base_modes: int = 0) -> "ApproxScheme":
        return ApproxScheme(SchemeKind.CONVOLUTION, epsilon=eps, base_modes=base_modes)


def geometric_schedule(kind: str, levels: int, start: int = 1) -> list[ApproxScheme]:
    """Schemes with c_n = 2^-n for n = start .. start + levels - 1."""
    out = []
    for j in range(start, start + levels):
        if kind == "convolution":
            out.append(ApproxScheme.convolution(2.0**-j))
        elif kind == "kl":
            out.append(ApproxScheme.kl(2**j))
        else:
            out.append(ApproxScheme.fourier(2**j))
    return out


# -- circle -----------------------------------------------------------------------------


def circle_weights(scheme: ApproxScheme) -> np.ndarray:
    """Mode weights a_k (k = 1..K): X = sqrt2 Re sum a_k k^-1/2 e^{ik theta} W_k."""
    if scheme.kind is SchemeKind.FOURIER_TRUNCATION:
        k = np.arange(1, scheme.n + 1, dtype=float)
        if scheme.weighting == "fejer":
            return np.sqrt((scheme.n - k) / scheme.n)
        return np.ones(scheme.n)
    if scheme.kind is SchemeKind.CONVOLUTION:
        kmax = scheme.base_modes or int(np.ceil(CIRCLE_CONV_XI_MAX / scheme.epsilon))
        k = np.arange(1, kmax + 1, dtype=float)
        return bump_hat_1d(k * scheme.epsilon)
    raise NotComparable(f"{scheme.kind.name} is not a circle scheme")


def circle_profile(weights_a: np.ndarray, weights_b: np.ndarray, delta: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """sum_k a_k b_k cos(k delta) / k."""
    K = min(len(weights_a), len(weights_b))
    c = weights_a[:K] * weights_b[:K] / np.arange(1, K + 1)
    delta = np.asarray(delta, dtype=float)
    flat = delta.ravel()
    out = np.zeros(flat.shape)
    for s in range(0, K, chunk):
        k = np.arange(s + 1, min(K, s + chunk) + 1)
        out += np.cos(np.outer(flat, k)) @ c[s : s + len(k)]
    return out.reshape(delta.shape)


# -- square KL --------------------------------------------------------------------------


def kl_scale(scheme: ApproxScheme) -> float:
    return 1.0 if scheme.normalization == "laplacian" else 2.0 * np.pi


def kl_cross(n_a: int, n_b: int, x: np.ndarray, y: np.ndarray, scale: float) -> np.ndarray:
    """sum_{k,l <= min(n_a, n_b)} scale * 4 sin sin sin sin / (pi^2 (k^2 + l^2)) for paired points."""
    n = min(n_a, n_b)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
    shape = x.shape
    x, y = x.ravel(), y.ravel()
    k = np.arange(1, n + 1)
    inv = 1.0 / (k[:, None] ** 2 + k[None, :] ** 2)
    out = np.empty(x.shape)
    for s in range(0, len(x), 512):
        sl = slice(s, s + 512)
        a1 = np.sin(np.pi * np.outer(x.real[sl], k)) * np.sin(np.pi * np.outer(y.real[sl], k))
        a2 = np.sin(np.pi * np.outer(x.imag[sl], k)) * np.sin(np.pi * np.outer(y.imag[sl], k))
        out[sl] = np.einsum("pk,kl,pl->p", a1, inv, a2)
    return (scale * 4.0 / np.pi**2 * out).reshape(shape)


# -- generic ----------------------------------------------------------------------------


def scheme_cross_covariance(model: LogCorrelatedModel, a: ApproxScheme, b: ApproxScheme, x, y) -> np.ndarray:
    """E X_a(x) X_b(y) for two schemes built from the same underlying field."""
    x = as_points(x, model.domain)
    y = as_points(y, model.domain)
    x, y = np.broadcast_arrays(x, y)
    if model.domain is Domain.CIRCLE:
        out = circle_profile(circle_weights(a), circle_weights(b), x - y)
    elif a.kind is SchemeKind.KL_TRUNCATION and b.kind is SchemeKind.KL_TRUNCATION:
        if model.domain is not Domain.UNIT_SQUARE or a.normalization != b.normalization:
            raise NotComparable("KL truncation is defined on the square only")
        out = kl_cross(a.n, b.n, x, y, kl_scale(a))
    elif a.kind is SchemeKind.CONVOLUTION and b.kind is SchemeKind.CONVOLUTION:
        r = distance(x, y, model.domain)
        out = mollified_log(r, a.epsilon, b.epsilon) + model.g(x, y)
    else:
        raise NotComparable(f"no cross covariance between {a.kind.name} and {b.kind.name}")
    if a == b and a.extra_variance():
        out = out + a.extra_variance() * (distance(x, y, model.domain) < 1e-14)
    return out


def scheme_covariance(model: LogCorrelatedModel, scheme: ApproxScheme, x, y) -> np.ndarray:
    return scheme_cross_covariance(model, scheme, scheme, x, y)


def scheme_variance(model: LogCorrelatedModel, scheme: ApproxScheme, x) -> np.ndarray:
    x = as_points(x, model.domain)
    return scheme_covariance(model, scheme, x, x)
