"""Discrete Sobolev and Besov-block norms on uniform circle grids."""
from __future__ import annotations

import numpy as np

from imchaos.errors import NonUniformGrid


def _circle_values(obj) -> np.ndarray:
    grid = getattr(obj, "grid", None)
    if grid is not None:
        if not grid.uniform or grid.shape is None or grid.domain.value != "circle":
            raise NonUniformGrid("need a uniform circle grid")
        return np.asarray(obj.values)
    return np.asarray(obj)


def circle_dft(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """f_hat(k) = sum_j f(theta_j) e^{-ik theta_j} 2 pi / m, with integer frequencies k."""
    values = np.asarray(values)
    m = values.shape[-1]
    if m < 2 or m & (m - 1):
        raise NonUniformGrid("grid size must be a power of two")
    return np.fft.fft(values, axis=-1) * (2.0 * np.pi / m), np.fft.fftfreq(m, 1.0 / m)


def sobolev_norm(field, s: float) -> float:
    """sum_k (1 + k^2)^s |f_hat(k)|^2 over the resolved modes (squared H^s norm)."""
    fh, k = circle_dft(_circle_values(field))
    return float(np.sum((1.0 + k**2) ** s * np.abs(fh) ** 2))


def besov_block_norms(field, p: float = np.inf) -> list[tuple[int, float]]:
    """L^p norms (w.r.t. d theta) of the pieces with 2^j <= |k| < 2^{j+1}.

    Accepts a realization, a chaos field or a raw value array (rows = replicas).
    """
    vals = _circle_values(field)
    fh, k = circle_dft(vals)
    m = vals.shape[-1]
    ak = np.abs(k)
    out = []
    j = 0
    while 2**j <= m // 2:
        mask = (ak >= 2**j) & (ak < 2 ** (j + 1))
        piece = np.fft.ifft(np.where(mask, fh, 0.0), axis=-1) * (m / (2.0 * np.pi))
        if np.isinf(p):
            norm = np.max(np.abs(piece), axis=-1)
        else:
            norm = (np.sum(np.abs(piece) ** p, axis=-1) * (2.0 * np.pi / m)) ** (1.0 / p)
        out.append((j, norm if np.ndim(norm) else float(norm)))
        j += 1
    return out
