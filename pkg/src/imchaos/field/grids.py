"""Evaluation grids with midpoint quadrature weights."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from imchaos.field.models import Domain


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered evaluation points with cell measures.

    ``shape`` is set for tensor grids on the square (row-major, x fastest along
    the last axis); ``spacing`` is the cell side (circle: angular step).
    """

    domain: Domain
    points: np.ndarray
    weights: np.ndarray
    spacing: float
    uniform: bool = True
    shape: tuple[int, ...] | None = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def coords(self) -> np.ndarray:
        """Real coordinates, shape (n, d)."""
        if self.domain is Domain.CIRCLE:
            return self.points[:, None].astype(float)
        return np.column_stack([self.points.real, self.points.imag])


def circle_grid(m: int, offset: float = 0.0) -> Grid:
    """theta_j = offset + 2 pi j / m, j = 0..m-1 (half-open)."""
    h = 2.0 * np.pi / m
    pts = offset + h * np.arange(m)
    return Grid(Domain.CIRCLE, pts, np.full(m, h), h, True, (m,))


def angles_grid(theta: np.ndarray) -> Grid:
    """Arbitrary angles; weights from the periodic spacing, flagged non-uniform unless equispaced."""
    theta = np.asarray(theta, dtype=float)
    m = len(theta)
    h = 2.0 * np.pi / m
    uniform = bool(np.allclose(np.diff(theta), h, rtol=0, atol=1e-12))
    return Grid(Domain.CIRCLE, theta, np.full(m, h), h, uniform, (m,) if uniform else None)


def square_grid(m: int, lo: float = 0.0, hi: float = 1.0) -> Grid:
    """Cell midpoints of an m x m subdivision of [lo, hi]^2 (a subsquare of the unit square)."""
    h = (hi - lo) / m
    t = lo + h * (np.arange(m) + 0.5)
    X, Y = np.meshgrid(t, t)
    pts = (X + 1j * Y).ravel()
    return Grid(Domain.UNIT_SQUARE, pts, np.full(m * m, h * h), h, True, (m, m))


def disc_grid(h: float, radius: float, center: complex = 0.0) -> Grid:
    """Cell midpoints of the lattice h Z^2 (shifted by h/2) within |x - center| < radius."""
    n = int(np.ceil(radius / h)) + 1
    t = h * (np.arange(-n, n) + 0.5)
    X, Y = np.meshgrid(t, t)
    pts = (X + 1j * Y).ravel() + center
    pts = pts[np.abs(pts - center) < radius]
    return Grid(Domain.UNIT_DISC, pts, np.full(len(pts), h * h), h, True, None)


def points_grid(domain: Domain, points, cell: float = 1.0) -> Grid:
    pts = np.asarray(points)
    if domain is not Domain.CIRCLE and pts.ndim == 2 and pts.shape[1] == 2 and not np.iscomplexobj(pts):
        pts = pts[:, 0] + 1j * pts[:, 1]
    w = np.full(len(pts), cell if domain is Domain.CIRCLE else cell * cell)
    return Grid(domain, pts, w, cell, False, None)
