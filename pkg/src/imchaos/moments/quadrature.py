"""Deterministic quadrature of chaos moments.

Singularities |x - y|^{-s} on the diagonal are absorbed into Gauss-Jacobi weights
in the separation variable; the remaining factor is smooth (N = 1) or bounded
and Hoelder (N = 2, after splitting over pairings).
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numba
import numpy as np
from scipy.integrate import quad
from scipy.special import roots_jacobi

from imchaos.chaos.testfunctions import TestFunction
from imchaos.errors import BudgetExceeded, ConfigError
from imchaos.field.models import Domain, LogCorrelatedModel, circle


# -- circle, one pair ---------------------------------------------------------------------


@lru_cache(maxsize=64)
def _fourier(f: TestFunction, m: int = 8192) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(m) / m
    return np.fft.fft(np.asarray(f(theta), dtype=complex)) * (2.0 * np.pi / m)


def cross_correlation(f: TestFunction, h: TestFunction, m: int = 8192) -> Callable[[float], complex]:
    """t -> int f(y + t) h(y) dy as a trigonometric series."""
    fh = _fourier(f, m)
    hh = _fourier(h, m)
    k = np.fft.fftfreq(m, 1.0 / m)
    # h_hat(-k) sits at index -k mod m
    coef = fh * hh[(-np.arange(m)) % m] / (2.0 * np.pi)
    keep = np.abs(coef) > 1e-18 * np.abs(coef).max()
    coef, k = coef[keep], k[keep]

    def F(t):
        return complex(np.sum(coef * np.exp(1j * k * t)))

    # real when the coefficients are Hermitian-symmetric
    sym = dict(zip(k.tolist(), coef))
    F.is_real = all(abs(c - np.conj(sym.get(-kk, 0.0))) <= 1e-12 * abs(coef).max() for kk, c in sym.items())
    return F


def circle_pair_integral(
    f: TestFunction, h: TestFunction, kernel: Callable[[float], float], epsrel: float = 1e-9, width: float = 0.0
) -> complex:
    """int int f(x) h(y) K(x - y) dx dy for a smooth periodic kernel K (adaptive quadrature).

    ``width`` > 0 adds breakpoints near t = 0 where a finite-n kernel is peaked.
    """
    F = cross_correlation(f, h)
    pts = [] if width <= 0 else sorted({min(np.pi, c * width) for c in (0.5, 1, 2, 4, 8, 16, 32)})

    def part(fn, a, b, p):
        return quad(fn, a, b, points=[q for q in p if a < q < b] or None, limit=2000, epsrel=epsrel, epsabs=1e-13)[0]

    re = lambda t: (F(t) * kernel(t)).real  # noqa: E731
    im = lambda t: (F(t) * kernel(t)).imag  # noqa: E731
    left = pts
    right = [2.0 * np.pi - q for q in pts]
    out = part(re, 0, np.pi, left) + part(re, np.pi, 2 * np.pi, right)
    if F.is_real:
        return complex(out, 0.0)
    return complex(out, part(im, 0, np.pi, left) + part(im, np.pi, 2 * np.pi, right))


def circle_power_integral(f: TestFunction, h: TestFunction, s: float, epsrel: float = 1e-11) -> complex:
    """int int f(x) h(y) |2 sin((x - y)/2)|^{-s} dx dy with the endpoint singularity in the weight."""
    F = cross_correlation(f, h)

    def smooth(t):
        sn = 2.0 * np.sin(t / 2.0)
        if sn < 1e-12:
            return (2.0 * np.pi) ** s
        return (t * (2 * np.pi - t) / sn) ** s

    kw = dict(weight="alg", wvar=(-s, -s), limit=2000, epsrel=epsrel, epsabs=1e-13)
    re = quad(lambda t: (F(t) * smooth(t)).real, 0, 2 * np.pi, **kw)[0]
    if F.is_real:
        return complex(re, 0.0)
    im = quad(lambda t: (F(t) * smooth(t)).imag, 0, 2 * np.pi, **kw)[0]
    return complex(re, im)


def circle_limit_constant(s: float) -> float:
    """int_0^{2pi} |2 sin(t/2)|^{-s} dt = 2 pi Gamma(1 - s) / Gamma(1 - s/2)^2."""
    from scipy.special import gamma

    return 2.0 * np.pi * gamma(1.0 - s) / gamma(1.0 - s / 2.0) ** 2


# -- planar, one pair ---------------------------------------------------------------------


def _outer_nodes(f: TestFunction, n_r: int, n_t: int) -> tuple[np.ndarray, np.ndarray]:
    """Polar product rule over the support disc of f."""
    x, w = np.polynomial.legendre.leggauss(n_r)
    R = f.radius
    r = 0.5 * R * (x + 1.0)
    wr = 0.5 * R * w * r
    t = 2.0 * np.pi * (np.arange(n_t) + 0.5) / n_t
    pts = (f.center + r[:, None] * np.exp(1j * t)[None, :]).ravel()
    wts = (wr[:, None] * np.full(n_t, 2.0 * np.pi / n_t)[None, :]).ravel()
    return pts, wts


def planar_pair_integral(
    a: TestFunction,
    b: TestFunction,
    smooth: Callable[[np.ndarray, np.ndarray], np.ndarray],
    s: float,
    nodes: tuple[int, int, int, int] = (40, 48, 48, 48),
) -> complex:
    """int int a(x) b(y) S(x, y) |x - y|^{-s} dx dy over the plane, S smooth.

    Outer polar rule over supp a; inner polar rule centred at x with
    Gauss-Jacobi weight r^{1 - s} in the radius.
    """
    n_or, n_ot, n_ir, n_it = nodes
    xs, wx = _outer_nodes(a, n_or, n_ot)
    z, wz = roots_jacobi(n_ir, 0.0, 1.0 - s)
    phi = 2.0 * np.pi * (np.arange(n_it) + 0.5) / n_it
    e = np.exp(1j * phi)
    ax = a(xs)
    total = 0.0 + 0.0j
    for x, w, av in zip(xs, wx, ax):
        if av == 0:
            continue
        R = abs(x - b.center) + b.radius
        r = 0.5 * R * (z + 1.0)
        wr = (0.5 * R) ** (2.0 - s) * wz
        y = x + r[:, None] * e[None, :]
        vals = b(y) * smooth(np.full(y.shape, x), y)
        total += w * av * np.sum(wr[:, None] * vals) * (2.0 * np.pi / n_it)
    return total


# -- moment integrands --------------------------------------------------------------------


def moment_smooth_factor(model: LogCorrelatedModel, beta: float, sign: int) -> Callable:
    """exp(sign beta^2 g(x, y)): the smooth part of exp(sign beta^2 C(x, y))."""
    b2 = beta**2

    def S(x, y):
        return np.exp(sign * b2 * model.g(x, y))

    return S


def exact_second_moment(model: LogCorrelatedModel, f: TestFunction, beta: float, nodes=None) -> complex:
    """E|mu(f)|^2 = int int f(x) conj f(y) e^{beta^2 C(x, y)}."""
    fc = f.times(lambda x: 1.0, 1.0, f.name)
    conj_f = TestFunction("conj " + f.name, f.domain, lambda x: np.conj(fc(x)), f.center, f.radius, f.sup_norm)
    if model.domain is Domain.CIRCLE:
        return circle_power_integral(f, conj_f, beta**2)
    return planar_pair_integral(f, conj_f, moment_smooth_factor(model, beta, +1), beta**2, nodes or (40, 48, 48, 48))


def exact_mixed_moment(model: LogCorrelatedModel, f: TestFunction, beta: float, nodes=None) -> complex:
    """E mu(f)^2 = int int f(x) f(y) e^{-beta^2 C(x, y)} (the (a, b) = (2, 0) moment)."""
    if model.domain is Domain.CIRCLE:
        return circle_power_integral(f, f, -(beta**2))
    return planar_pair_integral(f, f, moment_smooth_factor(model, beta, -1), -(beta**2), nodes or (40, 48, 48, 48))


# -- two pairs: split over the two pairings ---------------------------------------------------


@numba.njit(cache=True)
def _circle_quartet(x1, x2, h1, h2, b2):
    y1 = x1 + h1
    y2 = x2 + h2
    d11 = abs(2.0 * np.sin(h1 / 2.0))
    d22 = abs(2.0 * np.sin(h2 / 2.0))
    d12 = abs(2.0 * np.sin((x1 - y2) / 2.0))
    d21 = abs(2.0 * np.sin((x2 - y1) / 2.0))
    dxx = abs(2.0 * np.sin((x1 - x2) / 2.0))
    dyy = abs(2.0 * np.sin((y1 - y2) / 2.0))
    A = (d11 * d22) ** b2
    B = (d12 * d21) ** b2
    # (d11 d22)^{-b2} is carried by the Jacobi weights, up to the smooth sine factor
    s1 = 1.0 if abs(h1) < 1e-300 else (abs(h1) / d11) ** b2
    s2 = 1.0 if abs(h2) < 1e-300 else (abs(h2) / d22) ** b2
    return (dxx * dyy) ** b2 / (A + B) * s1 * s2


@numba.njit(cache=True)
def _circle_n2_sum(x1s, w1, f1, fy1, x2s, w2, f2, fy2, hs, wh, b2):
    tot = 0.0 + 0.0j
    m = hs.shape[0]
    for i in range(x1s.shape[0]):
        for j in range(x2s.shape[0]):
            fxx = f1[i] * f2[j] * w1[i] * w2[j]
            if fxx == 0:
                continue
            for k in range(m):
                a = fy1[i, k]
                if a == 0:
                    continue
                for l in range(m):
                    b = fy2[j, l]
                    if b == 0:
                        continue
                    tot += fxx * a * b * wh[k] * wh[l] * _circle_quartet(x1s[i], x2s[j], hs[k], hs[l], b2)
    return tot


def _circle_fourth_moment(f: TestFunction, beta: float, n_x: int, n_h: int) -> complex:
    """Pairing-split rule; rotation-invariant f fixes x1 = 0 and integrates three variables."""
    b2 = beta**2
    xs = 2.0 * np.pi * (np.arange(n_x) + 0.5) / n_x
    wx = np.full(n_x, 2.0 * np.pi / n_x)
    z, wz = roots_jacobi(n_h, 0.0, -b2)
    t = 0.5 * np.pi * (z + 1.0)
    wt = (0.5 * np.pi) ** (1.0 - b2) * wz
    hs = np.concatenate([t, -t])
    wh = np.concatenate([wt, wt])
    if f.invariant:
        x1 = np.zeros(1)
        w1 = np.array([2.0 * np.pi])
    else:
        x1, w1 = xs, wx
    f1 = np.asarray(f(x1), dtype=complex)
    f2 = np.asarray(f(xs), dtype=complex)
    fy1 = np.conj(np.asarray(f(x1[:, None] + hs[None, :]), dtype=complex))
    fy2 = np.conj(np.asarray(f(xs[:, None] + hs[None, :]), dtype=complex))
    # the swapped pairing contributes the same by relabelling y1 <-> y2
    return 2.0 * _circle_n2_sum(x1, w1, f1, fy1, xs, wx, f2, fy2, hs, wh, b2)


@numba.njit(cache=True)
def _g_numba(x, y, kind):
    if kind == 1:
        return np.log(abs(1.0 - x * np.conj(y)))
    return 0.0


@numba.njit(cache=True)
def _planar_n2_sum(x1s, w1, f1, fy1, x2s, w2, f2, fy2, hr, he, wh, kind, b2):
    """Sum over outer nodes x1, x2 and polar offsets h1, h2 for the identity pairing."""
    m = hr.shape[0]
    tot = 0.0 + 0.0j
    for i in range(x1s.shape[0]):
        for j in range(x2s.shape[0]):
            fxx = f1[i] * f2[j] * w1[i] * w2[j]
            if fxx == 0:
                continue
            xa = x1s[i]
            xb = x2s[j]
            dxx = abs(xa - xb)
            gxx = _g_numba(xa, xb, kind)
            for k in range(m):
                a = fy1[i, k]
                if a == 0:
                    continue
                y1 = xa + hr[k] * he[k]
                g11 = _g_numba(xa, y1, kind)
                g21 = _g_numba(xb, y1, kind)
                d21 = abs(xb - y1)
                for l in range(m):
                    b = fy2[j, l]
                    if b == 0:
                        continue
                    y2 = xb + hr[l] * he[l]
                    d12 = abs(xa - y2)
                    dyy = abs(y1 - y2)
                    A = (hr[k] * hr[l]) ** b2
                    B = (d12 * d21) ** b2
                    e = g11 + _g_numba(xb, y2, kind) + _g_numba(xa, y2, kind) + g21 - gxx - _g_numba(y1, y2, kind)
                    tot += fxx * a * b * wh[k] * wh[l] * (dxx * dyy) ** b2 / (A + B) * np.exp(b2 * e)
    return tot


def _planar_fourth_moment(model: LogCorrelatedModel, f: TestFunction, beta: float, n_r: int, n_t: int, n_hr: int, n_ht: int) -> complex:
    if model.domain is Domain.UNIT_SQUARE:
        raise ConfigError("fourth-moment quadrature is implemented for the disc model")
    b2 = beta**2
    xs, wx = _outer_nodes(f, n_r, n_t)
    if f.invariant and model.domain is Domain.UNIT_DISC:
        # rotate x1 onto the positive real axis
        z, w = np.polynomial.legendre.leggauss(n_r)
        rho = 0.5 * f.radius * (z + 1.0)
        x1 = rho.astype(complex)
        w1 = 0.5 * f.radius * w * rho * 2.0 * np.pi
    else:
        x1, w1 = xs, wx
    z, wz = roots_jacobi(n_hr, 0.0, 1.0 - b2)
    R = 2.0 * f.radius
    r = 0.5 * R * (z + 1.0)
    wr = (0.5 * R) ** (2.0 - b2) * wz
    phi = 2.0 * np.pi * (np.arange(n_ht) + 0.5) / n_ht
    hr = np.repeat(r, n_ht)
    he = np.tile(np.exp(1j * phi), n_hr)
    wh = np.repeat(wr, n_ht) * (2.0 * np.pi / n_ht)
    f1 = np.asarray(f(x1), dtype=complex)
    f2 = np.asarray(f(xs), dtype=complex)
    fy1 = np.conj(np.asarray(f(x1[:, None] + (hr * he)[None, :]), dtype=complex))
    fy2 = np.conj(np.asarray(f(xs[:, None] + (hr * he)[None, :]), dtype=complex))
    kind = 1 if model.domain is Domain.UNIT_DISC else 0
    return 2.0 * _planar_n2_sum(x1, w1, f1, fy1, xs, wx, f2, fy2, hr, he, wh, kind, b2)


def exact_moment_2N(
    model: LogCorrelatedModel,
    f: TestFunction,
    beta: float,
    N: int,
    budget: int = 2_000_000_000,
    rel_tol: float = 0.01,
) -> tuple[float, float]:
    """E|mu(f)|^{2N} for N in {1, 2} with an a-posteriori error (two resolutions).

    Returns (value, error estimate). Raises BudgetExceeded if the finer rule would
    exceed ``budget`` integrand evaluations or the error estimate exceeds ``rel_tol``.
    """
    if N == 0:
        return 1.0, 0.0
    if N == 1:
        if model.domain is Domain.CIRCLE:
            v = circle_power_integral(f, _conj(f), beta**2).real
            return v, abs(v) * 1e-10
        coarse = exact_second_moment(model, f, beta, (24, 32, 32, 32)).real
        fine = exact_second_moment(model, f, beta, (40, 48, 48, 48)).real
        err = abs(fine - coarse)
        if err > rel_tol * abs(fine):
            raise BudgetExceeded(f"second-moment quadrature error {err:.3g}", partial=fine)
        return fine, err
    if N != 2:
        raise ConfigError("exact quadrature supports N in {0, 1, 2}")
    if model.domain is Domain.CIRCLE:
        levels = [(256, 64), (512, 128)] if f.invariant else [(64, 24), (128, 48)]
        nx, nh = levels[-1]
        cost = (1 if f.invariant else nx) * nx * (2 * nh) ** 2
        if cost > budget:
            raise BudgetExceeded("fourth-moment rule exceeds budget")
        vals = [_circle_fourth_moment(f, beta, nx, nh).real for nx, nh in levels]
    else:
        inv = f.invariant and model.domain is Domain.UNIT_DISC
        levels = [(8, 16, 12, 16), (12, 24, 16, 24)] if inv else [(6, 12, 8, 12), (8, 16, 10, 16)]
        nr, nt, nhr, nht = levels[-1]
        cost = (nr if inv else nr * nt) * nr * nt * (nhr * nht) ** 2
        if cost > budget:
            raise BudgetExceeded("fourth-moment rule exceeds budget")
        vals = [_planar_fourth_moment(model, f, beta, *lv).real for lv in levels]
    err = abs(vals[1] - vals[0])
    if err > rel_tol * abs(vals[1]):
        raise BudgetExceeded(f"fourth-moment quadrature error {err:.3g}", partial=vals[1])
    return vals[1], err


def _conj(f: TestFunction) -> TestFunction:
    return TestFunction("conj " + f.name, f.domain, lambda x: np.conj(f(x)), f.center, f.radius, f.sup_norm)
