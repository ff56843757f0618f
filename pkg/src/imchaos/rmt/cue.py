"""CUE spectra from Verblunsky coefficients and the fields log|det| and Im log det on the circle.

With independent rotation-invariant alpha_k, |alpha_k|^2 ~ Beta(1, N - k - 1) for
k < N - 1 and alpha_{N-1} uniform on the circle, the zeros of the paraorthogonal
polynomial are CUE distributed.  Writing b_k = z Phi_k / Phi_k^*, the Szego recursion
reads b_{k+1} = z (b_k - conj a_k) / (1 - a_k b_k), and the eigenvalues solve
b_{N-1}(z) = conj alpha_{N-1}.  The lifted phase of b_{N-1} increases by 2 pi N around the circle, so each
root is bracketed exactly on a grid and polished by safeguarded Newton steps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy.special import loggamma, polygamma

from imchaos.errors import ConfigError, GridHitsEigenangle

MIN_GAP = 1e-9
GRID_FACTOR = 2
MAX_ITER = 100
X_TOL = 1e-12  # the lifted phase carries ~1e-10 of rounding at N in the thousands


@dataclass(frozen=True)
class CueSpectrum:
    N: int
    angles: np.ndarray  # sorted, in [0, 2 pi)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.shape != (self.N,):
            raise ConfigError("need exactly N eigenangles")
        if np.any((a < 0) | (a >= 2 * np.pi)):
            raise ConfigError("eigenangles must lie in [0, 2 pi)")
        object.__setattr__(self, "angles", np.sort(a))


@nb.njit(cache=True, fastmath=True)
def _phase(theta, alpha):
    """Continuous (lifted) arg b_{N-1}(e^{i theta}) and its theta-derivative.

    On the circle each Moebius step is b -> z b conj(w) / w with w = 1 - a b and Re w > 0,
    so arg w stays in (-pi/2, pi/2) and the lift is phi -> theta + phi - 2 arg w.  The
    derivative obeys phi' -> 1 + phi' (1 - |a|^2) / |w|^2.
    """
    zr, zi = np.cos(theta), np.sin(theta)
    br, bi = zr, zi
    phi = theta
    dphi = 1.0
    for k in range(alpha.size):
        ar, ai = alpha[k].real, alpha[k].imag
        wr = 1.0 - (ar * br - ai * bi)
        wi = -(ar * bi + ai * br)
        w2 = wr * wr + wi * wi
        phi = theta + phi - 2.0 * np.arctan(wi / wr)
        dphi = 1.0 + dphi * (1.0 - (ar * ar + ai * ai)) / w2
        # b <- z b conj(w)^2 / |w|^2, written out in real arithmetic
        cr, ci = wr * wr - wi * wi, -2.0 * wr * wi
        tr, ti = br * cr - bi * ci, br * ci + bi * cr
        br, bi = (zr * tr - zi * ti) / w2, (zr * ti + zi * tr) / w2
    return phi, dphi


@nb.njit(cache=True)
def _roots(alpha, c, n, m):
    """Solutions of phase(theta) = c + 2 pi j in [0, 2 pi), bracketed on an m-cell grid.

    The phase is strictly increasing, so each level sits in a known cell; roots are
    polished by Newton steps that fall back to bisection outside the bracket.
    """
    two_pi = 2.0 * np.pi
    vals = np.empty(m + 1)
    for i in range(m + 1):
        vals[i] = _phase(two_pi * i / m, alpha)[0]
    j0 = np.ceil((vals[0] - c) / two_pi)
    out = np.empty(n)
    cell = 0
    for r in range(n):
        level = c + two_pi * (j0 + r)
        while cell < m - 1 and vals[cell + 1] <= level:
            cell += 1
        lo, hi = two_pi * cell / m, two_pi * (cell + 1) / m
        x = lo + (hi - lo) * (level - vals[cell]) / (vals[cell + 1] - vals[cell])
        for _ in range(MAX_ITER):
            f, df = _phase(x, alpha)
            f -= level
            if f > 0.0:
                hi = x
            else:
                lo = x
            xn = x - f / df
            if not lo < xn < hi:
                xn = 0.5 * (lo + hi)
            done = abs(xn - x) < X_TOL or hi - lo < X_TOL
            x = xn
            if done:
                break
        out[r] = x
    return out


def verblunsky(N: int, rng: np.random.Generator) -> tuple[np.ndarray, complex]:
    """alpha_0..alpha_{N-2} and the unimodular alpha_{N-1} for the CUE."""
    k = np.arange(N - 1)
    r = np.sqrt(rng.beta(1.0, N - k - 1.0))
    alpha = r * np.exp(2j * np.pi * rng.random(N - 1))
    eta = complex(np.exp(2j * np.pi * rng.random()))
    return alpha, eta


def sample_cue(N: int, seed: int | np.random.Generator = 0) -> CueSpectrum:
    """Eigenangles of a Haar unitary N x N matrix without forming the matrix."""
    if not 2 <= N <= 4096:
        raise ConfigError("N must lie in [2, 4096]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    alpha, eta = verblunsky(N, rng)
    # eigenvalues solve b_{N-1} = conj(eta)
    roots = _roots(alpha, -np.angle(eta), N, GRID_FACTOR * N)
    return CueSpectrum(N, np.mod(roots, 2 * np.pi))


def haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary by QR of a complex Ginibre matrix with the phase fix (validation only)."""
    Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def haar_spectrum(N: int, rng: np.random.Generator) -> CueSpectrum:
    return CueSpectrum(N, np.mod(np.angle(np.linalg.eigvals(haar_unitary(N, rng))), 2 * np.pi))


# -- fields ------------------------------------------------------------------------------


@dataclass
class CueFieldEval:
    grid: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    N: int
    scheme: str = "CUE"


@nb.njit(cache=True)
def _log_abs(angles, grid):
    out = np.zeros(grid.size)
    for i in range(grid.size):
        s = 0.0
        for j in range(angles.size):
            s += np.log(2.0 * abs(np.sin(0.5 * (angles[j] - grid[i]))))
        out[i] = s
    return out


def field_X(spec: CueSpectrum, grid: np.ndarray) -> np.ndarray:
    """sum_j log|1 - e^{i(theta_j - theta)}| = sum_j log(2 |sin((theta_j - theta)/2)|)."""
    return _log_abs(spec.angles, np.asarray(grid, dtype=float))


def counting(spec: CueSpectrum, grid: np.ndarray) -> np.ndarray:
    """#{j : theta_j < theta}."""
    return np.searchsorted(spec.angles, np.asarray(grid, dtype=float), side="left")


def field_Y(spec: CueSpectrum, grid: np.ndarray) -> np.ndarray:
    """Closed form: sum_j (theta_j - theta)/2 - N pi/2 + pi #{theta_j < theta}."""
    g = np.asarray(grid, dtype=float)
    return 0.5 * (spec.angles.sum() - spec.N * g) - 0.5 * spec.N * np.pi + np.pi * counting(spec, g)


def check_grid(spec: CueSpectrum, grid: np.ndarray) -> None:
    g = np.mod(np.asarray(grid, dtype=float), 2 * np.pi)
    d = np.abs(np.angle(np.exp(1j * (g[:, None] - spec.angles[None, :]))))
    if d.min() <= MIN_GAP:
        raise GridHitsEigenangle("grid point within 1e-9 of an eigenangle")


def eval_fields(spec: CueSpectrum, grid: np.ndarray) -> CueFieldEval:
    check_grid(spec, grid)
    g = np.asarray(grid, dtype=float)
    return CueFieldEval(g, field_X(spec, g), field_Y(spec, g), spec.N)


def log_det_direct(spec: CueSpectrum, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log|prod(1 - e^{i(theta_j - theta)})| from the product itself, and Im sum log(1 - e^{...}).

    The principal log of 1 - r z is continuous as r -> 1 for z != 1, so the radial limit
    is the principal log on the circle.
    """
    g = np.asarray(grid, dtype=float)
    z = np.exp(1j * (spec.angles[None, :] - g[:, None]))
    prod = np.prod(1.0 - z, axis=1)
    im = np.sum(np.log(1.0 - z), axis=1).imag
    return np.log(np.abs(prod)), im


# -- normalizers ----------------------------------------------------------------------------


def keating_snaith(N: int, t: complex = 0.0, s: complex = 0.0) -> complex:
    """E |Z|^t e^{i s Im log Z} = prod_j Gamma(j) Gamma(j+t) / (Gamma(j+t/2+s/2) Gamma(j+t/2-s/2))."""
    j = np.arange(1, N + 1).astype(complex)
    lg = loggamma(j) + loggamma(j + t) - loggamma(j + t / 2 + s / 2) - loggamma(j + t / 2 - s / 2)
    return complex(np.exp(np.sum(lg)))


def normalizer_closed_form(field: str, N: int, beta: float) -> complex:
    """E e^{i beta X_N} or E e^{i beta Y_N} from the Keating-Snaith product."""
    if field == "X":
        return keating_snaith(N, t=1j * beta)
    if field == "Y":
        return keating_snaith(N, s=beta)
    raise ConfigError(f"unknown field {field!r}")


def counting_normalizer(N: int, beta: float, theta) -> np.ndarray:
    """E exp(i beta pi #{theta_j < theta}) as the N x N Toeplitz determinant of the jump symbol.

    The symbol is e^{i beta pi} on [0, theta) and 1 elsewhere (Heine's identity).
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    c = np.exp(1j * np.pi * beta) - 1.0
    n = np.arange(-(N - 1), N)
    out = np.empty(th.size, dtype=complex)
    idx = np.arange(N)[:, None] - np.arange(N)[None, :] + (N - 1)
    for i, t in enumerate(th):
        with np.errstate(invalid="ignore", divide="ignore"):
            g = c * (1.0 - np.exp(-1j * n * t)) / (2j * np.pi * n)
        g[N - 1] = 1.0 + c * t / (2.0 * np.pi)
        sign, logdet = np.linalg.slogdet(g[idx])
        out[i] = sign * np.exp(logdet)
    return out


def field_variance(N: int) -> float:
    """Var X_N(theta) = Var Y_N(theta) = (1/2) sum_{j<=N} psi'(j)."""
    return 0.5 * float(np.sum(polygamma(1, np.arange(1, N + 1))))


def as_realization(ev: CueFieldEval, which: str = "X", seed: int = 0):
    """One CUE field in the FieldRealization container, scheme tag CUE."""
    from imchaos.field.grids import angles_grid
    from imchaos.field.samplers import FieldRealization
    from imchaos.field.schemes import ApproxScheme, SchemeKind

    if which not in ("X", "Y"):
        raise ConfigError("which must be X or Y")
    values = ev.X if which == "X" else ev.Y
    var = np.full(ev.grid.size, field_variance(ev.N))
    return FieldRealization(angles_grid(ev.grid), np.asarray(values, dtype=float), ApproxScheme(SchemeKind.CUE, n=ev.N), seed, var)
