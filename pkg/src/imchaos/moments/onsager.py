"""Onsager-type (electrostatic) inequality checkers.

For charges q_j at points x_j the inequality reads

    -sum_{j<k} q_j q_k C(x_j, x_k) <= 1/2 sum_j log(1 / (min_{k != j} |x_j - x_k| / 2)) + C N.

Each checker returns the margin at a given C and the smallest C that works for the
configuration, ``(LHS - NN) / N``. A batch of random configurations then gives a
fitted constant (the batch maximum) and a trend test in N.

Convention for N = 1: the minimum over an empty set is +inf, and the point contributes
zero to the nearest-neighbour sum, so the margin equals C.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from imchaos.errors import ChargeConfigInvalid
from imchaos.field.models import Domain, LogCorrelatedModel, as_points, distance, unit_disc
from imchaos.moments.fits import theil_sen
from imchaos.reports import FAIL, PASS, MomentReport
from imchaos.rng import stream

MIN_GAP = 1e-9
# |1 - conj(z) w| <= 2 on the disc, so rho >= |z - w| / 2: the pseudo-hyperbolic bound
# transfers to euclidean distances with C = log(2) / 2
GFF_DISC_CONSTANT = 0.5 * np.log(2.0)


@dataclass(frozen=True)
class ChargeConfig:
    points: np.ndarray
    charges: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.charges)
        p = np.asarray(self.points)
        if p.ndim != 1 or q.shape != p.shape or p.size == 0:
            raise ChargeConfigInvalid("points and charges must be matching non-empty 1-d arrays")
        if not np.all(np.isin(q, (-1, 1))):
            raise ChargeConfigInvalid("charges must be +1 or -1")

    @property
    def n(self) -> int:
        return int(np.asarray(self.points).size)


@dataclass
class OnsagerMargin:
    lhs: float
    nn: float
    constant: float
    n: int

    @property
    def rhs(self) -> float:
        return self.nn + self.constant * self.n

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def minimal_constant(self) -> float:
        return (self.lhs - self.nn) / self.n


def _pair_distances(model: LogCorrelatedModel, x: np.ndarray) -> np.ndarray:
    D = distance(x[:, None], x[None, :], model.domain)
    np.fill_diagonal(D, np.inf)
    return D


def _validate(model: LogCorrelatedModel, cfg: ChargeConfig) -> np.ndarray:
    x = as_points(cfg.points, model.domain)
    if not np.all(model.contains(x)):
        raise ChargeConfigInvalid("point outside the domain")
    if cfg.n > 1 and _pair_distances(model, x).min() <= MIN_GAP:
        raise ChargeConfigInvalid("points closer than the minimal gap")
    return x


def nn_term(D: np.ndarray) -> float:
    """1/2 sum_j log(2 / min_k d_jk); an isolated point contributes zero."""
    if D.shape[0] < 2:
        return 0.0
    return float(0.5 * np.sum(np.log(2.0 / D.min(axis=1))))


def signed_energy(model: LogCorrelatedModel, x: np.ndarray, q: np.ndarray) -> float:
    """-sum_{j<k} q_j q_k C(x_j, x_k)."""
    if x.size < 2:
        return 0.0
    Cm = model.kernel(x[:, None], x[None, :])
    np.fill_diagonal(Cm, 0.0)
    return float(-0.5 * q @ Cm @ q)


def _margin(model, cfg, constant, x, metric=None) -> OnsagerMargin:
    q = np.asarray(cfg.charges, dtype=float)
    D = metric(x) if metric is not None else _pair_distances(model, x)
    return OnsagerMargin(signed_energy(model, x, q), nn_term(D), float(constant), cfg.n)


def onsager_check_local(
    model: LogCorrelatedModel,
    config: ChargeConfig,
    variant: str = "d2_C2g",
    constant: float = 0.0,
    center=0.0,
    radius: float | None = None,
) -> OnsagerMargin:
    """Local inequality on a compact set K.

    d2_C2g: two-dimensional models, K = points at distance >= ``radius`` (default 0.15)
    from the boundary. general_Hd: any model, K = ball of ``radius`` (default 0.5)
    about ``center``.
    """
    x = _validate(model, config)
    if variant == "d2_C2g":
        if model.dimension != 2:
            raise ChargeConfigInvalid("d2_C2g needs a two-dimensional model")
        gap = 0.15 if radius is None else radius
        if np.any(_boundary_distance(model, x) < gap):
            raise ChargeConfigInvalid("point outside the compact set")
    elif variant == "general_Hd":
        r = 0.5 if radius is None else radius
        c = as_points(center, model.domain)
        if np.any(distance(x, c, model.domain) > r):
            raise ChargeConfigInvalid("point outside the small ball")
    else:
        raise ChargeConfigInvalid(f"unknown variant {variant!r}")
    return _margin(model, config, constant, x)


def onsager_check_gff_global(config: ChargeConfig, constant: float | None = None, metric: str = "euclidean") -> OnsagerMargin:
    """Global inequality for the disc GFF; points anywhere in the open disc.

    With ``metric="pseudo_hyperbolic"`` the nearest-neighbour term uses rho, for which
    the inequality holds with C = 0; the euclidean form then holds with log(2) / 2.
    """
    x = _validate(unit_disc(), config)
    if metric == "euclidean":
        return _margin(unit_disc(), config, GFF_DISC_CONSTANT if constant is None else constant, x)
    if metric != "pseudo_hyperbolic":
        raise ChargeConfigInvalid(f"unknown metric {metric!r}")

    def rho(z):
        D = pseudo_hyperbolic(z[:, None], z[None, :])
        np.fill_diagonal(D, np.inf)
        return D

    return _margin(unit_disc(), config, 0.0 if constant is None else constant, x, rho)


def pseudo_hyperbolic(z, w) -> np.ndarray:
    return np.abs((z - w) / (1.0 - np.conj(z) * w))


def _boundary_distance(model: LogCorrelatedModel, x: np.ndarray) -> np.ndarray:
    if model.domain is Domain.UNIT_DISC:
        return 1.0 - np.abs(x)
    if model.domain is Domain.UNIT_SQUARE:
        return np.minimum.reduce([x.real, 1 - x.real, x.imag, 1 - x.imag])
    return np.full(x.shape, np.inf)


# -- random configurations --------------------------------------------------------------


def _optimize_charges(Cm: np.ndarray, q: np.ndarray, sweeps: int = 20) -> np.ndarray:
    """Greedy single flips that raise -1/2 q^T C q (near-worst-case sign patterns)."""
    q = q.copy()
    for _ in range(sweeps):
        h = Cm @ q
        # flipping q_j changes the energy by 2 q_j h_j
        gain = 2.0 * q * h
        j = int(np.argmax(gain))
        if gain[j] <= 1e-12:
            break
        q[j] = -q[j]
    return q


def random_points(kind: str, n: int, rng: np.random.Generator, radius: float = 0.5) -> np.ndarray:
    while True:
        if kind == "disc_compact":
            r = (1.0 - 0.15) * np.sqrt(rng.random(n))
            x = r * np.exp(2j * np.pi * rng.random(n))
        elif kind == "square_compact":
            x = 0.15 + 0.7 * rng.random(n) + 1j * (0.15 + 0.7 * rng.random(n))
        elif kind == "arc":
            x = radius * (2.0 * rng.random(n) - 1.0)
        elif kind == "disc_boundary":
            # radii piling up at the boundary: 1 - |x| log-uniform on [1e-4, 1]
            r = 1.0 - 10.0 ** (-4.0 * rng.random(n))
            x = r * np.exp(2j * np.pi * rng.random(n))
        else:
            raise ChargeConfigInvalid(f"unknown sampler {kind!r}")
        if n < 2:
            return x
        d = np.abs(x[:, None] - x[None, :]) + np.eye(n)
        if d.min() > MIN_GAP:
            return x


@dataclass
class OnsagerBatch:
    """Per-configuration minimal constants.

    ``cmin`` drives the trend test. ``checks`` maps a name to (per-config minimal
    constants, proven constant) pairs that must show zero violations.
    """

    checker: str
    ns: np.ndarray
    cmin: np.ndarray
    checks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def fitted_constant(self) -> float:
        return float(self.cmin.max())

    def violations(self, constant: float, values=None) -> int:
        v = self.cmin if values is None else values
        return int(np.sum(v > constant + 1e-12))

    def medians(self) -> tuple[np.ndarray, np.ndarray]:
        u = np.unique(self.ns)
        return u, np.array([np.median(self.cmin[self.ns == k]) for k in u])

    def slope(self) -> float:
        u, med = self.medians()
        return theil_sen(u, med).slope

    def spread(self) -> float:
        _, med = self.medians()
        return float(med.max() - med.min())

    def report(self, slope_tol: float = 0.05, spread_tol: float = 0.5) -> MomentReport:
        s, sp = self.slope(), self.spread()
        C = self.fitted_constant
        ok = abs(s) <= slope_tol and sp < spread_tol and self.violations(C) == 0
        half = self.ns.size // 2
        meta = {
            "checker": self.checker,
            "configs": int(self.ns.size),
            "n_max": int(self.ns.max()),
            "fitted_C": C,
            "violations_at_fitted_C": self.violations(C),
            "slope": s,
            "median_spread": sp,
            # constant fitted on the first half, applied to the second
            "held_out_violations": self.violations(float(self.cmin[:half].max()), self.cmin[half:]),
            **self.meta,
        }
        for name, (values, proven) in self.checks.items():
            nv = self.violations(proven, values)
            meta[f"{name}_proven_C"] = proven
            meta[f"{name}_max_C"] = float(values.max())
            meta[f"{name}_violations"] = nv
            ok = ok and nv == 0
        return MomentReport(
            f"onsager_{self.checker}",
            s,
            0.0,
            int(self.ns.size),
            0.0,
            PASS if ok else FAIL,
            f"|slope| <= {slope_tol}, median spread < {spread_tol}, zero violations",
            meta,
        )


_CHECKERS = {
    "d2_C2g": ("disc_compact", "disc"),
    "d2_C2g_square": ("square_compact", "square"),
    "general_Hd": ("arc", "circle"),
    "gff_global": ("disc_boundary", "disc"),
}


def onsager_batch(
    checker: str,
    n_configs: int = 10_000,
    n_max: int = 64,
    seed: int = 0,
    radius: float = 0.5,
) -> OnsagerBatch:
    """Random configurations with N uniform on 2..n_max.

    Charges start random and are then improved by greedy flips, so every
    configuration is close to the worst sign pattern for its points; the constant
    in the inequality is a worst-case quantity. For the global disc checker the trend
    is measured in the pseudo-hyperbolic form, and both forms are held to their
    proven constants.
    """
    from imchaos.field.models import circle, unit_square

    if checker not in _CHECKERS:
        raise ChargeConfigInvalid(f"unknown checker {checker!r}")
    kind, dom = _CHECKERS[checker]
    model = {"disc": unit_disc(), "square": unit_square(), "circle": circle()}[dom]
    rng = stream(seed, 7)
    ns = rng.integers(2, n_max + 1, size=n_configs)
    cmin = np.empty(n_configs)
    euclid = np.empty(n_configs)
    for i, n in enumerate(ns):
        x = random_points(kind, int(n), rng, radius)
        Cm = model.kernel(x[:, None], x[None, :])
        np.fill_diagonal(Cm, 0.0)
        q = _optimize_charges(Cm, rng.choice([-1.0, 1.0], size=n), sweeps=4 * int(n))
        cfg = ChargeConfig(x, q.astype(int))
        if checker == "gff_global":
            cmin[i] = onsager_check_gff_global(cfg, metric="pseudo_hyperbolic").minimal_constant
            euclid[i] = onsager_check_gff_global(cfg).minimal_constant
        elif checker == "general_Hd":
            cmin[i] = onsager_check_local(model, cfg, "general_Hd", radius=radius).minimal_constant
        else:
            cmin[i] = onsager_check_local(model, cfg, "d2_C2g").minimal_constant
    checks = {}
    if checker == "gff_global":
        checks = {"pseudo_hyperbolic": (cmin, 0.0), "euclidean": (euclid, GFF_DISC_CONSTANT)}
    return OnsagerBatch(checker, ns, cmin, checks, {"model": dom, "seed": seed})
