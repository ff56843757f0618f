"""XOR-Ising estimators against the continuum spin-correlation formula.

A run advances two independent + boundary chains in lockstep and records, per sample,
spins and FK cluster labels at chosen faces plus raw pairings int f S of the XOR field.
Two kinds of estimator are offered for point correlations:

* raw: products of spins;
* cluster: E prod sigma = P(every FK cluster not joined to the boundary holds an even
  number of the points), read off the labels of the sweep that produced the spins.

Both are unbiased; the cluster one has far smaller variance.  The scaling by powers of
delta is applied here, never to the stored spins.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from imchaos.chaos.sinegordon import CosineObservable, SineGordonSpec, clamp, reweighted_mean, sine_gordon_expect
from imchaos.chaos.testfunctions import TestFunction, chi_weight
from imchaos.errors import BudgetExceeded, ConfigError, DegenerateWeights, InsufficientSamples
from imchaos.field.models import Domain
from imchaos.ising.chi import chi_correlation, pairing_kernel, pairing_weight, spin_constant
from imchaos.ising.lattice import BETA_C, FREE, SpinLattice
from imchaos.ising.samplers import Chain, _xor_run, check_delta
from imchaos.moments.fits import ols
from imchaos.moments.quadrature import _outer_nodes, planar_pair_integral
from imchaos.reports import FAIL, INFO, PASS, MomentReport, mean_stderr
from imchaos.rng import chunk_sizes, parallel_map, stream

DECAY_EXPONENT = 0.125
MIN_SAMPLES = 100
MIN_ESS = 50.0
BATCHES = 50


@dataclass(frozen=True)
class XorRunConfig:
    delta: float
    n_samples: int
    spacing: int = 2  # sweeps between samples; lag-2 XOR autocorrelation is ~0.01 at delta = 1/128
    seed: int = 0
    chunk: int = 50_000  # samples per independent pair of chains (fixed, so results ignore workers)
    workers: int = 1


@dataclass
class XorData:
    """Per-sample records of one XOR run."""

    config: XorRunConfig
    points: np.ndarray  # requested points
    faces: np.ndarray  # their flat face indices
    spins1: np.ndarray
    spins2: np.ndarray
    labels1: np.ndarray
    labels2: np.ndarray
    pairings: np.ndarray  # int f S dx per sample and test function, unscaled
    names: list[str] = field(default_factory=list)
    magnetization: np.ndarray | None = None  # per-face mean spin (both chains)

    @property
    def delta(self) -> float:
        return self.config.delta

    @property
    def n(self) -> int:
        return self.spins1.shape[0]

    def column(self, x: complex) -> int:
        hit = np.flatnonzero(np.isclose(self.points, x, atol=1e-12))
        if hit.size == 0:
            raise ConfigError(f"point {x} was not recorded in this run")
        return int(hit[0])

    def scaled_pairing(self, name: str) -> np.ndarray:
        return self.delta ** -0.25 * self.pairings[:, self.names.index(name)]


def face_weights(lat: SpinLattice, tests: Sequence[TestFunction]) -> tuple[np.ndarray, np.ndarray]:
    """Support faces and midpoint-rule weights delta^2 f(centre) for each test function."""
    idx, z = lat.centers(FREE)
    if not tests:
        return np.zeros(0, np.int64), np.zeros((0, 0))
    vals = np.array([np.real(f(z)) for f in tests])
    keep = np.any(vals != 0, axis=0)
    return idx[keep].astype(np.int64), np.ascontiguousarray(vals[:, keep] * lat.delta**2)


@dataclass(frozen=True, eq=False)
class _RunTask:
    config: XorRunConfig
    points: np.ndarray
    tests: tuple

    def __call__(self, job):
        idx, size = job
        cfg = self.config
        lat1 = SpinLattice.disc(cfg.delta)
        lat2 = lat1.copy()
        c1 = Chain(lat1, BETA_C, stream(cfg.seed, idx, 1))
        c2 = Chain(lat2, BETA_C, stream(cfg.seed, idx, 2))
        c1.thermalize()
        c2.thermalize()
        faces = lat1.face_index(self.points) if len(self.points) else np.zeros(0, np.int64)
        supp, wts = face_weights(lat1, self.tests)
        out = _xor_run(c1._spins, c2._spins, c1._kind, c1._ea, c1._eb, c1._free, c1.p, size, cfg.spacing,
                       faces.astype(np.int64), supp, wts, c1._rs, c2._rs)
        return out


def run_xor(config: XorRunConfig, points: Sequence[complex] = (), tests: Sequence[TestFunction] = ()) -> XorData:
    """Sample ``config.n_samples`` XOR configurations at mesh ``config.delta``."""
    check_delta(config.delta)
    if config.n_samples < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples")
    if config.spacing < 1:
        raise ConfigError("spacing must be at least one sweep")
    pts = np.asarray(points, dtype=complex)
    lat = SpinLattice.disc(config.delta)
    faces = lat.face_index(pts) if pts.size else np.zeros(0, np.int64)
    task = _RunTask(config, pts, tuple(tests))
    jobs = list(enumerate(chunk_sizes(config.n_samples, config.chunk)))
    parts = parallel_map(task, jobs, config.workers)
    s1, s2, l1, l2, pr = (np.concatenate([p[i] for p in parts]) for i in range(5))
    mag = sum(p[5] for p in parts) / (2.0 * config.n_samples)
    return XorData(config, pts, faces, s1, s2, l1, l2, pr, [f.name for f in tests], mag.reshape(lat.shape))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    m, se = mean_stderr(np.asarray(x, dtype=float), batches=BATCHES)
    return float(np.real(m)), se


def even_clusters(labels: np.ndarray) -> np.ndarray:
    """Per row: 1 if every label other than -1 occurs an even number of times."""
    out = np.ones(labels.shape[0], dtype=bool)
    for j in range(labels.shape[1]):
        same = labels == labels[:, j : j + 1]
        odd = (same.sum(axis=1) % 2 == 1) & (labels[:, j] != -1)
        out &= ~odd
    return out


def correlation_samples(data: XorData, cols: Sequence[int], chain: int, method: str = "cluster") -> np.ndarray:
    """Per-sample unbiased estimates of E prod_j sigma(x_j) from one chain."""
    cols = list(cols)
    if method == "raw":
        s = data.spins1 if chain == 1 else data.spins2
        return np.prod(s[:, cols].astype(float), axis=1)
    if method == "cluster":
        lab = data.labels1 if chain == 1 else data.labels2
        return even_clusters(lab[:, cols]).astype(float)
    raise ConfigError(f"unknown estimator {method!r}")


def rotation_orbit(points: Sequence[complex]) -> list[tuple[complex, ...]]:
    """The tuple rotated by 0, 90, 180 and 270 degrees (the lattice in the disc has this symmetry)."""
    pts = tuple(complex(p) for p in points)
    return [tuple(p * 1j**r for p in pts) for r in range(4)]


# -- one- and two-point functions ----------------------------------------------------------


def boundary_positivity(data: XorData, sigmas: float = 4.0) -> MomentReport:
    """Every free-face mean spin is >= 0 within ``sigmas`` (iid error inflated by the chain spacing)."""
    lat = SpinLattice.disc(data.delta)
    m = data.magnetization[lat.kind == FREE]
    se = np.sqrt(np.maximum(1.0 - m**2, 1e-12) / (2.0 * data.n)) * 3.0  # x3 covers the autocorrelation
    worst = float(np.min(m / se))
    return MomentReport(
        "boundary_positivity",
        float(m.min()),
        float(se[np.argmin(m)]),
        data.n,
        None,
        PASS if worst > -sigmas else FAIL,
        f"all face means >= -{sigmas} sigma",
        {"delta": data.delta, "min_z": worst, "faces": int(m.size)},
    )


def one_point(data: XorData, x: complex = 0.0, method: str = "cluster") -> tuple[float, float]:
    """E sigma(x), averaged over both chains and the rotation orbit of x."""
    cols = sorted({data.column(p[0]) for p in rotation_orbit([x])})
    v = np.mean([correlation_samples(data, [c], ch, method) for c in cols for ch in (1, 2)], axis=0)
    return _mean_se(v)


def decay_exponent(
    deltas=(1 / 32, 1 / 64, 1 / 128),
    x: complex = 0.0,
    n_samples: int = 20_000,
    seed: int = 0,
    band: float = 0.03,
    workers: int = 1,
    runs: dict | None = None,
) -> MomentReport:
    """Log-log slope of E sigma(x) against delta; the continuum answer is 1/8.

    ``runs`` may supply existing XorData per delta (they must record the orbit of x).
    """
    orbit = [p[0] for p in rotation_orbit([x])]
    means, ses, raw = [], [], []
    for i, d in enumerate(deltas):
        data = (runs or {}).get(d) or run_xor(XorRunConfig(d, n_samples, seed=seed + i, workers=workers), orbit)
        m, se = one_point(data, x)
        means.append(m)
        ses.append(se)
        raw.append(one_point(data, x, "raw")[0])
    fit = ols(np.log(deltas), np.log(means))
    slope_se = float(np.sqrt(np.sum((np.array(ses) / np.array(means)) ** 2)) / np.ptp(np.log(deltas)))
    oracle = [chi_correlation([x]) * d**0.125 for d in deltas]
    return MomentReport(
        "spin_decay_exponent",
        fit.slope,
        slope_se,
        n_samples * len(deltas),
        DECAY_EXPONENT,
        PASS if abs(fit.slope - DECAY_EXPONENT) <= band else FAIL,
        f"slope within +-{band} of 1/8",
        {
            "deltas": list(deltas),
            "mean_spin": means,
            "stderr": ses,
            "mean_spin_raw": raw,
            "continuum_prediction": oracle,
            "positive": bool(all(m > 4 * s for m, s in zip(means, ses))),
        },
    )


def two_point_points(x: complex, y: complex, symmetrize: bool = True) -> list[complex]:
    pairs = rotation_orbit([x, y]) if symmetrize else [(x, y)]
    return [p for pr in pairs for p in pr]


def xor_two_point(
    delta: float,
    x: complex,
    y: complex,
    n_samples: int,
    seed: int = 0,
    symmetrize: bool = True,
    band: float = 0.15,
    workers: int = 1,
    data: XorData | None = None,
) -> MomentReport:
    """delta^{-1/2} E[S(x) S(y)] against the squared two-point continuum correlation.

    Each of sigma, sigma~ carries delta^{1/4} at two points, so S(x)S(y) scales as delta^{1/2}.
    """
    x, y = complex(x), complex(y)
    if x != y and abs(x - y) <= 0.1:
        raise ConfigError("points must be separated by more than 0.1")
    pairs = rotation_orbit([x, y]) if symmetrize else [(x, y)]
    if data is None:
        data = run_xor(XorRunConfig(delta, n_samples, seed=seed, workers=workers), [p for pr in pairs for p in pr])
    if x == y:
        return MomentReport("xor_two_point", delta**-0.5, 0.0, data.n, None, INFO, "diagonal: E S^2 = 1", {"delta": delta})
    est = {}
    for method in ("cluster", "raw"):
        per_pair = []
        for a, b in pairs:
            ca, cb = data.column(a), data.column(b)
            per_pair.append(correlation_samples(data, [ca, cb], 1, method) * correlation_samples(data, [ca, cb], 2, method))
        est[method] = _mean_se(np.mean(per_pair, axis=0))
    # factorization: E[S(x)S(y)] against (E sigma(x) sigma(y))^2 pooled over both chains
    ca, cb = data.column(pairs[0][0]), data.column(pairs[0][1])
    s_raw = data.spins1[:, [ca, cb]].prod(axis=1) * data.spins2[:, [ca, cb]].prod(axis=1)
    xor_m, xor_se = _mean_se(s_raw)
    ss = np.concatenate([correlation_samples(data, [ca, cb], ch, "raw") for ch in (1, 2)])
    m, se = _mean_se(ss)
    fact_z = abs(xor_m - m * m) / np.hypot(xor_se, 2 * abs(m) * se)
    scale = delta**-0.5
    oracle = chi_correlation([x, y]) ** 2
    value, se_v = scale * est["cluster"][0], scale * est["cluster"][1]
    ratio = value / oracle
    return MomentReport(
        "xor_two_point",
        value,
        se_v,
        data.n,
        oracle,
        PASS if abs(ratio - 1.0) <= band else FAIL,
        f"ratio to the squared continuum correlation within +-{band:.0%}",
        {
            "delta": delta,
            "x": x,
            "y": y,
            "scaling": "delta^-1/2",
            "raw_estimate": scale * est["raw"][0],
            "raw_stderr": scale * est["raw"][1],
            "orbit_pairs": len(pairs),
            "factorization_z": fact_z,
            "factorization_ok": bool(fact_z < 4.0),
            "spacing": data.config.spacing,
        },
    )


# -- pairing moments -------------------------------------------------------------------------


def pairing_target(
    f: TestFunction, k: int, n_points: int = 2**14, scrambles: int = 16, seed: int = 0, method: str = "auto"
) -> tuple[float, float]:
    """(C^2/sqrt 2)^k int prod f(x_j) w(x_j) sum_mu prod q^{mu mu / 2} and its error estimate.

    ``auto``: k = 1, 2 by product quadrature, k = 3, 4 by scrambled Sobol points on supp f;
    ``qmc`` forces the Sobol route.
    """
    if f.domain is not Domain.UNIT_DISC or f.radius is None:
        raise ConfigError("pairing target needs a compactly supported disc test function")
    if k > 4:
        raise BudgetExceeded("pairing target implemented for k <= 4")
    if k < 1:
        return 1.0, 0.0
    pref = (spin_constant() ** 2 / np.sqrt(2.0)) ** k
    fw = f.times(pairing_weight, float(pairing_weight(np.array([abs(f.center) + f.radius]))[0]), f"w*{f.name}")
    if method not in ("auto", "qmc"):
        raise ConfigError(f"unknown method {method!r}")
    if k == 1 and method == "auto":
        xs, wx = _outer_nodes(f, 64, 64)
        return float(pref * 2.0 * np.sum(wx * np.real(fw(xs)))), 0.0
    if k == 2 and method == "auto":
        half = []
        for s, sign in ((-0.5, 1.0), (0.5, -1.0)):
            smooth = lambda a, b, sign=sign: 2.0 * np.abs(1.0 - a * np.conj(b)) ** (-0.5 * sign)  # noqa: E731
            half.append(planar_pair_integral(fw, fw, smooth, s, (40, 48, 40, 48)).real)
        return float(pref * sum(half)), 0.0
    R, c = f.radius, f.center
    vol = (np.pi * R * R) ** k
    means = []
    for r in range(scrambles):
        u = qmc.Sobol(2 * k, scramble=True, seed=np.random.default_rng([seed, r])).random(n_points)
        zs = c + R * np.sqrt(u[:, 0::2]) * np.exp(2j * np.pi * u[:, 1::2])
        vals = np.prod(np.real(fw(zs.ravel())).reshape(zs.shape), axis=1) * pairing_kernel(zs)
        means.append(vals.mean() * vol)
    means = np.array(means)
    return float(pref * means.mean()), float(pref * means.std(ddof=1) / np.sqrt(scrambles))


def xor_pairing_moment(
    delta: float,
    f: TestFunction,
    k: int,
    n_samples: int,
    seed: int = 0,
    band: float = 0.2,
    workers: int = 1,
    data: XorData | None = None,
) -> MomentReport:
    """E (delta^{-1/4} int f S)^k against the continuum moment; odd k must be positive at 4 sigma."""
    if k > 4:
        raise BudgetExceeded("pairing moments implemented for k <= 4")
    if data is None:
        data = run_xor(XorRunConfig(delta, n_samples, seed=seed, workers=workers), (), [f])
    P = data.scaled_pairing(f.name)
    m, se = _mean_se(P**k)
    target, qerr = pairing_target(f, k)
    ratio = m / target
    ok = abs(ratio - 1.0) <= band
    if k % 2 == 1:
        ok = ok and m > 4 * se
    exp_m, exp_se = _mean_se(np.exp(np.abs(P)))
    return MomentReport(
        f"xor_pairing_moment_k{k}",
        m,
        se,
        data.n,
        target,
        PASS if ok else FAIL,
        f"ratio within +-{band:.0%}" + ("; positive at 4 sigma" if k % 2 else ""),
        {
            "delta": delta,
            "f": f.name,
            "k": k,
            "target_error": qerr,
            "exp_moment": exp_m,
            "exp_moment_stderr": exp_se,
        },
    )


def exponential_moment_scan(runs: dict, f_name: str, lam: float = 1.0, tol: float = 0.2) -> MomentReport:
    """E exp(lam |delta^{-1/4} int f S|) per delta: finite and stable across meshes."""
    deltas = sorted(runs, reverse=True)
    vals, ses = [], []
    for d in deltas:
        m, se = _mean_se(np.exp(lam * np.abs(runs[d].scaled_pairing(f_name))))
        vals.append(m)
        ses.append(se)
    spread = max(vals) / min(vals)
    return MomentReport(
        "exponential_moment",
        vals[-1],
        ses[-1],
        sum(runs[d].n for d in deltas),
        None,
        PASS if np.all(np.isfinite(vals)) and spread - 1 <= tol else FAIL,
        f"finite, max/min across delta within {1 + tol}",
        {"deltas": deltas, "values": vals, "stderr": ses, "lambda": lam},
    )


# -- magnetic perturbation -------------------------------------------------------------------


def magnetic_reweight(
    delta: float,
    psi: TestFunction,
    f: TestFunction,
    F: Callable[[np.ndarray], np.ndarray] = clamp,
    n_samples: int = 50_000,
    seed: int = 0,
    workers: int = 1,
    data: XorData | None = None,
) -> MomentReport:
    """E_{psi,delta} F(delta^{-1/4} int f S) by reweighting critical XOR samples with exp(delta^{-1/4} int psi S)."""
    if data is None:
        data = run_xor(XorRunConfig(delta, n_samples, seed=seed, workers=workers), (), [f] if psi.is_zero else [f, psi])
    vals = np.asarray(F(data.scaled_pairing(f.name)), dtype=float)
    logw = np.zeros(data.n) if psi.is_zero else data.scaled_pairing(psi.name)
    mean, se, e, logZ = reweighted_mean(vals, logw)
    if e < MIN_ESS:
        raise DegenerateWeights(f"effective sample size {e:.1f} < {MIN_ESS}")
    # correlated chain: inflate by the batch-means to iid ratio of the unweighted observable
    _, se_b = _mean_se(vals)
    infl = max(1.0, se_b / (vals.std(ddof=1) / np.sqrt(data.n)))
    return MomentReport(
        "magnetic_reweight",
        mean,
        se * infl,
        data.n,
        None,
        INFO,
        "",
        {"delta": delta, "psi": psi.name, "f": f.name, "ess": e, "log_Z": logZ, "Z": float(np.exp(logZ)), "unweighted_mean": float(vals.mean())},
    )


def sine_gordon_comparison(
    ising: MomentReport,
    psi: TestFunction,
    f: TestFunction,
    F: Callable[[np.ndarray], np.ndarray] = clamp,
    replicas: int = 40_000,
    seed: int = 0,
    workers: int = 1,
    band: float = 0.10,
    h: float = 1.0 / 48.0,
) -> MomentReport:
    """Ising-side reweighted expectation against the GFF sine-Gordon one at beta = gamma = 1/sqrt 2.

    The lattice pairing tends to C^2 int f (2|phi'|/Im phi)^{1/4} cos(X/sqrt 2), so both psi
    and f pick up that weight on the GFF side.
    """
    b = 1.0 / np.sqrt(2.0)
    C2 = spin_constant() ** 2
    spec = SineGordonSpec(chi_weight(psi, C2) if not psi.is_zero else psi, b, h=h)
    obs = CosineObservable(chi_weight(f, C2), b, F, "clamp")
    gff = sine_gordon_expect(spec, obs, replicas, seed, workers)
    se = float(np.hypot(ising.stderr, gff.stderr))
    diff = abs(float(np.real(ising.value)) - float(np.real(gff.value)))
    ok = diff <= 3 * se + band * abs(float(np.real(gff.value)))
    return MomentReport(
        "sine_gordon_consistency",
        ising.value,
        se,
        ising.replicas + gff.replicas,
        float(np.real(gff.value)),
        PASS if ok else FAIL,
        f"|ising - gff| <= 3 sigma + {band:.0%}",
        {"ising": ising.to_dict(), "gff": gff.to_dict()},
    )


def partition_stability(reports: Sequence[MomentReport], tol: float = 0.10) -> MomentReport:
    """Z_{psi,delta} across meshes: max/min within 1 + tol."""
    Z = [r.meta["Z"] for r in reports]
    spread = max(Z) / min(Z)
    return MomentReport(
        "partition_stability",
        spread,
        0.0,
        sum(r.replicas for r in reports),
        1.0,
        PASS if spread - 1 <= tol else FAIL,
        f"max/min Z within {1 + tol}",
        {"deltas": [r.meta["delta"] for r in reports], "Z": Z},
    )


# -- spin Onsager bound ------------------------------------------------------------------------


def onsager_tuples(n_tuples: int = 24, k_max: int = 6, radius: float = 0.5, min_gap: float = 0.12, seed: int = 0) -> list[list[complex]]:
    """Random point tuples (k = 2..k_max) in the disc of ``radius`` with separation > ``min_gap``."""
    rng = stream(seed, 13)
    out = []
    while len(out) < n_tuples:
        k = 2 + len(out) % (k_max - 1)
        r = radius * np.sqrt(rng.random(k))
        z = r * np.exp(2j * np.pi * rng.random(k))
        d = np.abs(z[:, None] - z[None, :]) + np.eye(k) * 9
        if d.min() > min_gap:
            out.append([complex(v) for v in np.round(z, 6)])
    return out


def spin_onsager_check(runs: dict, tuples: Sequence[Sequence[complex]], tol: float = 0.30) -> MomentReport:
    """delta^{-k/8} E prod sigma <= C^k prod_i (min_j |x_i - x_j|)^{-1/8} with C fitted per delta.

    Distances are between face centres.  PASS if the fitted C is finite and differs by less
    than ``tol`` between the two finest meshes.
    """
    deltas = sorted(runs, reverse=True)
    fitted = {}
    per_tuple = {}
    for d in deltas:
        data = runs[d]
        cs = []
        for t in tuples:
            cols = [data.column(p) for p in t]
            vals = np.mean([correlation_samples(data, cols, ch) for ch in (1, 2)], axis=0)
            m = float(vals.mean())
            centers = (np.floor(np.real(t) / d) + 0.5) * d + 1j * (np.floor(np.imag(t) / d) + 0.5) * d
            D = np.abs(centers[:, None] - centers[None, :]) + np.eye(len(t)) * 9
            bound_unit = np.prod(D.min(axis=1) ** -0.125)
            lhs = d ** (-len(t) / 8) * max(m, 0.0)
            cs.append((lhs / bound_unit) ** (1.0 / len(t)) if lhs > 0 else 0.0)
        fitted[d] = max(cs)
        per_tuple[d] = cs
    a, b = fitted[deltas[-2]], fitted[deltas[-1]]
    rel = abs(a - b) / max(a, b)
    ok = np.all(np.isfinite(list(fitted.values()))) and rel < tol
    return MomentReport(
        "spin_onsager",
        fitted[deltas[-1]],
        0.0,
        sum(runs[d].n for d in deltas),
        None,
        PASS if ok else FAIL,
        f"fitted C finite; relative change between the two finest meshes < {tol:.0%}",
        {"deltas": deltas, "fitted_C": [fitted[d] for d in deltas], "per_tuple_C": {str(d): per_tuple[d] for d in deltas}, "relative_change": rel},
    )
