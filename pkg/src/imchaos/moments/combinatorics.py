"""Matching inequality, nearest-neighbour integral and nearest-neighbour graph counts."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from imchaos.errors import SizeMismatch, VarianceBlowup
from imchaos.reports import FAIL, PASS, MomentReport
from imchaos.rng import stream

# -- greedy matching bound --------------------------------------------------------------


def greedy_matching(x, y) -> list[tuple[int, int]]:
    """Closest remaining pair first; returns (x index, y index) in matching order."""
    x = np.asarray(x)
    y = np.asarray(y)
    if y.size > x.size:
        raise SizeMismatch("need at least as many x points as y points")
    D = np.abs(x[:, None] - y[None, :]).astype(float)
    out = []
    for _ in range(y.size):
        j, k = np.unravel_index(np.argmin(D), D.shape)
        out.append((int(j), int(k)))
        D[j, :] = np.inf
        D[:, k] = np.inf
    return out


def _log_pairs(z) -> float:
    z = np.asarray(z)
    if z.size < 2:
        return 0.0
    iu = np.triu_indices(z.size, 1)
    return float(np.sum(np.log(np.abs(z[:, None] - z[None, :])[iu])))


def matching_lhs(x, y, beta: float) -> float:
    """prod |x_j - x_k| prod |y_j - y_k| / prod |x_j - y_k|, all to the power beta^2."""
    x = np.asarray(x)
    y = np.asarray(y)
    cross = np.sum(np.log(np.abs(x[:, None] - y[None, :])))
    return float(np.exp(beta**2 * (_log_pairs(x) + _log_pairs(y) - cross)))


def matching_constant(a: int, b: int, beta: float, diam: float = 2.0) -> float:
    """Constant from the greedy-matching argument.

    2^{beta^2 (a - 1) b} from the triangle inequalities, times diam^{beta^2 C(a - b, 2)}
    for the unmatched x points.
    """
    return 2.0 ** (beta**2 * (a - 1) * b) * diam ** (beta**2 * (a - b) * (a - b - 1) / 2)


def matching_rhs(x, y, beta: float, constant: float) -> float:
    x = np.asarray(x)
    y = np.asarray(y)
    D = np.abs(x[:, None] - y[None, :])
    tot = 0.0
    for f in itertools.permutations(range(x.size), y.size):
        tot += np.prod(D[list(f), np.arange(y.size)] ** (-(beta**2)))
    return float(constant * tot)


@dataclass
class MatchingCheck:
    lhs: float
    rhs: float
    matching: list

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def matching_bound_check(x_list, y_list, beta: float, diam: float = 2.0) -> MatchingCheck:
    x = np.asarray(x_list)
    y = np.asarray(y_list)
    if y.size > x.size:
        raise SizeMismatch("the matching bound needs len(x) >= len(y)")
    if y.size < 1:
        raise SizeMismatch("need b >= 1")
    C = matching_constant(x.size, y.size, beta, diam)
    return MatchingCheck(matching_lhs(x, y, beta), matching_rhs(x, y, beta, C), greedy_matching(x, y))


def matching_batch(a: int, b: int, beta: float, trials: int, seed: int = 0, clustered: bool = False) -> MomentReport:
    """Random points in the unit disc; ``clustered`` plants near-coincident x-y pairs."""
    rng = stream(seed, 11)
    worst = 0.0
    bad = 0
    for _ in range(trials):
        r = np.sqrt(rng.random(a + b))
        z = r * np.exp(2j * np.pi * rng.random(a + b))
        x, y = z[:a], z[a:]
        if clustered:
            m = min(2, b)
            y[:m] = x[:m] + 10.0 ** rng.uniform(-6, -2, m) * np.exp(2j * np.pi * rng.random(m))
            y[:m] *= np.minimum(1.0, 0.999 / np.abs(y[:m]))
        c = matching_bound_check(x, y, beta)
        worst = max(worst, c.lhs / c.rhs)
        bad += not c.ok
    return MomentReport(
        "matching_bound",
        worst,
        0.0,
        trials,
        1.0,
        PASS if bad == 0 else FAIL,
        "max LHS/RHS <= 1",
        {"a": a, "b": b, "beta": beta, "violations": bad, "clustered": clustered},
    )


# -- nearest-neighbour integral ----------------------------------------------------------


def ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _uniform_ball(rng, shape, d):
    if d == 1:
        return 2.0 * rng.random(shape) - 1.0
    r = np.sqrt(rng.random(shape))
    return r * np.exp(2j * np.pi * rng.random(shape))


def nn_log_integrand(x: np.ndarray, beta: float) -> np.ndarray:
    """log of prod_j (min_k |x_j - x_k| / 2)^{-beta^2/2}; rows are configurations."""
    n = x.shape[1]
    if n < 2:
        return np.zeros(x.shape[0])
    D = np.abs(x[:, :, None] - x[:, None, :])
    D[:, np.arange(n), np.arange(n)] = np.inf
    return -0.5 * beta**2 * np.sum(np.log(0.5 * D.min(axis=2)), axis=1)


def nn_integral_radial(beta: float, d: int) -> float:
    """N = 2 exactly: int int (|x1 - x2| / 2)^{-beta^2} over the ball squared, by overlap."""
    from scipy.integrate import quad

    s = beta**2
    if d == 1:
        v, _ = quad(lambda r: 2.0 * (2.0 - r), 0.0, 2.0, weight="alg", wvar=(-s, 0.0))
    else:
        def overlap(r):
            return 2.0 * np.arccos(r / 2) - 0.5 * r * np.sqrt(4.0 - r * r)

        v, _ = quad(lambda r: 2.0 * np.pi * overlap(r), 0.0, 2.0, weight="alg", wvar=(1.0 - s, 0.0))
    return float(2.0**s * v)


def nn_integral_estimate(N: int, beta: float, d: int, mc_points: int = 2**18, seed: int = 0, mix: float = 0.3, chunk: int = 2**15):
    """Importance-sampled estimate with a uniform / close-pair mixture proposal.

    The pair component draws one point uniformly and a partner at offset u with density
    proportional to |u|^{-beta^2} on |u| < 2, which tames the pair collision singularity.
    Returns (value, stderr).
    """
    if d not in (1, 2):
        raise ValueError("d must be 1 or 2")
    V = ball_volume(d)
    if N == 1:
        return V, 0.0
    s = beta**2
    norm = (d - s) / (_sphere_area(d) * 2.0 ** (d - s))
    pairs = np.array(list(itertools.combinations(range(N), 2)))
    rng = stream(seed, 13, N)
    sums = np.zeros(2)
    done = 0
    while done < mc_points:
        m = min(chunk, mc_points - done)
        x = _uniform_ball(rng, (m, N), d)
        use_pair = rng.random(m) >= mix
        pick = pairs[rng.integers(0, len(pairs), m)]
        rad = 2.0 * rng.random(m) ** (1.0 / (d - s))
        if d == 1:
            u = rad * np.where(rng.random(m) < 0.5, -1.0, 1.0)
        else:
            u = rad * np.exp(2j * np.pi * rng.random(m))
        rows = np.nonzero(use_pair)[0]
        x[rows, pick[rows, 1]] = x[rows, pick[rows, 0]] + u[rows]
        inside = np.all(np.abs(x) < 1.0, axis=1)
        # proposal density relative to the uniform one, V^{-N}
        sep = np.abs(x[:, pairs[:, 1]] - x[:, pairs[:, 0]])
        with np.errstate(divide="ignore"):
            pd = np.where(sep < 2.0, norm * sep ** (-s), 0.0)
        q = mix + (1.0 - mix) * V * pd.mean(axis=1)
        w = np.zeros(m)
        w[inside] = np.exp(nn_log_integrand(x[inside], beta)) / q[inside] * V**N
        sums += [w.sum(), (w * w).sum()]
        done += m
    mean = sums[0] / mc_points
    var = max(sums[1] / mc_points - mean**2, 0.0)
    return float(mean), float(np.sqrt(var / mc_points))


def nn_integral_bound(Ns, beta: float, d: int = 2, mc_points: int = 2**18, seed: int = 0, stability: float = 3.0) -> MomentReport:
    """Fit c_N = (I_N / N^{N beta^2 / 2d})^{1/N}; PASS if max/min over N < ``stability``."""
    Ns = list(Ns)
    if max(Ns) > 10:
        raise ValueError("N <= 10")
    vals, errs, cs = [], [], []
    for N in Ns:
        v, e = nn_integral_estimate(N, beta, d, mc_points, seed)
        if v > 0 and e / v > 0.3:
            raise VarianceBlowup(f"relative stderr {e / v:.2f} at N={N}")
        vals.append(v)
        errs.append(e)
        cs.append((v / N ** (N * beta**2 / (2 * d))) ** (1.0 / N))
    cs = np.array(cs)
    c = float(cs.max())
    bound_ok = all(v <= c**N * N ** (N * beta**2 / (2 * d)) * (1 + 1e-12) for v, N in zip(vals, Ns))
    ratio = float(cs.max() / cs.min())
    return MomentReport(
        "nn_integral_bound",
        ratio,
        0.0,
        mc_points,
        None,
        PASS if ratio < stability and bound_ok else FAIL,
        f"max/min fitted c < {stability}",
        {"N": Ns, "beta": beta, "d": d, "integrals": vals, "stderr": errs, "fitted_c": cs, "batch_c": c},
    )


# -- nearest-neighbour graphs ------------------------------------------------------------


def nn_graph_bound(N: int, k: int) -> int:
    """Labelled graphs with k components, each a 2-cycle with rooted trees hanging off."""
    if k < 1 or 2 * k > N:
        return 0
    num = math.factorial(N) * 2 * k * N ** (N - 2 * k - 1) if N > 2 * k else math.factorial(N) * 2 * k
    den = 2**k * math.factorial(k) * math.factorial(N - 2 * k)
    # N^{-1} when N = 2k: N! 2k N^{-1} / (2^k k!) stays an integer
    if N == 2 * k:
        return num // (N * den)
    return num // den


def _cycle_structure(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max cycle length and number of cycles for each row of a batch of functions."""
    m, N = F.shape
    rows = np.arange(m)[:, None]
    # after N steps every vertex sits on its cycle
    c = np.tile(np.arange(N), (m, 1))
    for _ in range(N):
        c = F[rows, c]
    on_cycle = np.zeros((m, N), dtype=bool)
    on_cycle[rows, c] = True
    length = np.zeros((m, N), dtype=int)
    z = np.tile(np.arange(N), (m, 1))
    cur = F[rows, z]
    for step in range(1, N + 1):
        hit = (cur == z) & (length == 0) & on_cycle
        length[hit] = step
        cur = F[rows, cur]
    ncyc = np.zeros(m, dtype=int)
    maxlen = length.max(axis=1)
    for L in range(1, N + 1):
        ncyc += (length == L).sum(axis=1) // L
    return maxlen, ncyc


def enumerate_nn_shapes(N: int) -> dict[int, int]:
    """Brute force over all fixed-point-free maps whose cycles all have length two."""
    counts: dict[int, int] = {}
    allF = np.array(list(itertools.product(range(N), repeat=N)), dtype=np.int64)
    allF = allF[np.all(allF != np.arange(N), axis=1)]
    maxlen, ncyc = _cycle_structure(allF)
    for k in np.unique(ncyc[maxlen == 2]):
        counts[int(k)] = int(np.sum((maxlen == 2) & (ncyc == k)))
    return counts


@dataclass
class GraphCensus:
    N: int
    configs: int
    long_cycles: int
    observed: dict
    bound: dict

    def report(self) -> MomentReport:
        ok = self.long_cycles == 0 and all(self.observed[k] <= self.bound.get(k, 0) for k in self.observed)
        return MomentReport(
            "nn_graph_census",
            float(self.long_cycles),
            0.0,
            self.configs,
            0.0,
            PASS if ok else FAIL,
            "no cycle of length >= 3; distinct graphs per k within the count bound",
            {"N": self.N, "observed_shapes": self.observed, "bound": self.bound},
        )


def nn_graph_census(N: int, n_configs: int, seed: int = 0, chunk: int = 100_000) -> GraphCensus:
    """Nearest-neighbour maps of uniform points in the unit disc."""
    if not 2 <= N <= 7:
        raise ValueError("census runs for 2 <= N <= 7")
    rng = stream(seed, 17, N)
    seen: dict[int, set] = {}
    long_cycles = 0
    weights = N ** np.arange(N)
    done = 0
    while done < n_configs:
        m = min(chunk, n_configs - done)
        x = _uniform_ball(rng, (m, N), 2)
        D = np.abs(x[:, :, None] - x[:, None, :])
        D[:, np.arange(N), np.arange(N)] = np.inf
        F = D.argmin(axis=2)
        maxlen, ncyc = _cycle_structure(F)
        long_cycles += int(np.sum(maxlen >= 3))
        codes = F @ weights
        for k in np.unique(ncyc):
            seen.setdefault(int(k), set()).update(np.unique(codes[ncyc == k]).tolist())
        done += m
    if long_cycles:
        raise AssertionError(f"{long_cycles} nearest-neighbour cycles of length >= 3")
    observed = {k: len(v) for k, v in sorted(seen.items())}
    bound = {k: nn_graph_bound(N, k) for k in range(1, N // 2 + 1)}
    return GraphCensus(N, n_configs, long_cycles, observed, bound)


__all__ = [
    "greedy_matching",
    "matching_bound_check",
    "matching_batch",
    "nn_integral_radial",
    "nn_integral_estimate",
    "nn_integral_bound",
    "nn_graph_bound",
    "enumerate_nn_shapes",
    "nn_graph_census",
]
