"""Cluster Monte Carlo for the + boundary Ising model on lattice faces.

Both samplers treat the pinned boundary as one ghost site: a Wolff cluster that
would bond to it is frozen, and Swendsen-Wang never flips clusters joined to it.
The kernels draw from a per-chain xorshift64* state (one uint64), seeded from the
Philox streams, so chains are reproducible and independent of each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numba as nb
import numpy as np

from imchaos.errors import ConfigError
from imchaos.ising.lattice import BETA_C, BOUNDARY, FREE, SpinLattice
from imchaos.rng import stream

# thermalization: THERM_FACTOR * faces^THERM_POWER Wolff steps, then BURN_IN_SWEEPS sweeps
THERM_FACTOR = 10.0
THERM_POWER = 0.6
BURN_IN_SWEEPS = 50


def bond_probability(beta: float) -> float:
    return float(-np.expm1(-2.0 * beta))


@nb.njit(cache=True, inline="always")
def _uniform(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return np.float64((x * np.uint64(0x2545F4914F6CDD1D)) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def new_state(rng: np.random.Generator) -> np.ndarray:
    return rng.integers(1, 2**63, size=1, dtype=np.uint64)


@nb.njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@nb.njit(cache=True)
def _wolff(spins, kind, free, H, p, mark, stamp, stack, members, rs):
    """One pinned-boundary Wolff update; returns the cluster size, negative if frozen."""
    seed = free[min(int(_uniform(rs) * free.size), free.size - 1)]
    s = spins[seed]
    mark[seed] = stamp
    stack[0] = seed
    members[0] = seed
    top = 1
    size = 1
    while top > 0:
        top -= 1
        a = stack[top]
        for k in range(4):
            if k == 0:
                b = a + H
            elif k == 1:
                b = a - H
            elif k == 2:
                b = a + 1
            else:
                b = a - 1
            if mark[b] == stamp or spins[b] != s:
                continue
            if _uniform(rs) < p:
                if kind[b] == BOUNDARY:
                    return -size
                mark[b] = stamp
                stack[top] = b
                top += 1
                members[size] = b
                size += 1
    for i in range(size):
        spins[members[i]] = -s
    return size


@nb.njit(cache=True)
def _wolff_steps(spins, kind, free, H, p, n_steps, mark, stamp0, rs):
    stack = np.empty(free.size, np.int64)
    members = np.empty(free.size, np.int64)
    tot = 0
    for t in range(n_steps):
        tot += abs(_wolff(spins, kind, free, H, p, mark, stamp0 + t, stack, members, rs))
    return tot


@nb.njit(cache=True)
def _sw_sweep(spins, kind, ea, eb, free, p, parent, flip, rs):
    """One Swendsen-Wang sweep.  On return ``parent`` holds the FK clusters (ghost = last index)."""
    ghost = spins.size
    for i in range(ghost + 1):
        parent[i] = ghost if (i < ghost and kind[i] == BOUNDARY) else i
    for e in range(ea.size):
        a = ea[e]
        b = eb[e]
        if spins[a] == spins[b] and _uniform(rs) < p:
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                if ra == ghost:
                    parent[rb] = ghost
                elif rb == ghost:
                    parent[ra] = ghost
                elif ra < rb:
                    parent[rb] = ra
                else:
                    parent[ra] = rb
    for i in range(free.size):
        flip[free[i]] = -1
    for i in range(free.size):
        a = free[i]
        r = _find(parent, a)
        if r == ghost:
            continue
        if flip[r] < 0:
            flip[r] = 1 if _uniform(rs) < 0.5 else 0
        if flip[r] == 1:
            spins[a] = -spins[a]


@nb.njit(cache=True)
def _label(parent, a):
    r = _find(parent, a)
    return -1 if r == parent.size - 1 else r


@nb.njit(cache=True)
def _xor_run(sp1, sp2, kind, ea, eb, free, p, n_samples, spacing, pts, supp, wts, rs1, rs2):
    """Two independent chains in lockstep, sampled every ``spacing`` sweeps.

    Records spins and FK labels (-1 = joined to the boundary) at ``pts`` and the
    pairings sum_s wts[m, s] S[supp[s]] of the XOR field; ``mag`` sums both chains' spins.
    """
    k = pts.size
    m = wts.shape[0]
    s1 = np.empty((n_samples, k), np.int8)
    s2 = np.empty((n_samples, k), np.int8)
    l1 = np.empty((n_samples, k), np.int64)
    l2 = np.empty((n_samples, k), np.int64)
    pair = np.zeros((n_samples, m))
    mag = np.zeros(sp1.size, np.int64)
    par1 = np.empty(sp1.size + 1, np.int32)
    par2 = np.empty(sp1.size + 1, np.int32)
    flip = np.empty(sp1.size, np.int8)
    for t in range(n_samples):
        for _ in range(spacing):
            _sw_sweep(sp1, kind, ea, eb, free, p, par1, flip, rs1)
            _sw_sweep(sp2, kind, ea, eb, free, p, par2, flip, rs2)
        for j in range(k):
            s1[t, j] = sp1[pts[j]]
            s2[t, j] = sp2[pts[j]]
            l1[t, j] = _label(par1, pts[j])
            l2[t, j] = _label(par2, pts[j])
        for q in range(m):
            acc = 0.0
            for s in range(supp.size):
                c = supp[s]
                acc += wts[q, s] * (sp1[c] * sp2[c])
            pair[t, q] = acc
        for i in range(free.size):
            mag[free[i]] += sp1[free[i]] + sp2[free[i]]
    return s1, s2, l1, l2, pair, mag


@nb.njit(cache=True)
def _state_histogram(spins, kind, ea, eb, free, H, p, n_steps, n_batches, use_wolff, mark, rs):
    """Visit counts of the 2^|free| states per batch, for the exact Gibbs gate."""
    nf = free.size
    counts = np.zeros((n_batches, 1 << nf), np.int64)
    per = n_steps // n_batches
    stack = np.empty(nf, np.int64)
    members = np.empty(nf, np.int64)
    parent = np.empty(spins.size + 1, np.int32)
    flip = np.empty(spins.size, np.int8)
    stamp = 1
    for bt in range(n_batches):
        for _ in range(per):
            if use_wolff:
                _wolff(spins, kind, free, H, p, mark, stamp, stack, members, rs)
                stamp += 1
            else:
                _sw_sweep(spins, kind, ea, eb, free, p, parent, flip, rs)
            code = 0
            for i in range(nf):
                if spins[free[i]] < 0:
                    code |= 1 << i
            counts[bt, code] += 1
    return counts


class Chain:
    """A single Markov chain on a lattice: Wolff steps and Swendsen-Wang sweeps."""

    def __init__(self, lattice: SpinLattice, beta: float = BETA_C, seed: int | np.random.Generator = 0):
        if beta < 0:
            raise ConfigError("inverse temperature must be non-negative")
        self.lattice = lattice
        self.beta = beta
        self.p = bond_probability(beta)
        self._spins = lattice.spins.ravel()  # a view: updates land in the lattice
        self._kind = lattice.kind.ravel()
        self._free = np.flatnonzero(self._kind == FREE).astype(np.int64)
        self._ea, self._eb = lattice.edges()
        self._H = lattice.shape[1]
        self._mark = np.zeros(self._spins.size, np.int64)
        self._stamp = 1
        self._parent = np.empty(self._spins.size + 1, np.int32)
        self._flip = np.empty(self._spins.size, np.int8)
        self._rs = new_state(seed if isinstance(seed, np.random.Generator) else stream(int(seed), 11))

    def wolff_step(self) -> int:
        """One cluster update; the returned size is negative when the cluster was frozen."""
        st = np.empty(self._free.size, np.int64)
        mem = np.empty(self._free.size, np.int64)
        size = _wolff(self._spins, self._kind, self._free, self._H, self.p, self._mark, self._stamp, st, mem, self._rs)
        self._stamp += 1
        return int(size)

    def wolff_steps(self, n: int) -> float:
        """Mean cluster size over ``n`` steps."""
        tot = _wolff_steps(self._spins, self._kind, self._free, self._H, self.p, n, self._mark, self._stamp, self._rs)
        self._stamp += n
        return tot / max(n, 1)

    def sweep(self, n: int = 1) -> None:
        for _ in range(n):
            _sw_sweep(self._spins, self._kind, self._ea, self._eb, self._free, self.p, self._parent, self._flip, self._rs)

    def thermalize(self) -> None:
        self.wolff_steps(thermalization_steps(self._free.size))
        self.sweep(BURN_IN_SWEEPS)


def wolff_step(lattice: SpinLattice, beta_inv_temp: float, rng: np.random.Generator) -> int:
    """One pinned-boundary Wolff update of ``lattice`` in place; returns the cluster size.

    A cluster that bonds to a boundary face is left unflipped (size reported as negative).
    """
    return Chain(lattice, beta_inv_temp, rng).wolff_step()


def thermalization_steps(faces: int) -> int:
    return int(np.ceil(THERM_FACTOR * faces**THERM_POWER))


def sample_critical(delta: float, n_sweeps: int, n_samples: int, seed: int) -> Iterator[SpinLattice]:
    """Yield ``n_samples`` + boundary critical configurations on the disc, ``n_sweeps`` sweeps apart."""
    check_delta(delta)
    lat = SpinLattice.disc(delta)
    chain = Chain(lat, BETA_C, seed)
    chain.thermalize()
    for _ in range(n_samples):
        chain.sweep(n_sweeps)
        yield lat.copy()


def check_delta(delta: float) -> None:
    if not 1.0 / 256 - 1e-12 <= delta <= 1.0 / 16 + 1e-12:
        raise ConfigError("mesh must lie in [1/256, 1/16]")


# -- exact Gibbs gate ------------------------------------------------------------


def exact_gibbs(lattice: SpinLattice, beta: float) -> np.ndarray:
    """Probabilities of the 2^|free| states, indexed by the bitmask of -1 spins (free-face order)."""
    kind = lattice.kind.ravel()
    free = np.flatnonzero(kind == FREE)
    nf = free.size
    if nf > 16:
        raise ConfigError("exact enumeration limited to 16 faces")
    ea, eb = lattice.edges()
    pos = {int(c): i for i, c in enumerate(free)}
    codes = np.arange(1 << nf)
    bits = (codes[:, None] >> np.arange(nf)[None, :]) & 1
    sf = 1 - 2 * bits  # states x faces
    energy = np.zeros(codes.size)
    for a, b in zip(ea, eb):
        sa = sf[:, pos[a]] if a in pos else 1
        sb = sf[:, pos[b]] if b in pos else 1
        energy = energy + sa * sb
    w = np.exp(beta * (energy - energy.max()))
    return w / w.sum()


@dataclass
class GibbsGate:
    exact: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    max_z: float
    sampler: str

    @property
    def passed(self) -> bool:
        return self.max_z < 4.0


def gibbs_gate(mask: np.ndarray, beta: float = BETA_C, n_steps: int = 10**7, n_batches: int = 100, seed: int = 0, sampler: str = "wolff") -> GibbsGate:
    """Empirical state frequencies of a chain against exact enumeration (batch-means z-scores)."""
    if sampler not in ("wolff", "sw"):
        raise ConfigError(f"unknown sampler {sampler!r}")
    lat = SpinLattice.from_mask(mask)
    chain = Chain(lat, beta, seed)
    counts = _state_histogram(
        chain._spins, chain._kind, chain._ea, chain._eb, chain._free, chain._H, chain.p,
        n_steps, n_batches, sampler == "wolff", chain._mark, chain._rs,
    )
    freq = counts / counts.sum(axis=1, keepdims=True)
    emp = freq.mean(axis=0)
    se = freq.std(axis=0, ddof=1) / np.sqrt(n_batches)
    ex = exact_gibbs(lat, beta)
    # rarely visited states have batch stderr 0; floor it with the binomial error
    z = np.abs(emp - ex) / np.sqrt(se**2 + ex * (1 - ex) / n_steps)
    return GibbsGate(ex, emp, se, float(z.max()), sampler)
