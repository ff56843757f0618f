import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from imchaos.chaos.testfunctions import bump, zero
from imchaos.errors import ConfigError, InsufficientSamples, PointsTooClose
from imchaos.field.models import Domain
from imchaos.ising.chi import chi_correlation, chi_small, spin_constant, zeta_prime_minus_one
from imchaos.ising.lattice import FREE, SpinLattice, decode_snapshot, encode_snapshot, xor_field
from imchaos.ising.samplers import Chain, check_delta, exact_gibbs, gibbs_gate
from imchaos.ising.xor import XorRunConfig, boundary_positivity, magnetic_reweight, rotation_orbit, run_xor


def test_spin_constant_against_mpmath():
    mpmath.mp.dps = 30
    zp = mpmath.zeta(-1, derivative=1)
    assert zeta_prime_minus_one() == pytest.approx(float(zp), abs=1e-13)
    c = mpmath.mpf(2) ** (mpmath.mpf(5) / 48) * mpmath.exp(mpmath.mpf(3) / 2 * zp)
    assert spin_constant() == pytest.approx(float(c), rel=1e-13)


def _chi_sympy(points):
    """Upper half-plane formula evaluated symbolically, then to 30 digits."""
    zs = [sp.nsimplify(complex(p).real) + sp.I * sp.nsimplify(complex(p).imag) for p in points]
    phi = [sp.I * (1 - z) / (1 + z) for z in zs]
    dphi = [-2 * sp.I / (1 + z) ** 2 for z in zs]
    zp = sp.Float(str(mpmath.zeta(-1, derivative=1)), 30)
    C = 2 ** sp.Rational(5, 48) * sp.exp(sp.Rational(3, 2) * zp)
    w = sp.Mul(*[(sp.Abs(d) / (2 * sp.im(p))) ** sp.Rational(1, 8) for p, d in zip(phi, dphi)])
    n = len(points)
    if n == 1:
        s = 2
    else:
        q = sp.Abs(phi[0] - phi[1]) / sp.Abs(phi[0] - sp.conjugate(phi[1]))
        s = 2 * (sp.sqrt(q) + 1 / sp.sqrt(q))
    return float(sp.N(C**n * w * sp.sqrt(2 ** sp.Rational(-n, 2) * s), 30))


@pytest.mark.parametrize("points", [[0.0], [0.3 - 0.2j], [0.3, -0.3], [0.1 + 0.5j, -0.4 - 0.1j]])
def test_chi_matches_symbolic(points):
    assert chi_correlation(points) == pytest.approx(_chi_sympy(points), rel=1e-10)
    assert chi_small(points) == pytest.approx(_chi_sympy(points), rel=1e-10)


def test_chi_one_point_closed_form():
    z = 0.4 + 0.3j
    assert chi_correlation([z]) == pytest.approx(spin_constant() * 2**0.25 * (1 - abs(z) ** 2) ** -0.125, rel=1e-12)


disc_pt = st.tuples(st.floats(0, 0.85), st.floats(0, 2 * np.pi)).map(lambda t: t[0] * np.exp(1j * t[1]))


def _separated(z, gap=0.05):
    z = np.asarray(z)
    d = np.abs(z[:, None] - z[None, :]) + np.eye(z.size)
    return d.min() > gap


@settings(max_examples=40, deadline=None)
@given(st.lists(disc_pt, min_size=2, max_size=5), st.floats(0, 2 * np.pi), st.randoms())
def test_chi_rotation_and_relabelling_invariant(z, angle, rnd):
    if not _separated(z):
        return
    base = chi_correlation(z)
    assert chi_correlation(np.asarray(z) * np.exp(1j * angle)) == pytest.approx(base, rel=1e-9)
    perm = list(z)
    rnd.shuffle(perm)
    assert chi_correlation(perm) == pytest.approx(base, rel=1e-12)
    # the reflection z -> conj z is also a disc automorphism
    assert chi_correlation(np.conj(z)) == pytest.approx(base, rel=1e-9)


def test_chi_errors():
    with pytest.raises(PointsTooClose):
        chi_correlation([0.1, 0.105])
    with pytest.raises(PointsTooClose):
        chi_correlation([0.995])
    with pytest.raises(ConfigError):
        chi_correlation(0.8 * np.exp(2j * np.pi * np.arange(21) / 21))
    with pytest.raises(ConfigError):
        chi_small([0.1, 0.2, 0.3])


def test_snapshot_roundtrip():
    lat = SpinLattice.disc(1 / 16)
    Chain(lat, seed=3).sweep(5)
    back = decode_snapshot(encode_snapshot(lat))
    assert np.array_equal(back.kind, lat.kind)
    assert np.array_equal(back.spins, lat.spins)
    assert back.delta == lat.delta
    with pytest.raises(ConfigError):
        decode_snapshot(b"NOPE" + encode_snapshot(lat)[4:])


def test_boundary_is_pinned_and_spins_are_signs():
    lat = SpinLattice.disc(1 / 16)
    Chain(lat, seed=1).sweep(20)
    assert np.all(lat.spins[lat.kind != FREE] == 1)
    assert set(np.unique(lat.spins[lat.kind == FREE])) <= {-1, 1}
    other = lat.copy()
    Chain(other, seed=2).sweep(3)
    x = xor_field(lat, other)
    assert set(np.unique(x)) <= {-1, 1}


def test_same_seed_same_chain():
    a, b, c = SpinLattice.disc(1 / 16), SpinLattice.disc(1 / 16), SpinLattice.disc(1 / 16)
    Chain(a, seed=7).sweep(10)
    Chain(b, seed=7).sweep(10)
    Chain(c, seed=8).sweep(10)
    assert np.array_equal(a.spins, b.spins)
    assert not np.array_equal(a.spins, c.spins)


def test_infinite_temperature_wolff_cluster_is_one_face():
    lat = SpinLattice.disc(1 / 16)
    ch = Chain(lat, beta=0.0, seed=0)
    assert all(abs(ch.wolff_step()) == 1 for _ in range(200))


def test_exact_gibbs_single_face():
    # one free face with four + neighbours: P(+)/P(-) = e^{8 beta}
    p = exact_gibbs(SpinLattice.from_mask(np.ones((1, 1), bool)), 0.3)
    assert p[0] / p[1] == pytest.approx(np.exp(8 * 0.3))


@pytest.mark.parametrize("sampler", ["wolff", "sw"])
def test_gibbs_gate_small_box(sampler):
    g = gibbs_gate(np.ones((2, 2), bool), n_steps=400_000, n_batches=40, seed=5, sampler=sampler)
    assert g.exact.sum() == pytest.approx(1.0)
    assert g.passed, g.max_z


def test_mesh_range():
    check_delta(1 / 16)
    check_delta(1 / 256)
    with pytest.raises(ConfigError):
        check_delta(1 / 8)
    with pytest.raises(ConfigError):
        check_delta(1 / 512)


@pytest.fixture(scope="module")
def small_run():
    f = bump(0.0, 0.5)
    pts = [p[0] for p in rotation_orbit([0.3])]
    return run_xor(XorRunConfig(1 / 16, 2000, seed=11), pts, [f]), f


def test_xor_run_records(small_run):
    data, f = small_run
    assert data.n == 2000
    assert set(np.unique(data.spins1 * data.spins2)) <= {-1, 1}
    assert data.pairings.shape == (2000, 1)
    with pytest.raises(ConfigError):
        data.column(0.77)
    with pytest.raises(InsufficientSamples):
        run_xor(XorRunConfig(1 / 16, 10))


def test_zero_magnetic_field_is_plain_mean(small_run):
    data, f = small_run
    r = magnetic_reweight(1 / 16, zero(Domain.UNIT_DISC), f, data=data)
    assert r.value == pytest.approx(r.meta["unweighted_mean"], rel=1e-12)
    assert r.meta["ess"] == pytest.approx(data.n)


def test_plus_boundary_positivity(small_run):
    data, _ = small_run
    assert boundary_positivity(data).passed
