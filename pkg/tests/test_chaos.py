import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imchaos.chaos.chaos import build_chaos, chaos_values, check_beta, cosine_pair, pair, quadrature_weights
from imchaos.chaos.montecarlo import circle_pairings
from imchaos.chaos.sinegordon import clamp, ess, reweighted_mean
from imchaos.chaos.testfunctions import bump, constant
from imchaos.chaos.universality import CosineSeries, universality_pair, universality_scan
from imchaos.errors import BetaOutOfRange, NotEven, NotMeanZero
from imchaos.field.grids import circle_grid, disc_grid
from imchaos.field.models import Domain
from imchaos.field.samplers import sample_circle_field, sample_disc_gff
from imchaos.field.schemes import ApproxScheme
from imchaos.moments.identity import truncated_second_moment


def test_beta_range_enforced():
    with pytest.raises(BetaOutOfRange):
        check_beta(1.0, 1)
    with pytest.raises(BetaOutOfRange):
        check_beta(1.5, 2)
    check_beta(1.5, 1, force=True)


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 50), st.floats(0, 10), st.floats(0.01, 1.4))
def test_chaos_modulus(x, var, beta):
    v = chaos_values(np.array([x]), np.array([var]), beta)
    assert abs(v[0]) == pytest.approx(np.exp(0.5 * beta**2 * var), rel=1e-12)


def test_small_beta_pairing_is_integral_of_f():
    r = sample_circle_field(64, circle_grid(256), 1)
    c = build_chaos(r, 1e-9)
    assert pair(c, constant(1.0)) == pytest.approx(2 * np.pi, rel=1e-8)
    f = bump(0.0, 0.5)
    d = sample_disc_gff(disc_grid(1 / 16, 0.9), 0, eps=0.1)
    integral = float(np.sum(quadrature_weights(d.grid, f)).real)
    assert pair(build_chaos(d, 1e-9), f) == pytest.approx(integral, rel=1e-8)
    # int over the disc of the radial bump, by 1-d quadrature
    from scipy.integrate import quad

    radial = quad(lambda r: 2 * np.pi * r * np.exp(1 - 1 / (1 - r**2 / 0.25)), 0, 0.5)[0]
    assert integral == pytest.approx(radial, rel=2e-2)


def test_cosine_pair_is_real_part():
    r = sample_circle_field(64, circle_grid(256), 3)
    c = build_chaos(r, 0.6)
    f = constant(1.0)
    assert cosine_pair(c, f) == pytest.approx(pair(c, f).real, rel=1e-12)


def test_mean_pairing_is_integral_of_f():
    P = circle_pairings([ApproxScheme.fourier(64)], circle_grid(256), 0.7, [constant(1.0)], 4000, seed=5)[:, 0, 0, 0]
    se = P.std(ddof=1) / np.sqrt(P.size)
    assert abs(P.mean() - 2 * np.pi) < 4 * se


def test_second_moment_matches_quadrature_small():
    beta, n = 0.7, 32
    P = circle_pairings([ApproxScheme.fourier(n)], circle_grid(256), beta, [constant(1.0)], 8000, seed=9)[:, 0, 0, 0]
    a = np.abs(P) ** 2
    exact = truncated_second_moment(constant(1.0), beta, n)
    assert abs(a.mean() - exact) < 4 * a.std(ddof=1) / np.sqrt(a.size)


def test_truncated_second_moment_increases_with_n():
    v = [truncated_second_moment(constant(1.0), 0.7, n) for n in (8, 32, 128)]
    assert v[0] < v[1] < v[2]


def test_cosine_series_validation():
    with pytest.raises(NotMeanZero):
        CosineSeries({1: 1.0}, mean=0.5).validate()
    with pytest.raises(NotMeanZero):
        CosineSeries({0: 1.0, 1: 1.0}).validate()
    with pytest.raises(NotEven):
        CosineSeries({1: 1.0}, sin={1: 0.3}).validate()


def test_square_wave_first_harmonic():
    assert CosineSeries.square_wave().a == pytest.approx(4 / np.pi)


def test_first_harmonic_is_the_cosine():
    r = sample_circle_field(128, circle_grid(512), 4)
    f = bump(1.0, 0.8, domain=Domain.CIRCLE)
    u = universality_pair(r, CosineSeries.harmonic(1), 0.5, f)
    assert u.value == pytest.approx(u.reference, rel=1e-12)
    assert u.value == pytest.approx(cosine_pair(build_chaos(r, 0.5), f), rel=1e-10)


def test_universality_gap_shrinks():
    r = universality_scan(CosineSeries.square_wave(), 0.5, bump(1.0, 0.8, domain=Domain.CIRCLE), (16, 64, 256), replicas=200, grid_points=2048, seed=1)
    assert r.passed, r.meta


def test_reweighting_with_zero_weights_is_plain_mean():
    v = np.random.default_rng(0).normal(size=500)
    m, se, e, logZ = reweighted_mean(v, np.zeros(500))
    assert m == pytest.approx(v.mean())
    assert e == pytest.approx(500)
    assert logZ == pytest.approx(0.0, abs=1e-12)
    assert ess(np.ones(10)) == pytest.approx(10)


def test_clamp():
    assert np.array_equal(clamp(np.array([-3.0, 0.2, 5.0])), np.array([-1.0, 0.2, 1.0]))
