import numpy as np
import pytest
from scipy import stats

from imchaos.chaos.testfunctions import bump, constant
from imchaos.errors import ConfigError, GridHitsEigenangle
from imchaos.field.models import Domain
from imchaos.rmt.cue import (
    CueSpectrum,
    check_grid,
    counting,
    counting_normalizer,
    field_variance,
    field_X,
    field_Y,
    haar_spectrum,
    keating_snaith,
    log_det_direct,
    normalizer_closed_form,
    sample_cue,
)
from imchaos.rmt.cuechaos import CueChaosConfig, chaos_ratio_pair, covariance_scan, cue_pairings, finite_n_covariance, periodicity_probe
from imchaos.rng import stream

TWO_PI = 2 * np.pi


def _spectra(N, n, seed=0):
    rng = stream(seed, 0)
    return [sample_cue(N, rng) for _ in range(n)]


def test_two_point_spacing_law():
    # for N = 2 the gap phi has density sin^2(phi/2)/pi on (0, 2 pi)
    d = np.array([np.diff(s.angles)[0] for s in _spectra(2, 4000)])
    # sorting biases the gap towards the short side; a coin flip restores theta_2 - theta_1 mod 2 pi
    coin = np.random.default_rng(0).random(d.size) < 0.5
    gaps = np.where(coin, d, TWO_PI - d)
    cdf = lambda p: (p - np.sin(p)) / TWO_PI
    assert stats.kstest(gaps, cdf).pvalue > 1e-3
    # and chi^2 on ten equal-probability bins, folded with phi -> 2 pi - phi
    folded = np.minimum(gaps, TWO_PI - gaps)
    edges = np.linspace(0, np.pi, 11)
    obs = np.histogram(folded, edges)[0]
    exp = np.diff(2 * cdf(edges)) * folded.size
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_single_eigenangle_is_uniform():
    rng = np.random.default_rng(1)
    picks = [s.angles[rng.integers(s.N)] for s in _spectra(5, 3000, seed=2)]
    assert stats.kstest(np.array(picks) / TWO_PI, "uniform").pvalue > 1e-3


def test_pair_correlation_exact_kernel():
    N, reps = 256, 150
    edges = np.linspace(0.0, 12.0 / N, 13)[1:]  # skip the first bin (rounding near t = 0)
    counts = []
    for s in _spectra(N, reps, seed=3):
        d = np.mod(s.angles[None, :] - s.angles[:, None], TWO_PI)
        counts.append(np.histogram(d[d > 0], edges)[0])
    counts = np.array(counts, dtype=float)
    t = np.linspace(edges[0], edges[-1], 20001)
    with np.errstate(invalid="ignore"):
        rho = (N**2 - (np.sin(N * t / 2) / np.sin(t / 2)) ** 2) / (4 * np.pi**2)
    cum = np.concatenate([[0], np.cumsum((rho[1:] + rho[:-1]) / 2 * np.diff(t))])
    expected = TWO_PI * np.diff(np.interp(edges, t, cum))
    z = (counts.mean(0) - expected) / (counts.std(0, ddof=1) / np.sqrt(reps))
    assert np.all(np.abs(z) < 4), z


def test_trace_moments():
    N = 6
    A = np.array([[np.sum(np.exp(1j * k * s.angles)) for k in range(1, 11)] for s in _spectra(N, 4000, seed=4)])
    m = np.abs(A) ** 2
    z = (m.mean(0) - np.minimum(np.arange(1, 11), N)) / (m.std(0, ddof=1) / np.sqrt(m.shape[0]))
    assert np.all(np.abs(z) < 4.5), z


def test_haar_reference_agrees_in_variance():
    N, n = 12, 3000
    rng = np.random.default_rng(5)
    xs = np.array([field_X(haar_spectrum(N, rng), np.array([1.234]))[0] for _ in range(n)])
    xv = np.array([field_X(s, np.array([1.234]))[0] for s in _spectra(N, n, seed=6)])
    se = field_variance(N) * np.sqrt(2 / n) * 2  # heavy-ish tails of log|Z|
    assert abs(xs.var() - field_variance(N)) < 4 * se
    assert abs(xv.var() - field_variance(N)) < 4 * se


@pytest.mark.parametrize("N", [3, 40, 300])
def test_fields_match_direct_evaluation(N):
    s = sample_cue(N, 7)
    grid = (np.arange(4 * N) + 0.37) * TWO_PI / (4 * N)
    check_grid(s, grid)
    X, Y = log_det_direct(s, grid)
    assert np.allclose(field_X(s, grid), X, atol=1e-8)
    assert np.allclose(field_Y(s, grid), Y, atol=1e-8)


def test_one_eigenvalue_by_hand():
    s = CueSpectrum(1, np.array([0.0]))
    theta = np.array([0.5, 2.0, 4.0])
    assert np.allclose(field_X(s, theta), np.log(2 * np.abs(np.sin(theta / 2))))
    # arg(1 - e^{-i theta}) = (pi - theta) / 2 on (0, 2 pi)
    assert np.allclose(field_Y(s, theta), (np.pi - theta) / 2)
    with pytest.raises(GridHitsEigenangle):
        check_grid(s, np.array([TWO_PI]))
    with pytest.raises(ConfigError):
        CueSpectrum(2, np.array([0.1]))


def test_y_has_n_jumps_of_pi_and_zero_mean():
    N, m = 50, 50_000
    s = sample_cue(N, 8)
    grid = (np.arange(m) + 0.5) * TWO_PI / m
    Y = field_Y(s, grid)
    step = np.diff(Y) + N / 2 * (TWO_PI / m)
    jumps = np.abs(step) > 1e-9
    assert np.allclose(step[jumps], np.pi)
    assert jumps.sum() == counting(s, grid[-1:])[0] - counting(s, grid[:1])[0] == N
    assert abs(Y.mean()) < N * TWO_PI / m


def test_closed_form_moments():
    for N in (1, 5, 30):
        assert keating_snaith(N, t=2).real == pytest.approx(N + 1, rel=1e-12)
        assert keating_snaith(N, t=4).real == pytest.approx((N + 1) * (N + 2) ** 2 * (N + 3) / 12, rel=1e-10)
    # E e^{i s Y} at N = 1: Y = (pi - u)/2 with u uniform, so E = sin(s pi/2)/(s pi/2)
    s = 0.7
    assert keating_snaith(1, s=s).real == pytest.approx(np.sin(s * np.pi / 2) / (s * np.pi / 2), rel=1e-12)


def test_x_normalizer_is_complex_and_matches_monte_carlo():
    N, beta = 64, 0.8
    f = bump(1.0, 0.8, domain=Domain.CIRCLE)
    data = cue_pairings(CueChaosConfig(N, 400, seed=9), [beta], [f], ["X"])
    r = chaos_ratio_pair("X", N, beta, f, 400, data=data)
    nu, se = r.meta["normalizer"], r.meta["normalizer_stderr"]
    closed = normalizer_closed_form("X", N, beta)
    assert abs(closed.imag) > 0.05 * abs(closed)
    assert abs(nu - closed) < 4 * se


def test_small_beta_pairing_is_integral_of_f():
    f = bump(1.0, 0.8, domain=Domain.CIRCLE)
    data = cue_pairings(CueChaosConfig(16, 80, seed=1), [1e-9], [f, constant(1.0)], ["X", "Y"])
    from scipy.integrate import quad

    integral = quad(lambda t: f(np.array([t]))[0], 0.2, 1.8)[0]
    assert np.allclose(data.P[:, :, 0, 0], integral, rtol=1e-3)
    assert np.allclose(data.P[:, :, 0, 1], TWO_PI, rtol=1e-7)


def test_counting_normalizer_monte_carlo():
    N, beta = 8, 0.5
    theta = np.array([0.7, 3.0])
    K = np.array([counting(s, theta) for s in _spectra(N, 20_000, seed=10)])
    e = np.exp(1j * np.pi * beta * K)
    exact = counting_normalizer(N, beta, theta)
    se = e.std(0, ddof=1) / np.sqrt(e.shape[0])
    assert np.all(np.abs(e.mean(0) - exact) < 4 * se)
    assert counting_normalizer(N, beta, 0.0)[0] == pytest.approx(1.0)
    assert counting_normalizer(N, beta, TWO_PI)[0] == pytest.approx(np.exp(1j * np.pi * beta * N))


def test_counting_part_is_two_periodic():
    rows = periodicity_probe(16, [0.5, 1.0], 100, bump(1.0, 0.8, domain=Domain.CIRCLE), seed=2)
    for row in rows:
        assert row["counting_periodic"]
    assert rows[1]["unit_values_only"]


def test_covariance_converges():
    assert finite_n_covariance(4, 0.0)[0] == pytest.approx(field_variance(4), rel=1e-12)
    assert covariance_scan([8, 32, 128], 0.5, 1500, seed=3).passed
