import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from imchaos.chaos.testfunctions import constant
from imchaos.errors import ChargeConfigInvalid, InsufficientTail, SizeMismatch
from imchaos.field.models import circle
from imchaos.moments.combinatorics import (
    enumerate_nn_shapes,
    greedy_matching,
    matching_bound_check,
    nn_graph_bound,
    nn_graph_census,
    nn_integral_estimate,
    nn_integral_radial,
)
from imchaos.moments.critical import sphere_area
from imchaos.moments.fits import theil_sen
from imchaos.moments.growth import qmc_vs_exact
from imchaos.moments.onsager import ChargeConfig, onsager_batch, onsager_check_gff_global
from imchaos.moments.qmc import permanent
from imchaos.moments.quadrature import circle_limit_constant, circle_power_integral
from imchaos.moments.tails import tail_exponent


def test_nn_graph_count_n4_k1():
    assert nn_graph_bound(4, 1) == 48
    assert enumerate_nn_shapes(4) == {1: 48, 2: 3}


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_nn_graph_bound_formula(N):
    for k in range(1, N // 2 + 1):
        expected = math.factorial(N) * 2 * k * N ** (N - 2 * k - 1) / (2**k * math.factorial(k) * math.factorial(N - 2 * k))
        assert nn_graph_bound(N, k) == pytest.approx(expected)
        assert enumerate_nn_shapes(N).get(k, 0) <= nn_graph_bound(N, k)


def test_census_small():
    c = nn_graph_census(5, 20_000, seed=1)
    assert c.long_cycles == 0
    assert c.report().passed


def test_nn_integral_two_points_against_radial():
    v, se = nn_integral_estimate(2, 1.0, 2, mc_points=2**17, seed=3)
    assert abs(v - nn_integral_radial(1.0, 2)) < 3 * se


def test_nn_integral_one_point_is_ball_volume():
    v, _ = nn_integral_estimate(1, 0.9, 2, mc_points=1000, seed=0)
    assert v == pytest.approx(np.pi)


def test_greedy_matching_pairs_closest_first():
    x = np.array([0.0, 1.0, 5.0])
    y = np.array([0.9, 5.2])
    assert greedy_matching(x, y) == [(1, 0), (2, 1)]
    with pytest.raises(SizeMismatch):
        greedy_matching(y, x)


pts = st.lists(st.complex_numbers(max_magnitude=0.95, allow_nan=False, allow_infinity=False), min_size=2, max_size=6, unique=True)


@settings(max_examples=60, deadline=None)
@given(pts, pts, st.floats(0.2, 1.3))
def test_matching_bound(x, y, beta):
    x, y = np.array(x), np.array(y)
    if y.size > x.size:
        x, y = y, x
    gaps = np.abs(np.concatenate([x, y])[:, None] - np.concatenate([x, y])[None, :])
    if np.min(gaps + np.eye(gaps.shape[0])) < 1e-3:
        return
    m = matching_bound_check(x, y, beta)
    assert m.lhs <= m.rhs * (1 + 1e-9)


def test_onsager_global_constants_hold():
    b = onsager_batch("gff_global", n_configs=300, n_max=16, seed=2)
    r = b.report()
    assert r.meta["pseudo_hyperbolic_violations"] == 0
    assert r.meta["euclidean_violations"] == 0


def test_onsager_rejects_bad_charges():
    with pytest.raises(ChargeConfigInvalid):
        ChargeConfig(np.array([0.1, 0.2]), np.array([1, 2]))
    with pytest.raises(ChargeConfigInvalid):
        ChargeConfig(np.array([0.1, 0.2]), np.array([1]))


def test_onsager_dipole():
    m = onsager_check_gff_global(ChargeConfig(np.array([0.1 + 0j, -0.1 + 0j]), np.array([1, -1])), metric="pseudo_hyperbolic")
    assert m.lhs <= m.rhs + 1e-12


def test_circle_power_integral_closed_form():
    s = 0.5
    exact = 4 * np.pi**2 * gamma(1 - s) / gamma(1 - s / 2) ** 2
    assert circle_power_integral(constant(1.0), constant(1.0), s).real == pytest.approx(exact, rel=1e-8)
    assert 2 * np.pi * circle_limit_constant(s) == pytest.approx(exact, rel=1e-12)


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * np.pi)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.integers(0, 1000))
def test_permanent_brute_force(n, seed):
    A = np.random.default_rng(seed).random((n, n))
    brute = sum(np.prod([A[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n)))
    assert permanent(A) == pytest.approx(brute, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-5, 5))
def test_theil_sen_exact_line(a, b):
    x = np.arange(10.0)
    assert theil_sen(x, a * x + b).slope == pytest.approx(a, abs=1e-9)


def test_tail_exponent_of_gaussian_modulus():
    rng = np.random.default_rng(4)
    z = (rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)) / np.sqrt(2)
    # P(|z| > t) = exp(-t^2): exponent 2
    assert tail_exponent(z).exponent == pytest.approx(2.0, abs=0.1)
    with pytest.raises(InsufficientTail):
        tail_exponent(z[:1000])


def test_qmc_moment_agrees_with_quadrature():
    r = qmc_vs_exact(circle(), constant(1.0), 0.6, 1, n_points=2**12, scrambles=8)
    assert r.passed, r.meta
