import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imchaos.errors import CoincidentPoints, ConfigError, OutsideDomain
from imchaos.field.grids import circle_grid, disc_grid, square_grid
from imchaos.field.io import (
    chaos_csv,
    decode_field,
    encode_field,
    field_csv,
    read_spectrum_csv,
    spectrum_csv,
)
from imchaos.field.models import circle, covariance, unit_disc, unit_square
from imchaos.field.samplers import sample_circle_field, sample_disc_gff, sample_square_gff
from imchaos.field.schemes import ApproxScheme, SchemeKind
from imchaos.field.standard import check_standard_approximation


def test_disc_covariance_at_centre():
    assert covariance(unit_disc(), 0.0, 0.4) == pytest.approx(np.log(1 / 0.4), abs=1e-14)


def test_circle_antipodal_covariance():
    assert covariance(circle(), 0.0, np.pi) == pytest.approx(-np.log(2.0), abs=1e-14)


def test_disc_covariance_closed_form():
    x, y = 0.3, -0.4
    assert covariance(unit_disc(), x, y) == pytest.approx(np.log(abs((1 - x * y) / (x - y))), abs=1e-13)


def test_covariance_errors():
    with pytest.raises(CoincidentPoints):
        covariance(unit_disc(), 0.2j, 0.2j)
    with pytest.raises(OutsideDomain):
        covariance(unit_disc(), 0.0, 1.2)
    with pytest.raises(OutsideDomain):
        covariance(unit_square(), 0.5 + 0.5j, 1.5 + 0.5j)


interior = st.tuples(st.floats(0.05, 0.95), st.floats(0.05, 0.95)).map(lambda t: complex(*t))


@settings(max_examples=50, deadline=None)
@given(interior, interior)
def test_square_covariance_symmetric(x, y):
    if abs(x - y) < 1e-3:
        return
    m = unit_square()
    assert covariance(m, x, y) == pytest.approx(covariance(m, y, x), rel=1e-10, abs=1e-10)


def _square_green_series(x: complex, y: complex, kmax: int = 400) -> float:
    """2 pi G(x, y) with the vertical direction summed in closed form (x, y at different heights)."""
    k = np.arange(1, kmax + 1)
    lo, hi = min(x.imag, y.imag), max(x.imag, y.imag)
    a = k * np.pi
    # 1-d Dirichlet Green's function of -d^2 + a^2, written to avoid overflow
    gk = (np.exp(-a * (hi - lo)) - np.exp(-a * (hi + lo)) - np.exp(-a * (2 - hi - lo)) + np.exp(-a * (2 - hi + lo))) / (
        2 * a * (1 - np.exp(-2 * a))
    )
    g = np.sum(2 * np.sin(a * x.real) * np.sin(a * y.real) * gk)
    return float(2 * np.pi * g)


@pytest.mark.parametrize("x,y", [(0.3 + 0.4j, 0.6 + 0.7j), (0.1 + 0.5j, 0.9 + 0.45j), (0.5 + 0.2j, 0.52 + 0.25j)])
def test_square_green_function_matches_eigen_series(x, y):
    assert covariance(unit_square(), x, y) == pytest.approx(_square_green_series(x, y), abs=1e-9)


def test_square_single_mode_variance():
    r = sample_square_gff(1, square_grid(1), 0)
    assert r.variance_profile[0] == pytest.approx(2 / np.pi**2, rel=1e-12)


def test_circle_variance_profile_is_harmonic_sum():
    r = sample_circle_field(64, circle_grid(128), 0)
    assert np.allclose(r.variance_profile, np.sum(1.0 / np.arange(1, 65)))


def test_circle_field_variance_monte_carlo():
    g = circle_grid(8)
    x = np.array([sample_circle_field(16, g, s).values[0] for s in range(4000)])
    target = np.sum(1.0 / np.arange(1, 17))
    se = target * np.sqrt(2 / x.size)
    assert abs(x.var() - target) < 4 * se


def test_standard_approximation_circle_fourier():
    r = check_standard_approximation(circle(), [ApproxScheme.fourier(n) for n in (16, 64, 256)], circle_grid(64).points)
    assert r.all_ok


def test_standard_approximation_square_kl():
    r = check_standard_approximation(unit_square(), [ApproxScheme.kl(n) for n in (16, 64, 256)], square_grid(12, 0.25, 0.75).points)
    assert r.all_ok


def test_standard_approximation_needs_three_schemes():
    with pytest.raises(ConfigError):
        check_standard_approximation(circle(), [ApproxScheme.fourier(16), ApproxScheme.fourier(64)], circle_grid(8).points)


# -- containers -------------------------------------------------------------------------


def _roundtrip(r):
    back = decode_field(encode_field(r))
    assert back.grid.domain is r.grid.domain
    assert np.array_equal(back.grid.coords, r.grid.coords)
    assert np.array_equal(back.values, np.real(r.values))
    assert np.array_equal(back.variance_profile, r.variance_profile)
    assert back.scheme.kind is r.scheme.kind
    assert back.seed == r.seed
    return back


def test_imcf_roundtrip_circle():
    _roundtrip(sample_circle_field(32, circle_grid(64), 7))


def test_imcf_roundtrip_square():
    _roundtrip(sample_square_gff(8, square_grid(16), 3))


def test_imcf_roundtrip_disc():
    _roundtrip(sample_disc_gff(disc_grid(0.2, 0.9), 5, eps=0.1))


def test_imcf_roundtrip_cue():
    from imchaos.rmt.cue import as_realization, eval_fields, sample_cue

    spec = sample_cue(16, 2)
    grid = (np.arange(64) + 0.5) * 2 * np.pi / 64
    back = _roundtrip(as_realization(eval_fields(spec, grid), "Y", seed=2))
    assert back.scheme.kind is SchemeKind.CUE


def test_imcf_rejects_garbage():
    with pytest.raises(ConfigError):
        decode_field(b"XXXX" + bytes(40))
    r = sample_circle_field(4, circle_grid(8), 0)
    with pytest.raises(ConfigError):
        decode_field(encode_field(r)[:-8])


def test_csv_headers():
    r = sample_square_gff(4, square_grid(4), 0)
    assert field_csv(r).splitlines()[0] == "x,y,value,variance"
    g = circle_grid(4)
    assert chaos_csv(g, np.ones(4, complex)).splitlines()[0] == "x,re,im,modulus"
    a = np.array([0.1, 1.0, 3.0])
    assert np.array_equal(read_spectrum_csv(spectrum_csv(a)), a)
