import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from hypfracp.specfun import bessel_k, bessel_ke, gamma_fn, gamma_sign, kscr, lgamma_fn, log_bessel_k

# frozen oracles (mpmath, 30 digits)
K_HALF_AT_1 = 0.461068504447894558
KSCR_15_2_3 = 2.84762193396379804e-4


@pytest.mark.parametrize("x, expected", [
    (0.5, math.sqrt(math.pi)),
    (2.0, 1.0),
    (-0.5, -2.0 * math.sqrt(math.pi)),
    (5.0, 24.0),
    (-1.5, 4.0 * math.sqrt(math.pi) / 3.0),
])
def test_gamma_values(x, expected):
    assert gamma_fn(x) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_gamma_poles(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


@given(st.floats(0.05, 40.0))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=1e-12)


@given(st.floats(-20.0, 60.0).filter(lambda v: abs(v - round(v)) > 1e-3 or v > 0.5))
def test_lgamma_matches_math(x):
    assert lgamma_fn(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-12)
    assert gamma_sign(x) == math.copysign(1.0, math.gamma(x)) if x < 170 else True


def test_bessel_half_integer_closed_form():
    assert bessel_k(0.5, 1.0) == pytest.approx(K_HALF_AT_1, rel=1e-13)
    x = np.geomspace(0.01, 60.0, 50)
    assert np.allclose(bessel_k(0.5, x), np.sqrt(np.pi / (2 * x)) * np.exp(-x), rtol=1e-12, atol=0)


def test_bessel_small_argument_limit():
    # x K_1(x) -> 1
    assert 1e-6 * bessel_k(1.0, 1e-6) == pytest.approx(1.0, rel=1e-9)


def test_bessel_recurrence_example():
    lhs = bessel_k(2.3, 2.0) - bessel_k(0.3, 2.0)
    assert lhs == pytest.approx(1.3 * bessel_k(1.3, 2.0), rel=1e-12)


def test_bessel_recurrence_grid():
    nu = np.linspace(0.5, 5.0, 19)[:, None]
    x = np.geomspace(0.05, 30.0, 23)[None, :]
    lhs = bessel_k(nu + 1, x) - bessel_k(nu - 1, x)
    rhs = 2 * nu / x * bessel_k(nu, x)
    assert np.max(np.abs(lhs / rhs - 1)) < 1e-9


@given(st.floats(-6.0, 6.0), st.floats(1e-3, 200.0))
def test_bessel_matches_scipy(nu, x):
    assert bessel_ke(nu, x) == pytest.approx(special.kve(nu, x), rel=1e-11)


@given(st.floats(0.0, 8.0), st.floats(1e-3, 50.0))
def test_bessel_symmetry(nu, x):
    assert bessel_k(-nu, x) == bessel_k(nu, x)


def test_bessel_monotonicity():
    x = np.geomspace(1e-3, 80.0, 400)
    for nu in (0.0, 0.4, 1.0, 2.7):
        v = bessel_k(nu, x)
        assert np.all(v > 0) and np.all(np.diff(v) < 0)
    nus = np.linspace(0, 6, 25)
    for x0 in (0.1, 1.0, 10.0):
        assert np.all(np.diff([bessel_k(v, x0) for v in nus]) >= 0)


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.5])
def test_bessel_asymptotic_envelopes(nu):
    small = 0.5 * math.gamma(nu) * (1e-4 / 2) ** -nu
    assert bessel_k(nu, 1e-4) == pytest.approx(small, rel=0.01)
    large = math.sqrt(math.pi / 100.0) * math.exp(-50.0)
    assert bessel_k(nu, 50.0) == pytest.approx(large, rel=0.01)


def test_log_bessel_no_underflow():
    assert log_bessel_k(1.0, 1e4) == pytest.approx(math.log(special.kve(1.0, 1e4)) - 1e4, rel=1e-13)


def test_bessel_domain():
    with pytest.raises(ValueError):
        bessel_k(1.0, 0.0)
    with pytest.raises(ValueError):
        bessel_k(1.0, -2.0)


def test_kscr_examples():
    assert kscr(0.5, 1.0, 1.0) == pytest.approx(K_HALF_AT_1, rel=1e-13)
    assert kscr(1.5, 2.0, 3.0) == pytest.approx(KSCR_15_2_3, rel=1e-12)
    nu, a, rho = 1.2, 0.8, 1e-5
    lead = 2 ** (nu - 1) * math.gamma(nu) * a ** -nu * rho ** (-2 * nu)
    assert kscr(nu, a, rho) == pytest.approx(lead, rel=1e-6)
    with pytest.raises(ValueError):
        kscr(1.0, 1.0, 0.0)


def test_bessel_against_mpmath_high_precision():
    mpmath.mp.dps = 30
    for nu, x in [(0.75, 0.05), (2.3, 0.5), (3.5, 20.0), (1.0, 29.9), (1.0, 30.1)]:
        assert bessel_k(nu, x) == pytest.approx(float(mpmath.besselk(nu, x)), rel=1e-12)
