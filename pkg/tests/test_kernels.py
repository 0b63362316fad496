import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from hypfracp.geometry import sphere_area
from hypfracp.heat import log_heat_kernel
from hypfracp.kernels import (
    Params,
    constants,
    far_tail_integral,
    kernel_K,
    log_kernel_K,
    log_weighted_kernel,
    poisson_kernel,
    poisson_kernel_dy,
)
from hypfracp.specfun import kscr

params = st.builds(Params, st.integers(2, 6), st.floats(0.05, 0.95), st.floats(1.05, 4.0))
GRID = [Params(n, s, p) for n in (2, 3, 4) for s in (0.3, 0.6, 0.9) for p in (1.5, 2.0, 3.0)]


def test_params_validation():
    for bad in [(1, 0.5, 2.0), (3, 0.0, 2.0), (3, 1.0, 2.0), (3, 0.5, 1.0), (2.5, 0.5, 2.0)]:
        with pytest.raises(ValueError):
            Params(*bad)
    P = Params(3, 0.5, 2.0)
    assert (P.nu, P.a, P.m, P.odd) == (1.0, 1.0, 1, True)
    assert Params(2, 0.5, 1.3).gradient_required and not Params(2, 0.5, 1.5).gradient_required


def test_constants_examples():
    c = constants(Params(3, 0.5, 2.0))
    assert c.c_nsp == pytest.approx(1.0 / math.pi ** 2, rel=1e-13)
    for s in (0.2, 0.5, 0.8):
        assert constants(Params(2, s, 2.0)).C1 == pytest.approx(s / math.gamma(1 - s), rel=1e-13)


@given(params)
def test_constants_identity(P):
    c = constants(P)
    assert all(v > 0 for v in c.to_dict().values())
    assert c.c_nsp * c.C2 == pytest.approx(c.C3 * c.C4, rel=1e-12)
    assert c.C3 / (2 ** (P.s * P.p) * math.gamma(0.5 * P.s * P.p)) == pytest.approx(c.C1, rel=1e-12)


@given(st.floats(0.05, 0.95), st.floats(1.05, 4.0), st.floats(1e-3, 30.0))
def test_n3_closed_form(s, p, rho):
    P = Params(3, s, p)
    ref = constants(P).C2 * rho / math.sinh(rho) * kscr(0.5 * (3 + s * p), 1.0, rho)
    assert kernel_K(P, rho) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("s, p", [(0.5, 2.0), (0.3, 3.0), (0.8, 1.5)])
def test_kernel_equals_time_integral_of_heat_kernel(n, s, p):
    # c_nsp K(rho) = C1 int_0^inf p(t, rho) t^(-1-sp/2) dt
    P = Params(n, s, p)
    c = constants(P)
    kap = 0.5 * s * p
    for rho in (0.3, 2.0):
        f = lambda u: math.exp(float(log_heat_kernel(n, math.exp(u), np.array([rho]))[0]) - kap * u)
        v = sum(quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
                for a, b in ((-12, -3), (-3, 0), (0, 3), (3, 7)))
        assert c.C1 * v == pytest.approx(c.c_nsp * kernel_K(P, rho), rel=1e-8)


def test_positive_and_decreasing_on_grid():
    rho = np.geomspace(1e-3, 25.0, 150)
    for P in GRID:
        lk = log_kernel_K(P, rho)
        assert np.all(np.isfinite(lk)) and np.all(np.diff(lk) < 0)
        lp = np.log(poisson_kernel(P, rho, 0.5))
        assert np.all(np.isfinite(lp))


def test_small_rho_slope():
    r = np.geomspace(1e-3, 1e-2, 20)
    for P in GRID:
        slope = np.polyfit(np.log(r), log_kernel_K(P, r), 1)[0]
        assert slope == pytest.approx(-(P.n + P.s * P.p), abs=0.05)


def test_tail_compensation_converges_with_first_correction():
    # for n = 3, K rho^(1+sp/2) e^(2 rho) = const * (1 + (4 mu^2 - 1) / (8 rho) + O(rho^-2)), mu = (3+sp)/2
    P = Params(3, 0.6, 2.0)
    mu = 0.5 * (3 + 1.2)
    R = np.array([15.0, 25.0, 60.0, 120.0])
    comp = np.exp(log_kernel_K(P, R) + (1 + 0.6) * np.log(R) + 2 * R)
    corrected = comp / (1 + (4 * mu ** 2 - 1) / (8 * R))
    assert np.ptp(corrected) / corrected.mean() < 0.01
    assert np.ptp(comp[2:]) / comp[2:].mean() < 0.05


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("y", [0.1, 1.0])
def test_poisson_mass(n, y):
    P = Params(n, 0.5, 2.0)
    f = lambda r: math.exp(float(log_weighted_kernel(P, np.array([r]), y)[0]))
    pieces = [(1e-12, y), (y, 1.0), (1.0, 5.0), (5.0, 40.0)]
    total = sum(quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0] for a, b in pieces)
    total += far_tail_integral(P, 40.0, y=y)
    assert sphere_area(n) * total == pytest.approx(1.0, abs=1e-6)


def test_poisson_limits():
    P = Params(3, 0.5, 2.0)
    c = constants(P)
    rho = 0.8
    # P vanishes like y^sp as y -> 0
    vals = np.array([poisson_kernel(P, rho, y) for y in (1e-2, 1e-3, 1e-4, 1e-5)])
    assert np.allclose(vals[1:] / vals[:-1], 10.0 ** -1.0, rtol=1e-3)
    ratio = poisson_kernel(P, rho, 1e-5) / 1e-5 ** 1.0
    assert ratio == pytest.approx(c.C4 / c.C2 * kernel_K(P, rho), rel=1e-6)
    with pytest.raises(ValueError):
        poisson_kernel(P, rho, 0.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_poisson_dy_matches_finite_difference(n):
    P = Params(n, 0.4, 2.5)
    rho = np.array([0.05, 0.6, 3.0])
    y, h = 0.3, 1e-4
    fd = (poisson_kernel(P, rho, y + h) - poisson_kernel(P, rho, y - h)) / (2 * h)
    assert np.allclose(poisson_kernel_dy(P, rho, y), fd, rtol=1e-6)


def test_far_tail_integral():
    P = Params(2, 0.6, 2.0)
    f = lambda r: math.exp(float(log_weighted_kernel(P, np.array([r]))[0]))
    direct = quad(f, 10.0, 60.0, epsabs=0, epsrel=1e-12)[0] + far_tail_integral(P, 60.0)
    assert far_tail_integral(P, 10.0) == pytest.approx(direct, rel=1e-9)
    with pytest.raises(ValueError):
        far_tail_integral(P, 10.0, power=1.0)


def test_domain_errors():
    P = Params(3, 0.5, 2.0)
    with pytest.raises(ValueError):
        kernel_K(P, 0.0)
    with pytest.raises(ValueError):
        kernel_K(P, np.array([1.0, -1.0]))
