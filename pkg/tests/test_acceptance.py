"""Acceptance criteria 1-12 at full resolution.

Each criterion prints one PASS/FAIL line with its measured worst case and
wall time. The lines are repeated in the terminal summary.
"""

import mpmath
import pytest

from hypfracp.acceptance import CHECKS, check_bessel

from conftest import record_acceptance


def mpmath_bessel_oracle(nu, x):
    """``K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`` by tanh-sinh quadrature at 30 digits."""
    with mpmath.workdps(30):
        nu, x = mpmath.mpf(nu), mpmath.mpf(x)
        top = mpmath.acosh(1 + (40 + 60 * nu) / x) + 5
        f = lambda t: mpmath.exp(-x * (mpmath.cosh(t) - 1)) * mpmath.cosh(nu * t)
        return float(mpmath.quad(f, [0, top / 4, top / 2, top]) * mpmath.exp(-x))


@pytest.mark.parametrize("check", CHECKS, ids=[f"{c.number:02d}" for c in CHECKS])
def test_criterion(check):
    if check is check_bessel:
        result = check(oracle=mpmath_bessel_oracle)
    else:
        result = check()
    record_acceptance(result)
    assert result.passed, result.line()
