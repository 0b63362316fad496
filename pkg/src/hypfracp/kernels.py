"""Singular kernel, Poisson kernel and normalizing constants.

With ``nu = (1 + sp)/2``, ``a = (n - 1)/2`` and ``D = -(1/sinh rho) d/drho``:

* odd ``n``:  ``K(rho) = C2 D^((n-1)/2) scrK_{nu,a}(rho)``
* even ``n``: ``K(rho) = C2 / sqrt(pi) int_rho^inf sinh r / sqrt(cosh r - cosh rho) D^(n/2) scrK_{nu,a}(r) dr``

The Poisson kernel is the same construction applied to ``scrK_{nu,a}(sqrt(r^2 + y^2))``
and multiplied by ``C4 y^sp`` instead of ``C2``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .heat import log_outer_integral
from .quadrature import gauss_jacobi
from .specfun import lgamma_fn
from .termcalc import BesselAtom, TermSum, apply_D_pow, log_eval_term_sum

__all__ = [
    "Params",
    "Constants",
    "constants",
    "kernel_K",
    "log_kernel_K",
    "poisson_kernel",
    "log_poisson_kernel",
    "poisson_kernel_dy",
    "log_weighted_kernel",
    "far_tail_integral",
]

_LOGPI = math.log(math.pi)
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class Params:
    """The triple ``(n, s, p)``; ``n >= 2``, ``0 < s < 1``, ``p > 1``."""

    n: int
    s: float
    p: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"s must lie in (0, 1), got {self.s!r}")
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got {self.p!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "p", float(self.p))

    @property
    def odd(self):
        return self.n % 2 == 1

    @property
    def m(self):
        """Number of ``D`` applications: ``(n-1)/2`` (odd) or ``n/2`` (even)."""
        return (self.n - 1) // 2 if self.odd else self.n // 2

    @property
    def nu(self):
        return 0.5 * (1.0 + self.s * self.p)

    @property
    def a(self):
        return 0.5 * (self.n - 1)

    @property
    def kappa(self):
        """``sp / 2``, the algebraic decay rate of ``K sinh^(n-1)``."""
        return 0.5 * self.s * self.p

    @property
    def gradient_required(self):
        """True when ``p <= 2/(2-s)``: the operator needs ``grad u(x) != 0``."""
        return self.p <= 2.0 / (2.0 - self.s)

    def to_dict(self):
        return {"n": self.n, "s": self.s, "p": self.p}


@dataclass(frozen=True)
class Constants:
    C1: float
    c_nsp: float
    C2: float
    C3: float
    C4: float

    def to_dict(self):
        return {"C1": self.C1, "c_nsp": self.c_nsp, "C2": self.C2, "C3": self.C3, "C4": self.C4}


def _log_constants(P):
    n, s, p = P.n, P.s, P.p
    sp = s * p
    nu = P.nu
    # log of (p/2) (sqrt(pi)/2) / Gamma((p+1)/2)
    lA = math.log(p / 2.0) + 0.5 * _LOGPI - _LOG2 - lgamma_fn(0.5 * (p + 1.0))
    lgs = lgamma_fn(-s)  # log |Gamma(-s)|
    lC1 = lA + s * (2.0 - p) * _LOG2 - lgs
    lc = lA + 2.0 * s * _LOG2 + lgamma_fn(0.5 * (n + sp)) - 0.5 * n * _LOGPI - lgs
    lC2 = nu * math.log(P.a) - 0.5 * (n - 2 + sp) * _LOG2 - lgamma_fn(0.5 * (n + sp))
    lC3 = lA + 2.0 * s * _LOG2 + lgamma_fn(0.5 * sp) - lgs
    lC4 = (-0.5 * (n - 3) * _LOG2 + nu * math.log(0.25 * (n - 1))
           - 0.5 * n * _LOGPI - lgamma_fn(0.5 * sp))
    return lC1, lc, lC2, lC3, lC4


def constants(params):
    """The five normalizing constants, evaluated in log-Gamma space.

    ``C4`` uses the exponent ``(1 + sp)/2`` on ``(n - 1)/4``; with it the
    identity ``c_nsp C2 = C3 C4`` holds and the Poisson kernel has unit mass.
    """
    return Constants(*(math.exp(v) for v in _log_constants(params)))


def _bessel_sum(P, y=0.0, shift=0):
    return apply_D_pow(TermSum(BesselAtom(P.nu + shift, P.a, float(y))), P.m)


def _log_profile(P, rho, y=0.0, shift=0):
    """log of the un-normalized kernel profile (``D^m`` sum or its outer integral)."""
    ts = _bessel_sum(P, y, shift)
    if P.odd:
        lg, sg = log_eval_term_sum(ts, rho)
        return lg, sg
    reach = 45.0 / (P.a + P.m) + 2.0
    delta = 0.5 * np.minimum(rho, 1.0)
    if y > 0:
        delta = np.minimum(delta, 0.5 * max(y, 1e-300) + 0.5 * rho)
    lv, sg = log_outer_integral(lambda r: log_eval_term_sum(ts, r), rho, reach, delta)
    return lv - 0.5 * _LOGPI, sg


def _as_rho(rho):
    r = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(~(r > 0)):
        raise ValueError("kernel requires rho > 0")
    return r


def _finish(val, rho):
    return float(val[0]) if np.ndim(rho) == 0 else val


def log_kernel_K(params, rho):
    """``log K_{n,s,p}(rho)``; finite for every ``rho > 0`` representable."""
    r = _as_rho(rho)
    lg, sg = _log_profile(params, r)
    if np.any(sg <= 0):
        raise ArithmeticError("kernel profile lost positivity (precision loss)")
    lC2 = _log_constants(params)[2]
    return _finish(lC2 + lg, rho)


def kernel_K(params, rho):
    """Singular kernel ``K_{n,s,p}(rho)`` for ``rho > 0``."""
    return _finish(np.exp(np.atleast_1d(log_kernel_K(params, rho))), rho)


def log_poisson_kernel(params, rho, y):
    """``log P(rho, y)`` for ``rho > 0``, ``y > 0``."""
    if not y > 0:
        raise ValueError("poisson kernel requires y > 0")
    r = _as_rho(rho)
    lg, sg = _log_profile(params, r, y)
    if np.any(sg <= 0):
        raise ArithmeticError("poisson profile lost positivity (precision loss)")
    lC4 = _log_constants(params)[4]
    return _finish(lC4 + params.s * params.p * math.log(y) + lg, rho)


def poisson_kernel(params, rho, y):
    """Poisson kernel ``P(rho, y)`` of the extension problem."""
    return _finish(np.exp(np.atleast_1d(log_poisson_kernel(params, rho, y))), rho)


def poisson_kernel_dy(params, rho, y):
    """``d/dy P(rho, y)``.

    ``D`` commutes with ``d/dy`` and ``d/dy scrK_{nu,a}(sqrt(rho^2 + y^2)) =
    -a y scrK_{nu+1,a}(...)``, so the derivative is
    ``(sp/y) P - a y C4 y^sp`` times the profile of order ``nu + 1``.
    """
    if not y > 0:
        raise ValueError("poisson kernel requires y > 0")
    r = _as_rho(rho)
    sp = params.s * params.p
    lC4 = _log_constants(params)[4]
    lg, sg = _log_profile(params, r, y, shift=1)
    shifted = sg * np.exp(lC4 + sp * math.log(y) + lg)
    val = (sp / y) * np.exp(np.atleast_1d(log_poisson_kernel(params, r, y))) - params.a * y * shifted
    return _finish(val, rho)


def log_weighted_kernel(params, rho, y=None):
    """``log(K(rho) sinh^(n-1) rho)`` (or with ``P(rho, y)`` when ``y`` is given)."""
    r = _as_rho(rho)
    lk = log_kernel_K(params, r) if y is None else log_poisson_kernel(params, r, y)
    lsinh = r + np.log(-np.expm1(-2.0 * r)) - _LOG2
    return np.atleast_1d(lk) + (params.n - 1) * lsinh


def far_tail_integral(params, R, y=None, nodes=24, power=0.0):
    """``int_R^inf rho^power K(rho) sinh^(n-1)(rho) drho`` (``power < sp/2``).

    ``K sinh^(n-1)`` decays like ``rho^(-1-sp/2)``; with ``w = 1/rho`` the tail is
    ``int_0^(1/R) w^(kappa - power - 1) Q(1/w) dw`` where ``Q = rho^(1+kappa) K sinh^(n-1)``
    is smooth in ``w``, integrated by Gauss-Jacobi.
    """
    kap = params.kappa - power
    if kap <= 0:
        raise ValueError("far tail diverges for power >= sp/2")
    w, wt = gauss_jacobi(nodes, 0.0, kap - 1.0, 0.0, 1.0 / R)
    rho = 1.0 / w
    lq = log_weighted_kernel(params, rho, y) + (1.0 + params.kappa) * np.log(rho)
    return float(np.sum(wt * np.exp(lq)))


