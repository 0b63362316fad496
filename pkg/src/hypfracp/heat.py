"""Heat kernels of hyperbolic space and the outer integral of even dimensions.

Odd ``n = 2m + 1``::

    p(t, rho) = (2 pi)^-m (4 pi t)^-1/2 D^m[exp(-rho^2 / 4t)] exp(-m^2 t)

Even ``n = 2m``: the ``D^(m-1)`` acting on the outer integral is moved inside
(``r exp(-r^2/4t) = 2t sinh(r) D[exp(-r^2/4t)]`` and the recurrence of the
outer integral), giving::

    p(t, rho) = t^-3/2 exp(-(2m-1)^2 t / 4) / (2 (2 pi)^(m+1/2))
                * 2t * int_rho^inf sinh r / sqrt(cosh r - cosh rho) D^m[exp(-r^2/4t)] dr.

The outer integral is computed by :func:`outer_integral`.
"""

import math

import numpy as np
from scipy.integrate import quad

from .quadrature import EvalResult, gauss_legendre
from .specfun import log_kscr
from .termcalc import GaussAtom, TermSum, apply_D_pow, log_eval_term_sum

__all__ = [
    "HeatKernelSpec",
    "outer_integral",
    "log_outer_integral",
    "heat_kernel",
    "log_heat_kernel",
    "heat_semigroup",
    "time_integral_identity",
]

_LOG2 = math.log(2.0)
_LOG2PI = math.log(2.0 * math.pi)


class HeatKernelSpec:
    """Dimension ``n`` with the parity split ``n = 2m + 1`` or ``n = 2m``."""

    def __init__(self, n):
        if int(n) != n or n < 1:
            raise ValueError("dimension must be an integer >= 1")
        self.n = int(n)
        self.odd = self.n % 2 == 1
        self.m = (self.n - 1) // 2 if self.odd else self.n // 2

    def __repr__(self):
        return f"HeatKernelSpec(n={self.n}, m={self.m}, odd={self.odd})"


def _vt_of(delta, rho):
    # scaled outer variable vt with 2 (cosh(rho + delta) - cosh rho) e^-rho = vt^2
    return np.sqrt(np.expm1(delta) + np.exp(-2.0 * rho) * np.expm1(-delta))


def _r_of(rho, vt):
    """Invert cosh r = cosh rho + e^rho vt^2 / 2 without overflow or cancellation."""
    small = rho < 1.0
    rs = np.minimum(rho, 1.0)
    r_small = 2.0 * np.arcsinh(np.sqrt(np.sinh(0.5 * rs) ** 2 + np.exp(rs) * vt ** 2 / 4.0))
    q = 0.5 * np.sqrt(np.expm1(-rho) ** 2 + vt ** 2)
    r_big = rho + 2.0 * np.log(q + np.sqrt(q ** 2 + np.exp(-rho)))
    return np.where(small, r_small, r_big)


def log_outer_integral(log_g, rho, reach, delta, nodes=12, ratio=3.0):
    """``log`` of ``int_rho^inf sinh r / sqrt(cosh r - cosh rho) g(r) dr``.

    With ``cosh r = cosh rho + v^2`` the integral becomes ``2 int_0^inf g(r(v)) dv``,
    free of the endpoint singularity. The scaled variable
    ``vt = sqrt(2) e^(-rho/2) v`` keeps large ``rho`` finite. Panels are a first
    interval covering ``r - rho <= delta`` followed by a geometric sequence up to
    ``r - rho = reach``.

    Parameters
    ----------
    log_g : callable
        ``r -> (log|g(r)|, sign g(r))`` for arrays of ``r``.
    rho : ndarray, shape (M,)
    reach : ndarray, shape (M,)
        Truncation ``r - rho`` beyond which ``g`` is negligible.
    delta : ndarray, shape (M,)
        Variation scale of ``g`` near ``r = rho``.

    Returns
    -------
    log_value, sign : ndarray
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    reach = np.broadcast_to(reach, rho.shape)
    delta = np.minimum(np.broadcast_to(delta, rho.shape), 0.5 * reach)
    v0 = _vt_of(delta, rho)
    vmax = _vt_of(reach, rho)
    k = int(max(1, np.ceil(np.max(np.log(vmax / v0)) / math.log(ratio))))
    q = (vmax / v0) ** (1.0 / k)
    br = np.concatenate([np.zeros((rho.size, 1)), v0[:, None] * q[:, None] ** np.arange(k + 1)], axis=1)
    x, w = gauss_legendre(nodes, 0.0, 1.0)
    lo, hi = br[:, :-1, None], br[:, 1:, None]
    vt = (lo + (hi - lo) * x).reshape(rho.size, -1)
    wt = ((hi - lo) * w).reshape(rho.size, -1)
    r = _r_of(rho[:, None], vt)
    lg, sg = log_g(r)
    top = np.max(lg, axis=1, keepdims=True)
    s = np.sum(wt * sg * np.exp(lg - top), axis=1)
    # 2 dv = sqrt(2) e^{rho/2} dvt
    with np.errstate(divide="ignore"):
        logv = top[:, 0] + np.log(np.abs(s)) + 0.5 * rho + 0.5 * _LOG2
    return logv, np.sign(s)


def outer_integral(log_g, rho, reach, delta, log_scale=0.0, **kw):
    """Value of :func:`log_outer_integral` times ``exp(log_scale)``."""
    lv, sg = log_outer_integral(log_g, rho, reach, delta, **kw)
    return sg * np.exp(lv + log_scale)


def _gauss_sum(t, m):
    return apply_D_pow(TermSum(GaussAtom(float(t))), m)


def _gauss_reach(rho, t, m):
    # r - rho where the Gaussian factor has dropped by e^-45 relative to rho
    b = rho / (2.0 * t) + m
    return 90.0 / (b + np.sqrt(b * b + 45.0 / t)) + 1e-3


def _log_heat_positive(spec, t, rho):
    m = spec.m
    if spec.odd:
        ts = _gauss_sum(t, m)
        lg, sg = log_eval_term_sum(ts, rho)
        return -m * _LOG2PI - 0.5 * math.log(4.0 * math.pi * t) - m * m * t + lg, sg
    ts = _gauss_sum(t, m)
    reach = _gauss_reach(rho, t, m)
    delta = 0.5 * np.minimum.reduce([rho, np.full_like(rho, math.sqrt(t)), 2.0 * t / rho, np.ones_like(rho)])
    lo, sg = log_outer_integral(lambda r: log_eval_term_sum(ts, r), rho, reach, delta)
    pref = (-1.5 * math.log(t) - (2 * m - 1) ** 2 * t / 4.0 - _LOG2 - (m + 0.5) * _LOG2PI
            + math.log(2.0 * t))
    return pref + lo, sg


def log_heat_kernel(n, t, rho):
    """``log p(t, rho)`` for ``rho > 0`` (array input)."""
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    spec = HeatKernelSpec(n)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(~(rho > 0)):
        raise ValueError("log_heat_kernel needs rho > 0; use heat_kernel for rho = 0")
    lg, sg = _log_heat_positive(spec, t, rho)
    if np.any(sg <= 0):
        raise ArithmeticError("heat kernel evaluated nonpositive; precision lost")
    return lg


def heat_kernel(n, t, rho):
    """Heat kernel ``p(t, rho)`` of ``H^n`` for ``t > 0``, ``rho >= 0``.

    ``rho = 0`` is evaluated as the limit of the even function
    ``rho -> p(t, rho)`` by Richardson extrapolation in ``rho^2`` from two small
    radii.
    """
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    rho_in = np.asarray(rho, dtype=float)
    if np.any(rho_in < 0):
        raise ValueError("heat kernel needs rho >= 0")
    rho_arr = np.atleast_1d(rho_in)
    out = np.empty_like(rho_arr)
    pos = rho_arr > 0
    if pos.any():
        out[pos] = np.exp(log_heat_kernel(n, t, rho_arr[pos]))
    if (~pos).any():
        h = 2e-3 * min(1.0, math.sqrt(t))
        v = np.exp(log_heat_kernel(n, t, np.array([h, 0.5 * h])))
        out[~pos] = (4.0 * v[1] - v[0]) / 3.0
    return float(out[0]) if rho_in.ndim == 0 else out


def _field_values(f, pts):
    if hasattr(f, "value"):
        return np.asarray(f.value(pts), dtype=float)
    if callable(f):
        return np.asarray(f(pts), dtype=float)
    return np.full(len(pts), float(f))


def heat_semigroup(f, x, t, grid):
    """``w(x, t) = int p(t, d(x, xi)) f(xi) dxi`` on a polar grid about ``x``.

    Parameters
    ----------
    f : callable, TestFunction or float
        Field evaluated on coordinate arrays of shape ``(N, n + 1)``.
    x : HyperPoint
        Must be the center of ``grid``.
    grid : PolarGrid

    Returns
    -------
    EvalResult
        ``err_estimate`` bounds the missing mass times ``sup|f|`` on the grid.
    """
    n = x.n
    if not np.allclose(grid.center.coords, x.coords):
        raise ValueError("grid must be centered at x")
    vals = _field_values(f, grid.points)
    nd = len(grid.dir_weights)
    pk = heat_kernel(n, t, grid.rho)
    kw = np.repeat(pk, nd) * grid.weights
    value = float(np.sum(kw * vals))
    mass = float(np.sum(kw))
    sup = float(np.max(np.abs(vals))) if vals.size else 0.0
    err = abs(1.0 - mass) * sup
    return EvalResult(value, err, {"mass": mass, "t": t, "nodes": int(len(vals))})


def time_integral_identity(a, s, p, rho):
    """Both sides of ``int_0^inf exp(-a^2 t - rho^2/4t) t^-(3+sp)/2 dt = 2 (2a)^nu scrK_{nu,a}(rho)``.

    The left side is integrated adaptively in ``u = log t`` around the peak of the
    integrand; ``nu = (1 + sp) / 2``.

    Returns
    -------
    (lhs, rhs) : tuple of float
    """
    if not (a > 0 and 0 < s < 1 and p > 1 and rho > 0):
        raise ValueError("time_integral_identity needs a > 0, 0 < s < 1, p > 1, rho > 0")
    nu = 0.5 * (1.0 + s * p)
    z = (rho * rho / 2.0) / (nu + math.sqrt(nu * nu + a * a * rho * rho))
    u0 = math.log(z)
    g0 = -a * a * z - rho * rho / (4.0 * z) - nu * u0

    def integrand(u):
        return math.exp(-a * a * math.exp(u) - rho * rho * math.exp(-u) / 4.0 - nu * u - g0)

    total = 0.0
    err = 0.0
    edges = u0 + np.array([-60.0, -8.0, -2.0, 0.0, 2.0, 8.0, 60.0])
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += v
        err += e
    if err > 1e-10 * abs(total):
        raise ArithmeticError(f"time integral did not converge (err {err:.2e})")
    lhs = total * math.exp(g0)
    rhs = 2.0 * (2.0 * a) ** nu * math.exp(log_kscr(nu, a, rho))
    return lhs, float(rhs)
