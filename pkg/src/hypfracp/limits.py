"""The limit ``s -> 1``: kernel moments, ``gamma_p`` and the convergence sweep.

The moments are

    tail_integral(R)        = c_nsp int_R^inf K(rho) sinh^(n-1) rho drho
    moment_integral(R, b)   = c_nsp int_0^R rho^(p+b) K(rho) sinh^(n-1) rho drho

As ``s -> 1`` the first tends to 0, the second to
``Gamma((p+n)/2) / (pi^((n-1)/2) Gamma((p+1)/2))`` for ``b = 0`` and to 0 for ``b > 0``.
Limits in ``s`` are extrapolated with the model ``L + A (1-s) + B (1-s)^2``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import radial_rule, sphere_area
from .heat import log_outer_integral
from .kernels import Params, constants, far_tail_integral, log_weighted_kernel
from .operator import classical_plap, frac_plap
from .quadrature import QuadratureSpec, gauss_jacobi, panel_rule
from .specfun import lgamma_fn, log_bessel_k

__all__ = [
    "SweepRecord",
    "tail_integral",
    "moment_integral",
    "moment_limit",
    "gamma_p",
    "gamma_p_quadrature",
    "ratio_lemma_check",
    "ratio_lemma_limit",
    "extrapolate_s",
    "sweep_s",
    "sweep_limit",
]


@dataclass
class SweepRecord:
    """One point of an ``s``-sweep."""

    s: float
    value_fractional: float
    value_classical: float
    gap: float
    err: float

    def __post_init__(self):
        self.err = abs(float(self.err))

    def to_dict(self):
        return asdict(self)


def tail_integral(params, R, quad=None):
    """``c_nsp int_R^inf K(rho) sinh^(n-1)(rho) drho``."""
    if not R > 0:
        raise ValueError("tail_integral needs R > 0")
    quad = quad or QuadratureSpec()
    c = constants(params)
    total = 0.0
    if R < quad.rho_max:
        k = max(1, int(math.ceil((quad.rho_max - R) / quad.unit_panel)))
        x, w = panel_rule(np.linspace(R, quad.rho_max, k + 1), quad.nodes)
        total += float(np.sum(w * np.exp(log_weighted_kernel(params, x))))
        total += far_tail_integral(params, quad.rho_max, nodes=quad.tail_nodes)
    else:
        total += far_tail_integral(params, R, nodes=quad.tail_nodes)
    return c.c_nsp * total


def moment_integral(params, R, beta=0.0, quad=None):
    """``c_nsp int_0^R rho^(p+beta) K(rho) sinh^(n-1)(rho) drho``.

    Below ``rho_min`` the integrand ``rho^(e-1) (h0 + h2 rho^2)``, ``e = p(1-s) + beta``,
    is integrated in closed form from a fit at ``rho_min`` and ``2 rho_min``.
    """
    if not R > 0:
        raise ValueError("moment_integral needs R > 0")
    if beta < 0:
        raise ValueError("moment_integral needs beta >= 0")
    quad = quad or QuadratureSpec()
    c = constants(params)
    power = params.p + beta
    e = power - params.s * params.p
    r1 = min(quad.rho_min, 0.25 * R)
    x, w, _ = radial_rule(R, r1, quad.nodes, quad.unit_panel)
    keep = x >= r1
    lk = log_weighted_kernel(params, np.concatenate([x[keep], [r1, 2.0 * r1]]))
    vals = np.exp(lk + power * np.log(np.concatenate([x[keep], [r1, 2.0 * r1]])))
    main = float(np.sum(w[keep] * vals[:-2]))
    q = vals[-2:] * np.array([r1, 2.0 * r1]) ** (1.0 - e)
    h2 = (q[1] - q[0]) / (3.0 * r1 * r1)
    h0 = q[0] - h2 * r1 * r1
    near = h0 * r1 ** e / e + h2 * r1 ** (e + 2.0) / (e + 2.0)
    return c.c_nsp * (main + near)


def moment_limit(n, p):
    """``Gamma((p+n)/2) / (pi^((n-1)/2) Gamma((p+1)/2))``, the ``s -> 1`` limit for ``beta = 0``."""
    return math.exp(lgamma_fn(0.5 * (p + n)) - 0.5 * (n - 1) * math.log(math.pi) - lgamma_fn(0.5 * (p + 1)))


def gamma_p(n, p):
    """``int_{S^(n-1)} |omega_n|^(p-2) omega_1^2 d omega = pi^((n-1)/2) Gamma((p-1)/2) / Gamma((p+n)/2)``."""
    if n < 2 or not p > 1:
        raise ValueError("gamma_p needs n >= 2 and p > 1")
    return math.exp(0.5 * (n - 1) * math.log(math.pi) + lgamma_fn(0.5 * (p - 1)) - lgamma_fn(0.5 * (p + n)))


def gamma_p_quadrature(n, p, nodes=40):
    """The sphere integral of :func:`gamma_p` reduced to
    ``2 |S^(n-2)| / (n-1) int_0^1 t^(p-2) (1-t^2)^((n-1)/2) dt`` and integrated by Gauss-Jacobi."""
    lam = 0.5 * (n - 1)
    t, w = gauss_jacobi(nodes, lam, p - 2.0, 0.0, 1.0)
    return 2.0 * sphere_area(n - 1) / (n - 1) * float(np.sum(w * (1.0 + t) ** lam))


def ratio_lemma_limit(nu):
    """``sqrt(pi/2) Gamma(nu + 1/2) / Gamma(nu + 1)``."""
    return math.sqrt(0.5 * math.pi) * math.exp(lgamma_fn(nu + 0.5) - lgamma_fn(nu + 1.0))


def ratio_lemma_check(nu, a, rho_seq):
    """Ratios ``int_rho^inf r^-nu K_{nu+1}(a r) / sqrt(cosh r - cosh rho) dr / (rho^-nu K_{nu+1}(a rho))``.

    The outer integral uses the same singularity-free substitution as the even
    dimensional kernels. The ratios tend to :func:`ratio_lemma_limit` as
    ``rho -> 0``.
    """
    if not nu > -0.5:
        raise ValueError("ratio_lemma_check needs nu > -1/2")
    if not a > 0:
        raise ValueError("ratio_lemma_check needs a > 0")
    rho = np.asarray(rho_seq, dtype=float)
    if np.any(rho <= 0) or np.any(rho > 0.5):
        raise ValueError("rho values must lie in (0, 0.5]")

    def log_g(r):
        # integrand / sinh r, positive
        lsinh = r + np.log(-np.expm1(-2.0 * r)) - math.log(2.0)
        return -nu * np.log(r) + log_bessel_k(nu + 1.0, a * r) - lsinh, np.ones_like(r)

    reach = 45.0 / a + 2.0
    delta = 0.5 * rho
    lv, _ = log_outer_integral(log_g, rho, reach, delta)
    lden = -nu * np.log(rho) + log_bessel_k(nu + 1.0, a * rho)
    return np.exp(lv - lden).tolist()


def extrapolate_s(s, values, degree=2):
    """Value at ``s = 1`` of the model ``L + A (1-s) + B (1-s)^2``.

    The model is asymptotic, so it is fitted exactly through the ``degree + 1``
    points nearest ``s = 1``. Returns ``(L, err)`` where ``err`` is the change of
    ``L`` when the model is reduced by one term (fitted on its own nearest
    points).
    """
    s = np.asarray(s, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(s) < degree + 1:
        raise ValueError("not enough points for the extrapolation model")
    order = np.argsort(1.0 - s)
    h = (1.0 - s)[order]
    v = v[order]

    def fit(k):
        A = np.vander(h[: k + 1], k + 1, increasing=True)
        return float(np.linalg.solve(A, v[: k + 1])[0])

    L = fit(degree)
    return L, abs(L - fit(degree - 1))


def sweep_s(u, x, n, p, s_grid, quad=None, representation="singular"):
    """Fractional operator against the classical p-Laplacian along ``s_grid``.

    Failures at single points are recorded with NaN values and the sweep
    continues. Records are ordered by ``s``.
    """
    quad = quad or QuadratureSpec()
    classical = classical_plap(u, x, p)
    out = []
    for s in sorted(float(v) for v in s_grid):
        try:
            res = frac_plap(u, x, Params(n, s, p), representation, quad)
            val, err = res.value, res.err_estimate
        except (ArithmeticError, ValueError):
            val, err = float("nan"), float("inf")
        out.append(SweepRecord(s, val, classical, val - classical, err))
    return out


def sweep_limit(records, degree=2):
    """Extrapolated fractional value at ``s = 1`` and its relative gap to the classical value."""
    good = [r for r in records if math.isfinite(r.value_fractional)]
    L, err = extrapolate_s([r.s for r in good], [r.value_fractional for r in good], degree)
    classical = good[0].value_classical
    rel = abs(L - classical) / abs(classical) if classical != 0 else abs(L)
    return {"limit": L, "err": err, "classical": classical, "relative_gap": rel}
