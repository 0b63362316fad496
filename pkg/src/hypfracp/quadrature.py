"""Quadrature rules, panel construction, configuration and result records.

Gauss-Legendre nodes come from :func:`numpy.polynomial.legendre.leggauss` and
Gauss-Jacobi nodes from :func:`scipy.special.roots_jacobi`; both are cached.
"""

from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "QuadratureSpec",
    "EvalResult",
    "gauss_legendre",
    "gauss_jacobi",
    "panel_rule",
    "geometric_breaks",
    "jacobi_endpoint_rule",
    "richardson",
    "observed_orders",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Numerical configuration shared by the operator evaluators.

    Attributes
    ----------
    rho_min : float
        Smallest radius resolved by panels; the piece below it is added
        analytically from a local fit.
    rho_max : float
        Truncation radius of the panel rule; the algebraic far tail beyond it
        is integrated by Gauss-Jacobi in ``w = 1/rho``.
    unit_panel : float
        Panel width on ``[1, rho_max]``.
    nodes : int
        Gauss-Legendre nodes per radial panel.
    tail_nodes : int
        Gauss-Jacobi nodes for the far tail.
    angular_nodes : int
        Nodes per angular panel of the zonal (radial test function) rule.
    angular_order : int
        Order of the product sphere rule used for general test functions.
    rho_min_general : float
        ``rho_min`` for general test functions, whose differences
        ``u(x) - u(xi)`` are not available in cancellation-free form.
    t_min, t_max : float
        Time window of the semigroup integral (tails added analytically).
    tau_panel : float
        Panel width in ``tau = log t``.
    tau_nodes : int
        Gauss-Legendre nodes per ``tau`` panel.
    y0 : float
        Largest extension height; the sequence is ``y0 * 2**-k``.
    y_levels : int
        Number of heights used by the extrapolation.
    rtol : float
        Requested relative accuracy, used to flag results.
    """

    rho_min: float = 1e-6
    rho_max: float = 40.0
    unit_panel: float = 0.5
    nodes: int = 16
    tail_nodes: int = 24
    angular_nodes: int = 20
    angular_order: int = 12
    rho_min_general: float = 1e-3
    t_min: float = 1e-8
    t_max: float = 300.0
    tau_panel: float = 1.0
    tau_nodes: int = 10
    y0: float = 0.25
    y_levels: int = 8
    rtol: float = 1e-6

    def to_dict(self):
        return asdict(self)


@dataclass
class EvalResult:
    """A value with a nonnegative error estimate and free-form diagnostics."""

    value: float
    err_estimate: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.err_estimate = abs(float(self.err_estimate))
        self.value = float(self.value)

    def to_dict(self):
        return {"value": self.value, "err_estimate": self.err_estimate,
                "diagnostics": self.diagnostics}


@lru_cache(maxsize=None)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a=-1.0, b=1.0):
    """``n``-point Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=None)
def _jacobi(n, alpha, beta):
    x, w = roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(n, alpha, beta, a=-1.0, b=1.0):
    """Nodes and weights for ``int_a^b (b-t)^alpha (t-a)^beta f(t) dt``."""
    x, w = _jacobi(int(n), float(alpha), float(beta))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), w * half ** (1.0 + alpha + beta)


def jacobi_endpoint_rule(n, a, b, power, at="a"):
    """Rule for ``int_a^b f(t) dt`` when ``f ~ |t - end|^power * smooth``.

    The weight ``|t - end|^power`` is built into the nodes, so the returned
    weights already include it: apply them to ``f(t) / |t - end|^power``.
    """
    if at == "a":
        return gauss_jacobi(n, 0.0, power, a, b)
    return gauss_jacobi(n, power, 0.0, a, b)


def panel_rule(breaks, n):
    """Composite Gauss-Legendre rule over consecutive ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(int(n))
    a = breaks[:-1, None]
    half = 0.5 * (breaks[1:, None] - a)
    nodes = a + half * (x + 1.0)
    weights = half * w
    return nodes.ravel(), weights.ravel()


def geometric_breaks(a, b, ratio=2.0):
    """Breaks ``a, a*ratio, ..., b`` (last interval possibly shorter)."""
    if not (0 < a < b):
        raise ValueError("geometric_breaks needs 0 < a < b")
    k = int(np.ceil(np.log(b / a) / np.log(ratio) - 1e-12))
    pts = a * ratio ** np.arange(k + 1, dtype=float)
    pts[-1] = b
    return pts


def richardson(h, values, exponents):
    """Generalized Richardson extrapolation to ``h = 0``.

    Fits ``values[k] = L + sum_j c_j h[k]**exponents[j]`` using the ``J + 1``
    smallest ``h`` for ``J = 0, 1, ...`` and returns the last limit.

    Returns
    -------
    limit : float
    err : float
        Difference between the last two limits of the table.
    table : list of float
        Limits with increasing numbers of correction terms.
    """
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(h)
    h, values = h[order], values[order]
    table = [float(values[0])]
    jmax = min(len(exponents), len(h) - 1)
    for j in range(1, jmax + 1):
        hh = h[: j + 1]
        A = np.ones((j + 1, j + 1))
        for col, g in enumerate(exponents[:j], start=1):
            A[:, col] = (hh / hh[-1]) ** g
        coef = np.linalg.solve(A, values[: j + 1])
        table.append(float(coef[0]))
    err = abs(table[-1] - table[-2]) if len(table) > 1 else abs(table[0])
    return table[-1], err, table


def observed_orders(h, values):
    """Empirical convergence orders ``log(d_k / d_{k+1}) / log(h_k / h_{k+1})``.

    ``d_k`` are successive differences of ``values`` ordered by decreasing ``h``.
    """
    h = np.asarray(h, dtype=float)
    v = np.asarray(values, dtype=float)
    order = np.argsort(-h)
    h, v = h[order], v[order]
    d = np.abs(np.diff(v))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(d[:-1] / d[1:]) / np.log(h[:-2] / h[1:-1])
    return out
