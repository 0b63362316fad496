"""Hyperboloid model of hyperbolic space.

Points are stored in Minkowski coordinates ``(x0, x1, ..., xn)`` on the upper
sheet ``x0^2 - x1^2 - ... - xn^2 = 1``. Functions accept a :class:`HyperPoint`
or a raw array whose last axis holds the coordinates, so batches of points can
be processed at once.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_jacobi, geometric_breaks, panel_rule
from .specfun import lgamma_fn

__all__ = [
    "HyperPoint",
    "TangentVector",
    "origin",
    "polar_point",
    "minkowski_inner",
    "distance",
    "exp_map",
    "antipode",
    "project",
    "boost_to",
    "tangent_frame",
    "random_lorentz",
    "sphere_area",
    "sphere_rule",
    "radial_rule",
    "PolarGrid",
    "polar_grid",
]

_TOL = 1e-12


def _coords(x):
    return x.coords if isinstance(x, (HyperPoint, TangentVector)) else np.asarray(x, dtype=float)


def _mink(a, b):
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


@dataclass(frozen=True)
class HyperPoint:
    """A point of the hyperboloid, ``coords`` of length ``n + 1``."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("HyperPoint needs a 1-D coordinate vector of length n + 1 >= 2")
        q = _mink(c, c)
        if c[0] < 1.0 - _TOL or abs(q - 1.0) > _TOL * max(1.0, c[0] ** 2) * 1e2:
            raise ValueError(f"not on the hyperboloid: [x, x] = {q!r}, x0 = {c[0]!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.coords.size - 1

    def to_list(self):
        return self.coords.tolist()


@dataclass(frozen=True)
class TangentVector:
    """A vector ``vec`` Minkowski-orthogonal to ``base``."""

    base: HyperPoint
    vec: np.ndarray

    def __post_init__(self):
        v = np.array(self.vec, dtype=float)
        if v.shape != self.base.coords.shape:
            raise ValueError("tangent vector and base point differ in dimension")
        scale = max(1.0, float(np.max(np.abs(self.base.coords))) * float(np.max(np.abs(v)) or 1.0))
        if abs(_mink(self.base.coords, v)) > 1e2 * _TOL * scale:
            raise ValueError("vector is not tangent: [x, v] != 0")
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    @property
    def coords(self):
        return self.vec

    def norm(self):
        """Riemannian length ``sqrt(-[v, v])``."""
        return math.sqrt(max(-_mink(self.vec, self.vec), 0.0))


def origin(n):
    """The pole ``o = (1, 0, ..., 0)`` of ``H^n``."""
    c = np.zeros(n + 1)
    c[0] = 1.0
    return HyperPoint(c)


def polar_point(r, omega):
    """``(cosh r, sinh r * omega)`` for a unit vector ``omega`` in ``R^n``."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    return HyperPoint(np.concatenate([[math.cosh(r)], math.sinh(r) * omega]))


def minkowski_inner(x, xi):
    """Minkowski product ``[x, xi]``; clamped to 1 for two hyperboloid points.

    Values below 1 by roundoff are clamped so that ``arccosh`` stays defined.
    """
    a, b = _coords(x), _coords(xi)
    q = _mink(a, b)
    if isinstance(x, HyperPoint) and isinstance(xi, HyperPoint):
        return max(float(q), 1.0)
    return q


def distance(x, xi):
    """Geodesic distance ``arccosh [x, xi]``.

    For nearby points (``[x, xi] < 2``) the form ``2 asinh(|x - xi|_L / 2)`` is
    used, where ``|x - xi|_L^2 = -[x - xi, x - xi] = 2([x, xi] - 1)``; it avoids
    the cancellation of ``arccosh`` near 1. Separated points use ``arccosh``,
    whose argument is then free of cancellation.
    """
    a, b = _coords(x), _coords(xi)
    q = _mink(a, b)
    diff = a - b
    chord2 = np.maximum(-_mink(diff, diff), 0.0)
    near = 2.0 * np.arcsinh(0.5 * np.sqrt(chord2))
    far = np.arccosh(np.maximum(q, 2.0))
    d = np.where(q < 2.0, near, far)
    return float(d) if np.ndim(d) == 0 else d


def project(c):
    """Project coordinates back onto the hyperboloid by resetting ``x0``."""
    c = np.array(c, dtype=float)
    c[..., 0] = np.sqrt(1.0 + np.sum(c[..., 1:] ** 2, axis=-1))
    return c


def exp_map(x, omega, rho):
    """Geodesic ``cosh(rho) x + sinh(rho) omega`` from ``x`` in direction ``omega``.

    Parameters
    ----------
    x : HyperPoint
    omega : TangentVector or array_like
        Unit tangent vector at ``x`` (``[omega, omega] = -1``, ``[x, omega] = 0``).
        A stack of vectors with shape ``(..., n + 1)`` is accepted.
    rho : float or array_like
        Nonnegative distance(s); broadcast against the leading axes of ``omega``.

    Returns
    -------
    HyperPoint or ndarray
        A point when all inputs are scalar, else raw coordinates.
    """
    xc = _coords(x)
    w = _coords(omega)
    scale = max(1.0, float(np.max(np.abs(xc))))
    if np.any(np.abs(_mink(w, w) + 1.0) > 1e-9 * scale ** 2) or np.any(
        np.abs(_mink(xc, w)) > 1e-9 * scale ** 2
    ):
        raise ValueError("omega must be a unit tangent vector at x")
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    out = np.cosh(rho)[..., None] * xc + np.sinh(rho)[..., None] * w
    out = project(out)
    if out.ndim == 1:
        return HyperPoint(out)
    return out


def antipode(x, xi):
    """Geodesic reflection ``2 [x, xi] x - xi`` of ``xi`` through ``x``."""
    xc, c = _coords(x), _coords(xi)
    q = _mink(xc, c)
    out = project(2.0 * np.asarray(q)[..., None] * xc - c)
    if out.ndim == 1 and isinstance(xi, HyperPoint):
        return HyperPoint(out)
    return out


def boost_to(x):
    """Lorentz matrix ``B`` (pure boost) with ``B o = x``."""
    xc = _coords(x)
    n = xc.size - 1
    xs = xc[1:]
    sr = np.linalg.norm(xs)
    B = np.eye(n + 1)
    B[0, 0] = xc[0]
    B[0, 1:] = xs
    B[1:, 0] = xs
    if sr > 0:
        u = xs / sr
        B[1:, 1:] += (xc[0] - 1.0) * np.outer(u, u)
    return B


def tangent_frame(x):
    """Orthonormal frame ``E`` of ``T_x``: rows ``E[i]`` with ``[E_i, E_j] = -delta_ij``."""
    B = boost_to(x)
    return B[:, 1:].T.copy()


def random_lorentz(n, rng, max_rapidity=2.0):
    """Random orthochronous Lorentz matrix: a rotation followed by a boost."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    R = np.eye(n + 1)
    R[1:, 1:] = q
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    eta = rng.uniform(0.0, max_rapidity)
    target = np.concatenate([[math.cosh(eta)], math.sinh(eta) * u])
    return boost_to(target) @ R


def sphere_area(n):
    """``|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)``, the area of the unit sphere in ``R^n``."""
    return 2.0 * math.exp(0.5 * n * math.log(math.pi) - lgamma_fn(0.5 * n))


def sphere_rule(n, order):
    """Quadrature on ``S^{n-1}`` in ``R^n``.

    ``n = 2``: uniform trapezoid with ``2 * order`` points on the circle.
    ``n >= 3``: product rule in hyperspherical angles; each polar angle with
    weight ``sin^k`` uses Gauss-Jacobi (Gegenbauer) nodes in ``cos(phi)``, the
    last angle the circle trapezoid. The rule is antipodally symmetric and
    integrates spherical polynomials of degree ``< 2 * order`` exactly.

    Returns
    -------
    dirs : ndarray, shape (N, n)
    weights : ndarray, shape (N,)
    """
    if n < 2:
        raise ValueError("sphere_rule needs n >= 2")
    m = 2 * int(order)
    phi = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    w = np.full(m, 2.0 * np.pi / m)
    for k in range(1, n - 1):
        # add one dimension: omega = (cos a, sin a * dirs), weight sin^k a
        t, wt = gauss_jacobi(int(order), 0.5 * (k - 1), 0.5 * (k - 1))
        st = np.sqrt(1.0 - t ** 2)
        new_dirs = np.concatenate(
            [np.repeat(t, len(w))[:, None], (st[:, None, None] * dirs[None]).reshape(-1, dirs.shape[1])],
            axis=1,
        )
        w = (wt[:, None] * w[None]).ravel()
        dirs = new_dirs
    return dirs, w


def radial_rule(r_max, rho_min=1e-6, nodes=16, unit_panel=0.5, extra_breaks=()):
    """Composite Gauss-Legendre rule on ``(0, r_max]``.

    Panels double from ``rho_min`` up to 1 and have width ``unit_panel``
    beyond; the interval ``(0, rho_min)`` is covered by one extra panel.

    Returns
    -------
    nodes, weights : ndarray
    breaks : ndarray
    """
    inner = geometric_breaks(rho_min, min(1.0, r_max)) if r_max > rho_min else np.array([r_max])
    br = [0.0, *inner.tolist()]
    if r_max > 1.0:
        k = max(1, int(math.ceil((r_max - 1.0) / unit_panel)))
        br += np.linspace(1.0, r_max, k + 1)[1:].tolist()
    br = np.unique(np.concatenate([br, [b for b in extra_breaks if 0 < b < r_max]]))
    x, w = panel_rule(br, nodes)
    return x, w, br


@dataclass(frozen=True)
class PolarGrid:
    """Weighted nodes ``xi_jk = exp_x(omega_j, rho_k)`` for ``int f dxi``."""

    center: HyperPoint
    points: np.ndarray
    weights: np.ndarray
    rho: np.ndarray
    radial_weights: np.ndarray
    dirs: np.ndarray
    dir_weights: np.ndarray
    spec: dict

    def integrate(self, values):
        """Weighted sum with a deterministic pairwise reduction."""
        return float(np.sum(np.asarray(values) * self.weights))

    def to_json(self):
        return json.dumps(self.spec)


def polar_grid(x, n, radial=None, angular=None):
    """Geodesic polar quadrature about ``x``.

    Parameters
    ----------
    x : HyperPoint
    n : int
        Dimension, one of 2, 3, 4, 5.
    radial : dict, optional
        Keys ``r_max`` (default 10), ``rho_min``, ``nodes``, ``unit_panel``.
    angular : dict, optional
        Key ``order`` for :func:`sphere_rule` (default 8).

    Returns
    -------
    PolarGrid
        ``sum(w * f(points))`` approximates ``int_{d(x, xi) <= r_max} f dxi``.
    """
    if n not in (2, 3, 4, 5):
        raise ValueError(f"polar_grid supports n in {{2, 3, 4, 5}}, got {n}")
    if x.n != n:
        raise ValueError("basepoint dimension does not match n")
    radial = dict(radial or {})
    angular = dict(angular or {})
    r_max = float(radial.get("r_max", 10.0))
    rho, rw, breaks = radial_rule(r_max, radial.get("rho_min", 1e-6), radial.get("nodes", 16),
                                  radial.get("unit_panel", 0.5))
    order = int(angular.get("order", 8))
    dirs, dw = sphere_rule(n, order)
    E = tangent_frame(x)
    omega = dirs @ E  # (Nd, n+1)
    pts = np.cosh(rho)[:, None, None] * x.coords + np.sinh(rho)[:, None, None] * omega[None]
    pts = project(pts).reshape(-1, n + 1)
    vol = rw * np.sinh(rho) ** (n - 1)
    weights = (vol[:, None] * dw[None]).ravel()
    spec = {"n": n, "R_max": r_max, "radial_panels": len(breaks) - 1, "angular_order": order}
    return PolarGrid(x, pts, weights, rho, vol, omega, dw, spec)
