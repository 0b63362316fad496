"""The fractional p-Laplacian on ``H^n`` by three representations.

Every representation integrates a radial weight against the angular profile

    F(rho) = int_{S^(n-1)} Phi_p(u(x) - u(exp_x(omega, rho))) d omega,

which already contains the pairing of ``xi`` with its reflection through ``x``
because the angular rules are antipodally symmetric. Then

* singular:  ``c_nsp int K(rho) sinh^(n-1) rho F(rho) drho``
* semigroup: ``C1 int_0^inf w(t) t^(-1-sp/2) dt`` with ``w(t) = int p(t, rho) sinh^(n-1) rho F drho``
* extension: ``lim_{y->0} C3 U(y) / y^sp`` with ``U(y) = int P(rho, y) sinh^(n-1) rho F drho``.

Near ``rho = 0`` the weighted integrand behaves like ``rho^(e-1) (h0 + h2 rho^2)``
with ``e = e_F - sp``, where ``F ~ rho^e_F``; ``e_F = p`` when ``grad u(x) != 0``
and ``2p - 2`` at a nondegenerate critical point. The piece below ``rho_min`` is
added from that model. Beyond ``rho_max`` ``F`` is replaced by its far value
and the algebraic tail of the kernel is integrated exactly.

For radial test functions ``u = g(d(o, .))`` the angular profile is reduced to a
one-dimensional integral in ``c = cos(theta)``, the cosine of the angle between
``omega`` and the direction towards ``o``; differences ``u(x) - u(xi)`` are then
formed without cancellation.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammainc

from .geometry import HyperPoint, distance, project, sphere_area, sphere_rule, tangent_frame, radial_rule
from .heat import log_heat_kernel
from .kernels import (
    Params,
    constants,
    far_tail_integral,
    log_poisson_kernel,
    log_weighted_kernel,
    poisson_kernel_dy,
)
from .quadrature import (
    EvalResult,
    QuadratureSpec,
    gauss_jacobi,
    gauss_legendre,
    observed_orders,
    richardson,
)
from .specfun import lgamma_fn

__all__ = [
    "phi_p",
    "RadialProfile",
    "TestFunction",
    "u1",
    "u2",
    "constant_function",
    "from_callable",
    "classical_plap",
    "angular_profile",
    "frac_plap_singular",
    "frac_plap_semigroup",
    "extension_U",
    "frac_plap_extension",
    "frac_plap",
    "near_field_scaling_check",
    "result_record",
]


def phi_p(r, p):
    """``Phi_p(r) = |r|^(p-2) r`` with ``Phi_p(0) = 0``."""
    r = np.asarray(r, dtype=float)
    out = np.sign(r) * np.abs(r) ** (p - 1.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class RadialProfile:
    """``g(r)`` with derivatives and a stable difference.

    ``drop(r0, dc)`` returns ``g(r0) - g(d)`` where ``dc = cosh d - cosh r0``.
    """

    name: str
    g: object
    dg: object
    d2g: object
    drop: object


def _drop_generic(g):
    def drop(r0, dc):
        d = np.arccosh(np.maximum(math.cosh(r0) + dc, 1.0))
        return g(r0) - g(d)
    return drop


def _drop_u1(r0, dc):
    # exp(-r0^2) - exp(-d^2) with d - r0 = log1p(...) free of cancellation
    if r0 == 0.0:
        d = 2.0 * np.arcsinh(np.sqrt(0.5 * np.maximum(dc, 0.0)))
        return -np.expm1(-d * d)
    C0, S0 = math.cosh(r0), math.sinh(r0)
    C = C0 + dc
    S = np.sqrt(np.maximum(C * C - 1.0, 0.0))
    delta = np.log1p(dc * (1.0 + (C + C0) / (S + S0)) / (C0 + S0))
    return -math.exp(-r0 * r0) * np.expm1(-delta * (2.0 * r0 + delta))


def _drop_u2(r0, dc):
    C0 = math.cosh(r0)
    return dc / (C0 * (C0 + dc))


_U1 = RadialProfile(
    "u1",
    lambda r: np.exp(-np.asarray(r) ** 2),
    lambda r: -2.0 * np.asarray(r) * np.exp(-np.asarray(r) ** 2),
    lambda r: (4.0 * np.asarray(r) ** 2 - 2.0) * np.exp(-np.asarray(r) ** 2),
    _drop_u1,
)
_U2 = RadialProfile(
    "u2",
    lambda r: 1.0 / np.cosh(r),
    lambda r: -np.tanh(r) / np.cosh(r),
    lambda r: (np.tanh(r) ** 2 - 1.0 / np.cosh(r) ** 2) / np.cosh(r),
    _drop_u2,
)


def _lorentz_inverse(B):
    J = np.diag([1.0] + [-1.0] * (B.shape[0] - 1))
    return J @ B.T @ J


class TestFunction:
    """A bounded ``C^2`` field on ``H^n``.

    Either radial about a pole ``o`` (``profile`` given) or a general callable
    acting on coordinate arrays of shape ``(N, n + 1)``.

    Parameters
    ----------
    n : int
    value : callable, optional
        Required for general functions.
    profile : RadialProfile, optional
    pole : HyperPoint, optional
        Center of a radial function (default the origin).
    name : str
    """

    __test__ = False  # not a pytest class

    def __init__(self, n, value=None, profile=None, pole=None, name=None):
        if value is None and profile is None:
            raise ValueError("TestFunction needs a callable or a radial profile")
        self.n = int(n)
        self.profile = profile
        if profile is not None:
            if pole is None:
                pole = HyperPoint(np.eye(self.n + 1)[0])
            if pole.n != self.n:
                raise ValueError("pole dimension does not match n")
        self.pole = pole
        self._value = value
        self.name = name or (profile.name if profile is not None else "callable")

    @property
    def is_radial(self):
        return self.profile is not None

    @property
    def descriptor(self):
        if self.is_radial:
            return {"kind": "radial", "profile": self.name, "pole": self.pole.to_list()}
        return {"kind": "general", "name": self.name}

    def value(self, pts):
        """Values at coordinates ``pts`` of shape ``(..., n + 1)``."""
        pts = pts.coords if isinstance(pts, HyperPoint) else np.asarray(pts, dtype=float)
        if self.is_radial:
            return self.profile.g(distance(self.pole.coords, pts))
        return np.asarray(self._value(pts), dtype=float)

    def __call__(self, pts):
        return self.value(pts)

    def radius(self, x):
        """``d(o, x)`` for radial functions."""
        return distance(self.pole.coords, x.coords)

    def grad_norm_at(self, x, h=1e-4):
        """``|grad u(x)|``: analytic for radial functions, else central differences."""
        if self.is_radial:
            return abs(float(self.profile.dg(self.radius(x))))
        E = tangent_frame(x)
        z = np.concatenate([np.eye(self.n) * h, -np.eye(self.n) * h])
        vals = self.value(_chart(x, E, z))
        g = (vals[: self.n] - vals[self.n:]) / (2.0 * h)
        return float(np.linalg.norm(g))

    def analytic_plap(self, x, p):
        """Classical ``-div(|grad u|^(p-2) grad u)`` at ``x`` for radial functions, else ``None``."""
        if not self.is_radial:
            return None
        return _radial_plap(self.profile, self.radius(x), self.n, p)

    def transformed(self, B):
        """``u o B^-1`` for a Lorentz matrix ``B``."""
        if self.is_radial:
            return TestFunction(self.n, profile=self.profile, pole=HyperPoint(project(B @ self.pole.coords)),
                                name=self.name)
        Binv = _lorentz_inverse(B)
        f = self._value
        return TestFunction(self.n, value=lambda pts: f(np.asarray(pts) @ Binv.T), name=self.name)


def u1(n, pole=None):
    """``exp(-d(o, x)^2)``."""
    return TestFunction(n, profile=_U1, pole=pole)


def u2(n, pole=None):
    """``1 / cosh d(o, x) = 1 / [o, x]``."""
    return TestFunction(n, profile=_U2, pole=pole)


def constant_function(n, c=1.0):
    c = float(c)
    prof = RadialProfile(
        "constant",
        lambda r: np.full(np.shape(r), c),
        lambda r: np.zeros(np.shape(r)),
        lambda r: np.zeros(np.shape(r)),
        lambda r0, dc: np.zeros(np.shape(dc)),
    )
    return TestFunction(n, profile=prof, name="constant")


def from_callable(n, f, name="callable"):
    """Wrap ``f(coords) -> values`` as a general :class:`TestFunction`."""
    return TestFunction(n, value=f, name=name)


def radial_function(n, g, dg, d2g, pole=None, name="radial"):
    """Radial function ``g(d(o, x))`` from a profile and its two derivatives."""
    return TestFunction(n, profile=RadialProfile(name, g, dg, d2g, _drop_generic(g)), pole=pole)


# --------------------------------------------------------------------------
# classical p-Laplacian


def _radial_plap(prof, r, n, p):
    if r < 1e-12:
        d2 = float(prof.d2g(0.0))
        if p > 2.0 or d2 == 0.0:
            return 0.0
        if p == 2.0:
            return -n * d2
        raise ValueError("classical p-Laplacian undefined at a critical point for p < 2")
    g1 = float(prof.dg(r))
    g2 = float(prof.d2g(r))
    if g1 == 0.0:
        if p > 2.0:
            return 0.0
        if p < 2.0:
            raise ValueError("classical p-Laplacian undefined where grad u = 0 and p < 2")
    return -abs(g1) ** (p - 2.0) * ((p - 1.0) * g2 + (n - 1) / math.tanh(r) * g1)


def _chart(x, E, z):
    """Points ``exp_x(sum z_i E_i)`` for normal coordinates ``z`` of shape (N, n)."""
    v = z @ E
    nz = np.linalg.norm(z, axis=-1)
    safe = np.where(nz > 0, nz, 1.0)
    sh = np.where(nz > 0, np.sinh(nz) / safe, 1.0)
    pts = np.cosh(nz)[:, None] * x.coords + sh[:, None] * v
    return project(pts)


def _plap_fd(u, x, p, h):
    n = u.n
    E = tangent_frame(x)
    k = 0.25 * h
    eye = np.eye(n)

    def flux(z0):
        # |grad u|^(p-2) grad u at exp_x(z0) in the chart, by central differences
        zz = np.concatenate([z0 + k * eye, z0 - k * eye])
        vals = u.value(_chart(x, E, zz))
        g = (vals[:n] - vals[n:]) / (2.0 * k)
        return np.linalg.norm(g) ** (p - 2.0) * g

    div = 0.0
    for i in range(n):
        div += (flux(h * eye[i])[i] - flux(-h * eye[i])[i]) / (2.0 * h)
    return -div


def classical_plap(u, x, p, h=2e-3):
    """``-div(|grad u(x)|^(p-2) grad u(x))``.

    Radial functions use the closed radial formula. General functions use
    central differences in normal coordinates at ``x``, where the metric is
    Euclidean to second order; two step sizes are combined by Richardson
    extrapolation (error ``O(h^4)``).

    Raises
    ------
    ValueError
        When ``grad u(x) = 0`` and ``p < 2``.
    """
    if u.is_radial:
        return _radial_plap(u.profile, u.radius(x), u.n, p)
    if p < 2.0 and u.grad_norm_at(x) < 1e-8:
        raise ValueError("classical p-Laplacian undefined where grad u = 0 and p < 2")
    a = _plap_fd(u, x, p, h)
    b = _plap_fd(u, x, p, 0.5 * h)
    return (4.0 * b - a) / 3.0


# --------------------------------------------------------------------------
# angular profile


@lru_cache(maxsize=None)
def _unit_gl(nodes):
    return gauss_legendre(nodes, -1.0, 1.0)


@lru_cache(maxsize=None)
def _unit_jacobi(nodes, alpha, beta):
    return gauss_jacobi(nodes, alpha, beta, -1.0, 1.0)


def _graded(end, gap, other, sign):
    # breaks end - sign * gap * 2^j strictly between other and end
    pts = []
    for j in range(1, 60):
        b = end - sign * gap * 2.0 ** j
        if (b - other) * sign <= 0.25 * abs(end - other) or abs(b - end) > 0.5 * abs(end - other):
            break
        pts.append(b)
    return pts


def _zonal_rule(cstar, n, p, N):
    """Rule for ``int_{-1}^{1} h(c) (1 - c^2)^((n-3)/2) dc``, ``h ~ |c - c*|^(p-1)`` at ``c*``.

    Returns nodes as ``c* - c`` (exact near ``c*``) and weights that include the
    factor ``(1 - c^2)^((n-3)/2)``.
    """
    lam = 0.5 * (n - 3)
    panels = []  # (a, b, exponent at b, exponent at a)
    if cstar < 1.0:
        left = [-1.0]
        if cstar > 0.25:
            left.append(0.0)
        gap = 1.0 - cstar
        if cstar > 0.25 and gap < 0.25 * cstar:
            left += sorted(_graded(cstar, gap, 0.0, 1.0))
        left.append(cstar)
        for a, b in zip(left[:-1], left[1:]):
            panels.append((a, b, (p - 1.0) if b == cstar else 0.0, lam if a == -1.0 else 0.0))
        panels.append((cstar, 1.0, lam, p - 1.0))
    else:
        br = [-1.0, 0.0]
        gap = cstar - 1.0
        if 0.0 < gap < 0.25:
            br += sorted(_graded(1.0, gap, 0.0, 1.0))
        br.append(1.0)
        # c* = 1 exactly: the kink merges with the endpoint weight
        at_one = lam + (p - 1.0 if gap == 0.0 else 0.0)
        for a, b in zip(br[:-1], br[1:]):
            panels.append((a, b, at_one if b == 1.0 else 0.0, lam if a == -1.0 else 0.0))
    dcs, ws = [], []
    for a, b, al, be in panels:
        if al == 0.0 and be == 0.0:
            x, w = _unit_gl(max(4, N // 2))
        else:
            x, w = _unit_jacobi(N, al, be)
        half = 0.5 * (b - a)
        to_b = half * (1.0 - x)   # b - c
        from_a = half * (1.0 + x)  # c - a
        # c* - c from the endpoint nearer to c*
        dc = (cstar - b) + to_b if abs(cstar - b) <= abs(cstar - a) else (cstar - a) - from_a
        one_minus = (1.0 - b) + to_b
        one_plus = (1.0 + a) + from_a
        wt = w * half ** (1.0 + al + be)
        wt = wt * (one_minus * one_plus) ** lam / (to_b ** al * from_a ** be)
        dcs.append(dc)
        ws.append(wt)
    return np.concatenate(dcs), np.concatenate(ws)


def _zonal_profile(u, x, p, rho, N):
    prof = u.profile
    n = u.n
    r0 = float(u.radius(x))
    out = np.empty(rho.shape)
    if r0 < 1e-12:
        dc = 2.0 * np.sinh(0.5 * rho) ** 2
        return sphere_area(n) * phi_p(prof.drop(0.0, dc), p)
    area = sphere_area(n - 1)
    sr0 = math.sinh(r0)
    ct = 1.0 / math.tanh(r0)
    for i, r in enumerate(rho):
        cstar = ct * math.tanh(0.5 * r)
        dcs, w = _zonal_rule(cstar, n, p, N)
        dc = sr0 * math.sinh(r) * dcs
        out[i] = area * np.dot(w, phi_p(prof.drop(r0, dc), p))
    return out


def _general_profile(u, x, p, rho, order, chunk=1 << 18):
    n = u.n
    dirs, dw = sphere_rule(n, order)
    omega = dirs @ tangent_frame(x)
    ux = float(u.value(x.coords[None])[0])
    out = np.empty(rho.shape)
    step = max(1, chunk // len(dw))
    for lo in range(0, rho.size, step):
        r = rho[lo:lo + step]
        pts = np.cosh(r)[:, None, None] * x.coords + np.sinh(r)[:, None, None] * omega[None]
        vals = u.value(project(pts).reshape(-1, n + 1)).reshape(r.size, -1)
        out[lo:lo + step] = phi_p(ux - vals, p) @ dw
    return out


def angular_profile(u, x, p, rho, quad=None, zonal=True):
    """``F(rho) = int_{S^(n-1)} Phi_p(u(x) - u(exp_x(omega, rho))) d omega``.

    Radial functions use the one-dimensional zonal rule when ``zonal`` is true;
    otherwise the product sphere rule of order ``quad.angular_order`` is used.
    """
    quad = quad or QuadratureSpec()
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if u.is_radial and zonal:
        return _zonal_profile(u, x, p, rho, quad.angular_nodes)
    return _general_profile(u, x, p, rho, quad.angular_order)


# --------------------------------------------------------------------------
# shared radial setup


@dataclass
class _Setup:
    params: Params
    rho: np.ndarray
    w: np.ndarray
    breaks: np.ndarray
    F: np.ndarray
    F_fit: np.ndarray  # F at rho_min, 2 rho_min
    rho_fit: np.ndarray
    F_far: float
    e_F: float
    zonal: bool
    grid_key: tuple

    def diagnostics(self):
        return {"radial_nodes": int(self.rho.size), "radial_panels": int(self.breaks.size - 1),
                "rho_min": float(self.rho_fit[0]), "rho_max": float(self.breaks[-1]),
                "e_F": self.e_F, "F_far": self.F_far, "zonal": self.zonal}


@lru_cache(maxsize=64)
def _grid(rho_max, rho_min, nodes, unit_panel, extra):
    return radial_rule(rho_max, rho_min, nodes, unit_panel, extra)


def _check_inputs(u, x, params):
    if not isinstance(params, Params):
        raise TypeError("params must be a Params instance")
    if u.n != params.n or x.n != params.n:
        raise ValueError("dimension mismatch between test function, point and params")


def _setup(u, x, params, quad, zonal=True):
    _check_inputs(u, x, params)
    p = params.p
    use_zonal = u.is_radial and zonal
    gnorm = u.grad_norm_at(x)
    critical = gnorm < 1e-8
    if critical and params.gradient_required:
        raise ValueError("grad u(x) = 0 but p <= 2/(2-s): the operator needs grad u(x) != 0")
    e_F = 2.0 * p - 2.0 if critical else p
    rho_min = quad.rho_min if use_zonal else max(quad.rho_min, quad.rho_min_general)
    extra = ()
    if use_zonal:
        r0 = float(u.radius(x))
        if r0 > 1e-12 and 2.0 * r0 < quad.rho_max:
            # rounded so isometric copies of x share the cached kernel grids
            extra = (float(f"{2.0 * r0:.10g}"),)
    rho, w, br = _grid(quad.rho_max, rho_min, quad.nodes, quad.unit_panel, extra)
    rho_fit = np.array([rho_min, 2.0 * rho_min])
    Fall = angular_profile(u, x, p, np.concatenate([rho, rho_fit, [quad.rho_max]]), quad, zonal)
    key = (quad.rho_max, rho_min, quad.nodes, quad.unit_panel, extra)
    return _Setup(params, rho, w, br, Fall[:rho.size], Fall[rho.size:rho.size + 2], rho_fit,
                  float(Fall[-1]), e_F, use_zonal, key)


def _power_tail(rho_fit, q, e):
    """``int_0^rho_min rho^(e-1) (h0 + h2 rho^2)`` fitted to ``q = rho^(1-e) f`` at two radii."""
    r1 = rho_fit[0]
    h2 = (q[1] - q[0]) / (3.0 * r1 * r1)
    h0 = q[0] - h2 * r1 * r1
    main = h0 * r1 ** e / e
    corr = h2 * r1 ** (e + 2.0) / (e + 2.0)
    return main + corr, abs(corr)


@lru_cache(maxsize=256)
def _weighted_kernel_grid(params, key):
    rho, _, _ = _grid(*key)
    rho_min = key[1]
    pts = np.concatenate([rho, [rho_min, 2.0 * rho_min]])
    return np.exp(log_weighted_kernel(params, pts))


# --------------------------------------------------------------------------
# singular integral


def frac_plap_singular(u, x, params, quad=None, zonal=True):
    """Pointwise singular-integral representation.

    ``c_nsp * 1/2 int [Phi_p(u(x) - u(xi)) + Phi_p(u(x) - u(T_x xi))] K(d(x, xi)) dxi``;
    the reflected pairing is exact because the angular rules are antipodally
    symmetric, so the integrand is absolutely integrable.

    Returns
    -------
    EvalResult
        ``err_estimate`` sums the near-zero model correction, the far-field
        variation of ``F`` times the kernel tail and a rounding bound.
    """
    quad = quad or QuadratureSpec()
    S = _setup(u, x, params, quad, zonal)
    c = constants(params)
    KS = _weighted_kernel_grid(params, S.grid_key)
    ks, ks_fit = KS[:-2], KS[-2:]
    # (0, rho_min) comes from the power model, not from the first panel
    terms = np.where(S.rho >= S.rho_fit[0], S.w * ks * S.F, 0.0)
    main = float(np.sum(terms))
    e = S.e_F - params.s * params.p
    near, near_err = _power_tail(S.rho_fit, ks_fit * S.F_fit * S.rho_fit ** (1.0 - e), e)
    far_w = far_tail_integral(params, quad.rho_max, nodes=quad.tail_nodes)
    far = S.F_far * far_w
    i_half = np.searchsorted(S.rho, 0.5 * quad.rho_max)
    far_err = abs(S.F_far - S.F[i_half]) * far_w
    value = c.c_nsp * (main + near + far)
    err = c.c_nsp * (near_err + far_err + 1e-13 * float(np.sum(np.abs(terms)))) + 1e-15 * abs(value)
    diag = S.diagnostics()
    diag.update({"near_tail": c.c_nsp * near, "far_tail": c.c_nsp * far})
    return EvalResult(value, err, diag)


# --------------------------------------------------------------------------
# semigroup


@lru_cache(maxsize=None)
def _tau_rule(t_min, t_max, panel, nodes):
    lo, hi = math.log(t_min), math.log(t_max)
    br = np.unique(np.concatenate([np.arange(0.0, lo, -panel), [lo], np.arange(0.0, hi, panel), [hi]]))
    x, w = _unit_gl(nodes)
    a = br[:-1, None]
    half = 0.5 * (br[1:, None] - a)
    tau = (a + half * (x + 1.0)).ravel()
    wt = (half * w).ravel()
    return tau, wt


@lru_cache(maxsize=16)
def _heat_matrix(n, key, t_key):
    """Rows ``p(t, rho_k) sinh^(n-1) rho_k w_k`` for the tau nodes and the two fit times.

    Each row sums to ``1 / |S^(n-1)|`` while the heat mass stays inside ``rho_max``.
    """
    rho, w, _ = _grid(*key)
    tau, _ = _tau_rule(*t_key)
    t_min = t_key[0]
    times = np.concatenate([np.exp(tau), [t_min, 4.0 * t_min]])
    lsinh = (n - 1) * (rho + np.log(-np.expm1(-2.0 * rho)) - math.log(2.0))
    M = np.zeros((times.size, rho.size))
    for i, t in enumerate(times):
        live = rho * rho / (4.0 * t) < 800.0
        if live.any():
            M[i, live] = np.exp(log_heat_kernel(n, t, rho[live]) + lsinh[live]) * w[live]
    return times, M


def _semigroup_parts(S, quad):
    params = S.params
    t_key = (quad.t_min, quad.t_max, quad.tau_panel, quad.tau_nodes)
    times, M = _heat_matrix(params.n, S.grid_key, t_key)
    tau, wt = _tau_rule(*t_key)
    nt = tau.size
    small = tau < 0.0
    w_small = M[:nt][small] @ S.F
    dw_large = M[:nt][~small] @ (S.F - S.F_far)
    w_fit = M[nt:] @ S.F
    return tau, wt, small, w_small, dw_large, w_fit


def frac_plap_semigroup(u, x, params, quad=None, zonal=True):
    """Heat-semigroup representation ``C1 int_0^inf w(t) t^(-1-sp/2) dt``.

    ``t = e^tau`` with Gauss-Legendre panels on ``[log t_min, log t_max]``. For
    ``t >= 1`` the integrand is split as ``F_far + (w - F_far)`` and the constant
    part is integrated exactly; below ``t_min`` the model
    ``w = t^(e_F/2) (A0 + A1 t)`` fitted at ``t_min`` and ``4 t_min`` is
    integrated in closed form.
    """
    quad = quad or QuadratureSpec()
    S = _setup(u, x, params, quad, zonal)
    kap = params.kappa
    c = constants(params)
    tau, wt, small, w_small, dw_large, w_fit = _semigroup_parts(S, quad)
    t = np.exp(tau)
    part_small = float(np.sum(wt[small] * w_small * t[small] ** -kap))
    part_large = float(np.sum(wt[~small] * dw_large * t[~small] ** -kap))
    w_inf = S.F_far / sphere_area(params.n)  # w(t) -> Phi_p(u(x) - u(infinity))
    const = w_inf / kap
    # small-t model
    tm = quad.t_min
    ef = 0.5 * S.e_F
    q = w_fit * np.array([tm, 4.0 * tm]) ** -ef
    A1 = (q[1] - q[0]) / (3.0 * tm)
    A0 = q[0] - A1 * tm
    e2 = ef - kap
    tail = A0 * tm ** e2 / e2 + A1 * tm ** (e2 + 1.0) / (e2 + 1.0)
    tail_err = abs(A1 * tm ** (e2 + 1.0) / (e2 + 1.0))
    value = c.C1 * (part_small + part_large + const + tail)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = float(np.log(abs(w_fit[1] / w_fit[0])) / math.log(4.0)) if w_fit[0] != 0 else float("nan")
    err = c.C1 * (tail_err + 1e-13 * (abs(part_small) + abs(part_large) + abs(const))) + 1e-15 * abs(value)
    diag = S.diagnostics()
    diag.update({"t_nodes": int(tau.size), "t_min": tm, "t_max": quad.t_max,
                 "small_t_tail": c.C1 * tail, "small_t_slope": slope, "expected_slope": ef})
    return EvalResult(value, err, diag)


# --------------------------------------------------------------------------
# extension


@lru_cache(maxsize=512)
def _poisson_grid(params, key, y):
    rho, _, _ = _grid(*key)
    lsinh = (params.n - 1) * (rho + np.log(-np.expm1(-2.0 * rho)) - math.log(2.0))
    P = np.exp(np.atleast_1d(log_poisson_kernel(params, rho, y)) + lsinh)
    dP = poisson_kernel_dy(params, rho, y) * np.exp(lsinh)
    return P, dP


def _boundary(S, boundary):
    if boundary is None:
        return S.F, S.F_far
    area = sphere_area(S.params.n)
    return np.full(S.F.shape, area * float(boundary)), area * float(boundary)


def _U_poisson(S, y, quad, boundary=None):
    F, F_far = _boundary(S, boundary)
    P, _ = _poisson_grid(S.params, S.grid_key, float(y))
    main = float(np.sum(S.w * P * F))
    far = F_far * far_tail_integral(S.params, quad.rho_max, y=y, nodes=quad.tail_nodes) if F_far else 0.0
    return main + far, float(np.sum(S.w * np.abs(P * F)))


def _U_time(S, y, quad, boundary=None):
    params = S.params
    kap = params.kappa
    sp = params.s * params.p
    tau, wt, small, w_small, dw_large, w_fit = _semigroup_parts(S, quad)
    w_inf = S.F_far / sphere_area(params.n)
    if boundary is not None:
        w_inf = float(boundary)
        w_small = np.full(w_small.shape, w_inf)
        dw_large = np.zeros(dw_large.shape)
        w_fit = np.full(2, w_inf)
    t = np.exp(tau)
    g = np.exp(-y * y / (4.0 * t)) * t ** -kap
    total = float(np.sum(wt[small] * w_small * g[small]) + np.sum(wt[~small] * dw_large * g[~small]))
    z = y * y / 4.0
    total += w_inf * z ** -kap * gammainc(kap, z) * math.exp(lgamma_fn(kap))
    neglected = 0.0
    if z / quad.t_min < 50.0:
        neglected = abs(float(w_fit[0])) * quad.t_min ** -kap
    pref = math.exp(sp * math.log(y) - sp * math.log(2.0) - lgamma_fn(kap))
    return pref * total, pref * neglected


def extension_U(u, x, params, y, quad=None, path="poisson", boundary=None, zonal=True):
    """Extension ``U(x, y)`` with boundary data ``f = Phi_p(u(x) - u(.))``.

    Parameters
    ----------
    path : {"poisson", "time"}
        ``"poisson"`` integrates the Poisson kernel; ``"time"`` uses
        ``y^sp / (2^sp Gamma(sp/2)) int_0^inf e^{t Delta} f(x) e^{-y^2/4t} t^(-1-sp/2) dt``.
    boundary : float, optional
        Replace ``f`` by this constant (``1.0`` checks the normalization).
    """
    if not y > 0:
        raise ValueError("extension_U needs y > 0")
    quad = quad or QuadratureSpec()
    S = _setup(u, x, params, quad, zonal)
    if path == "poisson":
        val, scale = _U_poisson(S, y, quad, boundary)
        err = 1e-13 * scale
    elif path == "time":
        val, err = _U_time(S, y, quad, boundary)
        err += 1e-13 * abs(val)
    else:
        raise ValueError("path must be 'poisson' or 'time'")
    diag = S.diagnostics()
    diag.update({"y": float(y), "path": path})
    return EvalResult(val, err, diag)


def _exponent_ladder(e, count):
    cand = sorted({round(v, 12) for v in (e, 2.0, e + 2.0, 4.0, e + 4.0, 6.0)})
    out = []
    for v in cand:
        if not out or v - out[-1] > 1e-6:
            out.append(v)
    return out[:count]


def frac_plap_extension(u, x, params, quad=None, zonal=True, neumann=True):
    """Extension representation: ``C3 U(x, y) / y^sp`` extrapolated to ``y = 0``.

    Heights ``y_k = y0 2^-k``. The error model is
    ``E(y) = E0 + a y^e + b y^2 + c y^(e+2) + ...`` with ``e = e_F - sp``; the four
    smallest heights give a 4-point generalized Richardson extrapolation. The
    Neumann trace ``(C3/sp) y^(1-sp) dU/dy`` (exact ``y``-derivative of the
    Poisson kernel) follows the same model and is extrapolated alongside as a
    consistency check.
    """
    quad = quad or QuadratureSpec()
    S = _setup(u, x, params, quad, zonal)
    c = constants(params)
    sp = params.s * params.p
    ys = quad.y0 * 2.0 ** -np.arange(quad.y_levels)
    D, N = [], []
    for y in ys:
        U, _ = _U_poisson(S, y, quad)
        D.append(c.C3 * U / y ** sp)
        if neumann:
            _, dP = _poisson_grid(params, S.grid_key, float(y))
            dU = float(np.sum(S.w * dP * (S.F - S.F_far)))
            N.append(c.C3 / sp * y ** (1.0 - sp) * dU)
    e = S.e_F - sp
    ex = _exponent_ladder(e, 3)
    limit, rerr, table = richardson(ys, D, ex)
    diag = S.diagnostics()
    diag.update({"y": ys.tolist(), "dirichlet": D, "exponents": ex, "table": table,
                 "observed_orders": [float(v) for v in observed_orders(ys, D)]})
    err = rerr + 1e-12 * abs(limit)
    if neumann:
        nlim, nerr, ntable = richardson(ys, N, ex)
        diag.update({"neumann": N, "neumann_limit": nlim, "neumann_table": ntable,
                     "trace_gap": abs(nlim - limit)})
    return EvalResult(limit, err, diag)


def frac_plap(u, x, params, representation="singular", quad=None, zonal=True):
    """Dispatch to one of ``"singular"``, ``"semigroup"``, ``"extension"``."""
    fn = {"singular": frac_plap_singular, "semigroup": frac_plap_semigroup,
          "extension": frac_plap_extension}.get(representation)
    if fn is None:
        raise ValueError(f"unknown representation {representation!r}")
    return fn(u, x, params, quad, zonal)


def result_record(params, representation, result):
    """JSON-ready record ``{params, representation, value, err_estimate, diagnostics}``."""
    rec = {"params": params.to_dict(), "representation": representation}
    rec.update(result.to_dict())
    return rec


# --------------------------------------------------------------------------
# appendix scaling check


def near_field_scaling_check(u, x, params, radii=(0.2, 0.1, 0.05, 0.025), quad=None, zonal=True):
    """Near-field ratio ``N(r) / D(r)`` for each ``r``.

    ``N(r) = c_nsp int_{d < r} Phi_p-symmetrized integrand`` and
    ``D(r) = c_nsp int_{d < r} d^alpha K dxi`` with ``alpha = 2p - 2`` for
    ``2/(2-s) < p < 2`` and ``alpha = p`` otherwise.

    Returns
    -------
    list of dict
        Keys ``r``, ``alpha``, ``near``, ``scale``, ``ratio``.
    """
    quad = quad or QuadratureSpec()
    _check_inputs(u, x, params)
    p, s, sp = params.p, params.s, params.s * params.p
    alpha = 2.0 * p - 2.0 if 2.0 / (2.0 - s) < p < 2.0 else p
    if alpha - sp <= 0:
        raise ValueError("d^alpha K is not integrable at 0 for these parameters")
    S = _setup(u, x, params, quad, zonal)
    c = constants(params)
    area = sphere_area(params.n)
    e = S.e_F - sp
    out = []
    for r in radii:
        rho, w, _ = radial_rule(r, S.rho_fit[0], quad.nodes, quad.unit_panel)
        w = np.where(rho >= S.rho_fit[0], w, 0.0)
        pts = np.concatenate([rho, S.rho_fit])
        ks = np.exp(log_weighted_kernel(params, pts))
        F = angular_profile(u, x, p, rho, quad, zonal)
        near = float(np.sum(w * ks[:-2] * F))
        near += _power_tail(S.rho_fit, ks[-2:] * S.F_fit * S.rho_fit ** (1.0 - e), e)[0]
        scale = float(np.sum(w * ks[:-2] * rho ** alpha))
        scale += _power_tail(S.rho_fit, ks[-2:] * S.rho_fit ** (1.0 + sp), alpha - sp)[0]
        near *= c.c_nsp
        scale *= c.c_nsp * area
        out.append({"r": float(r), "alpha": alpha, "near": near, "scale": scale, "ratio": near / scale})
    return out
