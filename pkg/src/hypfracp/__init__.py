"""Fractional p-Laplacian on hyperbolic space.

Kernels, heat semigroup and extension representations of
``(-Delta_p)^s u(x) = c_nsp P.V. int Phi_p(u(x) - u(xi)) K(d(x, xi)) dxi``
on the hyperboloid model of ``H^n``, and the limit ``s -> 1``.
"""

from .geometry import HyperPoint, distance, exp_map, origin, polar_grid, polar_point, random_lorentz
from .heat import heat_kernel, heat_semigroup, time_integral_identity
from .kernels import Params, constants, kernel_K, poisson_kernel
from .limits import (
    SweepRecord,
    gamma_p,
    moment_integral,
    moment_limit,
    ratio_lemma_check,
    sweep_limit,
    sweep_s,
    tail_integral,
)
from .operator import (
    TestFunction,
    classical_plap,
    extension_U,
    frac_plap,
    frac_plap_extension,
    frac_plap_semigroup,
    frac_plap_singular,
    from_callable,
    near_field_scaling_check,
    u1,
    u2,
)
from .quadrature import EvalResult, QuadratureSpec
from .specfun import bessel_k, gamma_fn, kscr

__version__ = "0.1.0"

__all__ = [
    "HyperPoint",
    "distance",
    "exp_map",
    "origin",
    "polar_grid",
    "polar_point",
    "random_lorentz",
    "heat_kernel",
    "heat_semigroup",
    "time_integral_identity",
    "Params",
    "constants",
    "kernel_K",
    "poisson_kernel",
    "SweepRecord",
    "gamma_p",
    "moment_integral",
    "moment_limit",
    "ratio_lemma_check",
    "sweep_limit",
    "sweep_s",
    "tail_integral",
    "TestFunction",
    "classical_plap",
    "extension_U",
    "frac_plap",
    "frac_plap_extension",
    "frac_plap_semigroup",
    "frac_plap_singular",
    "from_callable",
    "near_field_scaling_check",
    "u1",
    "u2",
    "EvalResult",
    "QuadratureSpec",
    "bessel_k",
    "gamma_fn",
    "kscr",
]
