"""Exact calculus for the operator ``D = -(1/sinh rho) d/drho``.

A :class:`TermSum` is a finite sum of terms

    coeff * rho^i * cosh(rho)^j * csch(rho)^k * atom(rho),

where the atom is either a Bessel atom ``scrK_{nu + shift, a}(sqrt(rho^2 + y^2))``
with ``scrK_{nu, a}(r) = r^-nu K_nu(a r)``, or the Gaussian ``exp(-rho^2 / (4 t))``.
The basis is closed under ``D``:

    D(rho^i C^j S^k A) = -i rho^(i-1) C^j S^(k+1) A - j rho^i C^(j-1) S^k A
                         + k rho^i C^(j+1) S^(k+2) A + rho^i C^j S^(k+1) (-A'),

with ``-A' = a rho scrK_{nu+1, a}`` for Bessel atoms and ``(rho / 2t) A`` for the
Gaussian. Every term keeps ``j <= k``, so ``C^j S^k = coth^j csch^(k-j)`` is
evaluated in log space without overflow.
"""

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import log_bessel_k

__all__ = [
    "BesselAtom",
    "GaussAtom",
    "Term",
    "TermSum",
    "apply_D",
    "apply_D_pow",
    "eval_term_sum",
    "log_eval_term_sum",
    "MAX_POWER",
]

MAX_POWER = 8
_PRUNE = 1e-300


@dataclass(frozen=True)
class BesselAtom:
    """``scrK_{nu, a}(sqrt(rho^2 + y^2))``."""

    nu: float
    a: float
    y: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("Bessel atom needs a > 0")
        if not self.y >= 0:
            raise ValueError("Bessel atom needs y >= 0")
        if not math.isfinite(self.nu):
            raise ValueError("Bessel atom needs a finite order")

    def to_dict(self):
        return {"kind": "bessel", "nu": self.nu, "a": self.a, "y": self.y}


@dataclass(frozen=True)
class GaussAtom:
    """``exp(-rho^2 / (4 t))``."""

    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("Gauss atom needs t > 0")

    def to_dict(self):
        return {"kind": "gauss", "t": self.t}


@dataclass(frozen=True)
class Term:
    """One monomial ``coeff rho^i cosh^j csch^k`` times the atom.

    ``shift`` raises the Bessel order of the atom; it is 0 for Gaussians.
    """

    coeff: float
    i: int
    j: int
    k: int
    shift: int = 0

    @property
    def key(self):
        return (self.i, self.j, self.k, self.shift)


class TermSum:
    """Immutable sum of :class:`Term` objects sharing one atom."""

    __slots__ = ("atom", "terms")

    def __init__(self, atom, terms=None):
        if terms is None:
            terms = (Term(1.0, 0, 0, 0, 0),)
        merged = {}
        for t in terms:
            merged[t.key] = merged.get(t.key, 0.0) + t.coeff
        self.atom = atom
        self.terms = tuple(
            Term(c, *key) for key, c in sorted(merged.items()) if abs(c) > _PRUNE
        )

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other):
        return isinstance(other, TermSum) and self.atom == other.atom and self.terms == other.terms

    def __hash__(self):
        return hash((self.atom, self.terms))

    def __repr__(self):
        return f"TermSum({self.atom!r}, {len(self.terms)} terms)"

    def _check(self, other):
        if not isinstance(other, TermSum) or other.atom != self.atom:
            raise ValueError("term sums must share the same atom")

    def __add__(self, other):
        self._check(other)
        return TermSum(self.atom, self.terms + other.terms)

    def __mul__(self, alpha):
        alpha = float(alpha)
        return TermSum(self.atom, tuple(Term(alpha * t.coeff, *t.key) for t in self.terms))

    __rmul__ = __mul__

    def max_shift(self):
        return max((t.shift for t in self.terms), default=0)

    def to_json(self):
        """Debug dump: JSON array of ``{coeff, i, j, k, atom}``."""
        out = []
        for t in self.terms:
            atom = self.atom.to_dict()
            if isinstance(self.atom, BesselAtom):
                atom["nu"] = self.atom.nu + t.shift
            out.append({"coeff": t.coeff, "i": t.i, "j": t.j, "k": t.k, "atom": atom})
        return json.dumps(out)


def apply_D(ts):
    """Exact image of a :class:`TermSum` under ``-(1/sinh rho) d/drho``."""
    atom = ts.atom
    out = []
    for t in ts.terms:
        c, i, j, k, sh = t.coeff, t.i, t.j, t.k, t.shift
        if i:
            out.append(Term(-i * c, i - 1, j, k + 1, sh))
        if j:
            out.append(Term(-j * c, i, j - 1, k, sh))
        if k:
            out.append(Term(k * c, i, j + 1, k + 2, sh))
        if isinstance(atom, BesselAtom):
            out.append(Term(atom.a * c, i + 1, j, k + 1, sh + 1))
        else:
            out.append(Term(c / (2.0 * atom.t), i + 1, j, k + 1, sh))
    return TermSum(atom, tuple(out))


@lru_cache(maxsize=256)
def apply_D_pow(ts, m):
    """``m``-fold application of :func:`apply_D` (``0 <= m <= 8``)."""
    if not (0 <= int(m) <= MAX_POWER) or int(m) != m:
        raise ValueError(f"power must be an integer in [0, {MAX_POWER}], got {m!r}")
    for _ in range(int(m)):
        ts = apply_D(ts)
    return ts


def _log_sinh(x):
    # log sinh x for x > 0 without overflow
    return x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0)


def _log_coth(x):
    # log coth x = log((1 + e^{-2x}) / (1 - e^{-2x}))
    e = np.exp(-2.0 * x)
    return np.log1p(e) - np.log(-np.expm1(-2.0 * x))


def _log_atoms(ts, rho):
    """log of the atom value for every order shift present."""
    atom = ts.atom
    if isinstance(atom, GaussAtom):
        val = -rho ** 2 / (4.0 * atom.t)
        return {0: val}
    f = np.sqrt(rho ** 2 + atom.y ** 2) if atom.y > 0 else rho
    logf = np.log(f)
    out = {}
    for sh in sorted({t.shift for t in ts.terms}):
        nu = atom.nu + sh
        out[sh] = -nu * logf + log_bessel_k(nu, atom.a * f)
    return out


def log_eval_term_sum(ts, rho):
    """Return ``(log|S|, sign S)`` of the term sum at ``rho > 0``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise ValueError("eval_term_sum requires rho > 0")
    if not ts.terms:
        return np.full(rho.shape, -np.inf), np.zeros(rho.shape)
    logr = np.log(rho)
    lcoth = _log_coth(rho)
    lcsch = -_log_sinh(rho)
    latoms = _log_atoms(ts, rho)
    logs = []
    signs = []
    for t in ts.terms:
        lg = math.log(abs(t.coeff)) + t.i * logr + t.j * lcoth + (t.k - t.j) * lcsch + latoms[t.shift]
        logs.append(lg)
        signs.append(math.copysign(1.0, t.coeff))
    logs = np.stack(logs)
    signs = np.asarray(signs).reshape((-1,) + (1,) * rho.ndim)
    top = np.max(logs, axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    total = np.sum(signs * np.exp(logs - safe), axis=0)
    with np.errstate(divide="ignore"):
        return safe + np.log(np.abs(total)), np.sign(total)


def eval_term_sum(ts, rho, log_scale=0.0):
    """Evaluate ``exp(log_scale) * sum of terms`` at ``rho > 0``.

    ``log_scale`` lets callers fold an exponential weight (for instance
    ``(n - 1) rho``) into the log-space evaluation.
    """
    lg, sg = log_eval_term_sum(ts, rho)
    res = sg * np.exp(lg + log_scale)
    return float(res) if np.ndim(res) == 0 else res
