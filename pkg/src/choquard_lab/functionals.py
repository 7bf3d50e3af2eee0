"""Deficit, Coulomb norm, energy and Euler-Lagrange residual of radial profiles.

Every functional takes the HLS exponent ``mu`` explicitly; the dimension is
carried by the profile's grid.  With p = 2*_mu the nonlocal integral is

    D(u) = int int |u|^p(x) |u|^p(y) |x-y|^{-mu} dx dy,

the deficit is ||grad u||^2 - S_HL D(u)^{1/p}, and the Euler-Lagrange operator
is Delta u + (|x|^{-mu} * |u|^p) |u|^{p-2} u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .radial import (RadialProfile, dual_norm, grad_norm_sq, integrate, laplacian,
                     poisson_solve)
from .riesz import riesz_potential
from .special_fn import SharpConstants, nl_exponent, sharp_constants

NL_MATCH_RTOL = 1e-8


@dataclass(frozen=True)
class DeficitReport:
    grad_sq: float
    nl_integral: float
    nl_norm: float
    deficit: float
    constants: SharpConstants

    @property
    def relative(self) -> float:
        return self.deficit / self.grad_sq if self.grad_sq > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "grad_sq": self.grad_sq,
            "nl_integral": self.nl_integral,
            "nl_norm": self.nl_norm,
            "deficit": self.deficit,
            "relative_deficit": self.relative,
            "constants": self.constants.to_dict(),
        }


def _p(u: RadialProfile, mu: float) -> float:
    return nl_exponent(u.dim, mu)


def riesz_of_power(u: RadialProfile, mu: float) -> RadialProfile:
    """|x|^{-mu} * |u|^{2*_mu}."""
    return riesz_potential(u.abs_power(_p(u, mu)), mu)


def nl_integral(u: RadialProfile, mu: float) -> float:
    if not np.any(u.values):
        return 0.0
    up = u.abs_power(_p(u, mu))
    return integrate(riesz_potential(up, mu) * up)


def nl_norm(u: RadialProfile, mu: float) -> float:
    """||u||_NL = D(u)^{1/(2 p)}."""
    D = nl_integral(u, mu)
    return max(D, 0.0) ** (1.0 / (2.0 * _p(u, mu)))


def deficit(u: RadialProfile, mu: float) -> DeficitReport:
    consts = sharp_constants(u.dim, mu)
    g = grad_norm_sq(u)
    D = nl_integral(u, mu)
    p = consts.two_star_mu
    d = g - consts.S_hl * max(D, 0.0) ** (1.0 / p)
    return DeficitReport(g, D, max(D, 0.0) ** (1.0 / (2.0 * p)), d, consts)


def nonlinearity(u: RadialProfile, mu: float) -> RadialProfile:
    """F(u) = (|x|^{-mu} * |u|^p) |u|^{p-2} u."""
    p = _p(u, mu)
    return riesz_of_power(u, mu) * u.signed_power(p - 1.0)


def el_residual(u: RadialProfile, mu: float) -> RadialProfile:
    """Delta u + F(u), assembled pointwise (strong form)."""
    return laplacian(u) + nonlinearity(u, mu)


def residual_dual_norm(u: RadialProfile, mu: float) -> float:
    """||Delta u + F(u)|| in the dual of D^{1,2}, via the weak form.

    With phi = (-Delta)^{-1} F(u) the residual equals -Delta(phi - u), so its dual
    norm is ||grad(phi - u)||; no second derivative of u is needed.
    """
    phi = poisson_solve(nonlinearity(u, mu))
    return math.sqrt(max(grad_norm_sq(phi - u), 0.0))


def residual_dual_norm_strong(u: RadialProfile, mu: float) -> float:
    """Same quantity through the pointwise residual and a Poisson solve of it."""
    return dual_norm(el_residual(u, mu))


def energy(u: RadialProfile, mu: float) -> float:
    """E_0(u) = ||grad u||^2 / 2 - D(u) / (2 p)."""
    return 0.5 * grad_norm_sq(u) - nl_integral(u, mu) / (2.0 * _p(u, mu))


def clarkson_check(X, Y, weights=None) -> tuple[float, float]:
    """Parallelogram form of Clarkson's inequality for two gradient fields.

    ``X``, ``Y`` are either radial profiles (their gradients are used) or arrays
    of vector samples of shape (m, d) integrated against ``weights`` (length m).
    Returns (lhs, rhs) = (||(X+Y)/2||^2 + ||(X-Y)/2||^2, ||X||^2/2 + ||Y||^2/2).
    """
    if isinstance(X, RadialProfile) and isinstance(Y, RadialProfile):
        a = grad_norm_sq((X + Y) * 0.5)
        b = grad_norm_sq((X - Y) * 0.5)
        return a + b, 0.5 * grad_norm_sq(X) + 0.5 * grad_norm_sq(Y)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise DomainError("gradient fields must have the same shape")
    if X.ndim == 1:
        X, Y = X[:, None], Y[:, None]
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float)

    def sq(Z):
        return float(np.dot(w, np.sum(Z * Z, axis=1)))

    return sq(0.5 * (X + Y)) + sq(0.5 * (X - Y)), 0.5 * sq(X) + 0.5 * sq(Y)


def deficit_bound_sides(u: RadialProfile, v: RadialProfile, mu: float,
                        rtol: float = NL_MATCH_RTOL) -> tuple[float, float, float]:
    """(||grad(u - v)||^2, deficit(u), ||u||_NL ||u - v||_NL) for an extremal v with ||v||_NL = ||u||_NL."""
    nu, nv = nl_norm(u, mu), nl_norm(v, mu)
    if abs(nu - nv) > rtol * max(nu, nv, 1e-300):
        raise DomainError(f"NL norms differ: {nu!r} vs {nv!r}; match them first")
    diff = u - v
    lhs = grad_norm_sq(diff)
    d = deficit(u, mu).deficit
    return lhs, d, nu * nl_norm(diff, mu)
