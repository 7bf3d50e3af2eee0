"""Distance from a radial profile to sums of concentric bubbles.

The fit minimises J = ||grad(u - sum_i alpha_i W[0, e^{t_i}])||^2 over
(alpha, t) by Gauss-Newton in the D^{1,2} inner product, with step halving.
The tangent columns are W_i (for alpha_i) and alpha_i lambda_i dW_i/dlambda
(for t_i); their Gram matrix is the Gauss-Newton normal matrix.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import argrelmax

from .bubbles import Bubble, BubbleFamily, bubble_profile, d_lambda_W, family_profile
from .errors import DomainError
from .functionals import nl_norm
from .radial import RadialProfile, grad_inner, grad_norm_sq, integrate
from .riesz import riesz_potential
from .special_fn import nl_exponent

log = logging.getLogger(__name__)

MAX_ITER = 200
GRAD_TOL = 1e-13
COLLISION_RATIO = 1.01


@dataclass(frozen=True)
class FitResult:
    config: BubbleFamily
    distance: float
    iterations: int
    converged: bool
    orth_residuals: tuple
    objective_gradient: float = 0.0
    starts: int = 1
    degenerate: bool = False

    @property
    def lambdas(self) -> list:
        return [b.scale for b in self.config.bubbles]

    @property
    def alphas(self) -> list:
        return list(self.config.coefficients)

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "alpha": self.alphas,
            "lambda": self.lambdas,
            "converged": self.converged,
            "iterations": self.iterations,
            "orth_residuals": [list(t) for t in self.orth_residuals],
            "degenerate": self.degenerate,
        }


@dataclass
class _State:
    alpha: np.ndarray
    t: np.ndarray
    J: float = math.inf
    rho: RadialProfile | None = None
    extra: dict = field(default_factory=dict)


def _sigma(grid, N, mu, alpha, t) -> RadialProfile:
    fam = BubbleFamily.concentric(N, mu, np.exp(t), alpha)
    return family_profile(fam, grid)


def _columns(grid, N, mu, alpha, t) -> list:
    cols = []
    for a, ti in zip(alpha, t):
        b = Bubble(N, mu, math.exp(ti))
        cols.append(bubble_profile(b, grid))
        cols.append(d_lambda_W(b, grid) * (a * b.scale))
    return cols


def _gram(cols) -> np.ndarray:
    m = len(cols)
    G = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            G[i, j] = G[j, i] = grad_inner(cols[i], cols[j])
    return G


def _best_alpha(u, grid, N, mu, t) -> np.ndarray:
    Ws = [bubble_profile(Bubble(N, mu, math.exp(ti)), grid) for ti in t]
    G = np.array([[grad_inner(a, b) for b in Ws] for a in Ws])
    rhs = np.array([grad_inner(u, w) for w in Ws])
    return np.linalg.lstsq(G, rhs, rcond=None)[0]


def _gauss_newton(u: RadialProfile, mu: float, t0: np.ndarray, unorm: float,
                  max_iter: int = MAX_ITER) -> tuple[_State, int, bool, float]:
    grid, N = u.grid, u.dim
    t = np.array(t0, dtype=float)
    alpha = _best_alpha(u, grid, N, mu, t)
    rho = u - _sigma(grid, N, mu, alpha, t)
    J = grad_norm_sq(rho)
    gnorm = math.inf
    for it in range(1, max_iter + 1):
        cols = _columns(grid, N, mu, alpha, t)
        G = _gram(cols)
        g = np.array([grad_inner(rho, c) for c in cols])
        scale = np.sqrt(np.maximum(np.diag(G), 1e-300))
        gnorm = float(np.max(np.abs(g) / scale))
        if gnorm <= GRAD_TOL * unorm:
            return _State(alpha, t, J, rho), it - 1, True, gnorm
        Gs = G / np.outer(scale, scale)
        step = np.linalg.lstsq(Gs, g / scale, rcond=1e-14)[0] / scale
        da, dt = step[0::2], step[1::2]
        s = 1.0
        accepted = False
        for _ in range(40):
            a_new, t_new = alpha + s * da, t + s * dt
            rho_new = u - _sigma(grid, N, mu, a_new, t_new)
            J_new = grad_norm_sq(rho_new)
            if J_new <= J:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            # no descent left at working precision
            return _State(alpha, t, J, rho), it, gnorm <= 1e-8 * unorm, gnorm
        small = float(np.max(np.abs(s * step))) < 1e-15 * max(1.0, float(np.max(np.abs(np.r_[alpha, t]))))
        alpha, t, rho, J = a_new, t_new, rho_new, J_new
        if small:
            break
    return _State(alpha, t, J, rho), max_iter, gnorm <= 1e-8 * unorm, gnorm


def core_scales(u: RadialProfile, count: int) -> list:
    """Scales 1/r at the ``count`` largest local maxima of r^{(N-2)/2}|u|."""
    prof = np.abs(u.values) * u.r ** ((u.dim - 2) / 2)
    idx = argrelmax(np.r_[0.0, prof, 0.0])[0] - 1
    idx = sorted(idx, key=lambda i: -prof[i])[:count]
    return sorted(1.0 / u.r[i] for i in idx)


def _pad_starts(scales: list, count: int) -> list:
    scales = list(scales) or [1.0]
    k = 0
    while len(scales) < count:
        k += 1
        scales.append(scales[0] * 10.0 ** (2 * k * (-1) ** k))
    return sorted(scales)


def _result(u, mu, st: _State, iters, converged, gnorm, starts) -> FitResult:
    N = u.dim
    fam = BubbleFamily.concentric(N, mu, np.exp(st.t), st.alpha).sorted()
    dist = math.sqrt(max(st.J, 0.0))
    lam = [b.scale for b in fam.bubbles]
    if len(lam) > 1 and min(b / a for a, b in zip(lam[:-1], lam[1:])) < COLLISION_RATIO:
        warnings.warn("fit collapsed two bubbles onto the same scale", RuntimeWarning, stacklevel=3)
    orth = orthogonality_residuals(st.rho, fam) if st.rho is not None else ()
    return FitResult(fam, dist, iters, converged, tuple(orth), gnorm, starts)


def _degenerate(u: RadialProfile, mu: float, kappa: int) -> FitResult:
    fam = BubbleFamily.concentric(u.dim, mu, [1.0] * kappa, [0.0] * kappa)
    return FitResult(fam, 0.0, 0, True, tuple((0.0, 0.0, 0.0) for _ in range(kappa)),
                     0.0, 0, True)


def fit_sum(u: RadialProfile, mu: float, kappa: int, starts: list | None = None,
            max_iter: int = MAX_ITER) -> FitResult:
    """Best approximation of ``u`` by sum_i alpha_i W[0, lambda_i], i = 1..kappa."""
    if int(kappa) != kappa or kappa < 1:
        raise DomainError(f"kappa must be a positive integer, got {kappa!r}")
    unorm = math.sqrt(max(grad_norm_sq(u), 0.0))
    if unorm == 0.0:
        return _degenerate(u, mu, kappa)
    if starts is None:
        starts = [_pad_starts(core_scales(u, kappa), kappa)]
    best = None
    for s in starts:
        st, it, conv, gn = _gauss_newton(u, mu, np.log(np.asarray(s, dtype=float)), unorm, max_iter)
        if best is None or st.J < best[0].J:
            best = (st, it, conv, gn)
    return _result(u, mu, *best, starts=len(starts))


def project_single(u: RadialProfile, mu: float, max_iter: int = MAX_ITER) -> FitResult:
    """dist(u, {c W[0, lambda]}) with multistart over lambda in {2^k} and the core detector."""
    lo, hi = 1.0 / u.grid.r_max, 1.0 / u.grid.r_min
    starts = [[2.0 ** k] for k in range(-12, 13) if lo * 100 <= 2.0 ** k <= hi / 100]
    starts = [[s] for s in core_scales(u, 1)] + starts
    return fit_sum(u, mu, 1, starts=starts, max_iter=max_iter)


def orthogonality_residuals(rho: RadialProfile, fam: BubbleFamily,
                            form: str = "gradient") -> list:
    """Per bubble: pairings of rho with W_i, dW_i/dlambda and d W_i/dxi.

    Each pairing is divided by the D^{1,2} norm of the tangent direction, so
    it is the component of rho along that unit direction.  ``form`` selects the
    gradient pairings <grad rho, grad T> or their nonlocal equivalents
    int rho (-Delta T), with -Delta T expanded through the equation for W.
    The translation pairing is zero identically for radial rho (sector l = 1
    is orthogonal to radial functions).
    """
    if form not in ("gradient", "nonlocal"):
        raise DomainError("form must be 'gradient' or 'nonlocal'")
    grid, mu = rho.grid, fam.mu
    out = []
    for b in fam.bubbles:
        W = bubble_profile(b, grid)
        DW = d_lambda_W(b, grid)
        nW = math.sqrt(grad_norm_sq(W))
        nD = math.sqrt(grad_norm_sq(DW))
        if form == "gradient":
            e1 = grad_inner(rho, W)
            e2 = grad_inner(rho, DW)
        else:
            p = nl_exponent(b.dim, mu)
            V = riesz_potential(W.abs_power(p), mu)
            e1 = integrate(V * W.abs_power(p - 1) * rho)
            lin = riesz_potential(W.abs_power(p - 1) * DW, mu) * W.abs_power(p - 1) * p \
                + V * W.abs_power(p - 2) * DW * (p - 1)
            e2 = integrate(lin * rho)
        out.append((float(e1 / nW), float(e2 / nD), 0.0))
    return out


def match_nl_norm(v: RadialProfile, target: float, mu: float) -> RadialProfile:
    """(target / ||v||_NL) v."""
    n = nl_norm(v, mu)
    if n == 0.0:
        raise DomainError("cannot rescale a profile with zero NL norm")
    return v * (target / n)
