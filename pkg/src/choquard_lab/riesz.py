"""Riesz potentials |x|^{-mu} * f of radial profiles, sector by sector.

For f(y) = f(|y|) Y_l(y/|y|) the Funk-Hecke formula reduces the convolution to
``(I^{(l)} f)(r) = int_0^inf k_l(r, s) f(s) s^{N-1} ds`` with

    k_l(r, s) = |S^{N-2}| int_0^pi (r^2 - 2 r s cos(th) + s^2)^{-mu/2} P_l(cos th) sin^{N-2}(th) dth,

P_l the Gegenbauer polynomial of index (N-2)/2 normalised by P_l(1) = 1.
The kernel is homogeneous of degree -mu, so on a log-uniform grid the radial
integral is a discrete convolution in t = ln r.  Its weights are computed once
by product integration: the profile is interpolated by piecewise cubics in t
and the (weakly singular) kernel is integrated exactly against each cardinal
function.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import eval_gegenbauer, hyp2f1, poch

from .errors import DomainError, IntegrabilityError
from .radial import RadialGrid, RadialProfile, integrate
from .special_fn import sphere_area

log = logging.getLogger(__name__)

CACHE_ENV = "CHOQUARD_LAB_CACHE"
CACHE_VERSION = 3

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _check(mu: float, N: int, l: int) -> None:
    if int(N) != N or N < 3:
        raise DomainError(f"N must be an integer >= 3, got {N!r}")
    if not (0.0 < mu < N):
        raise DomainError(f"mu must lie in (0, {N}), got {mu!r}")
    if int(l) != l or l < 0:
        raise DomainError(f"sector l must be a nonnegative integer, got {l!r}")


def _far_coefficient(mu: float, N: int, l: int) -> float:
    return sphere_area(N) * poch(mu / 2, l) / poch(N / 2, l)


def kernel_closed_form(r, s, mu: float, N: int, l: int = 0):
    """k_l(r, s) through the Gauss hypergeometric function (vectorised).

    k_l = |S^{N-1}| R^{-mu} rho^l (mu/2)_l/(N/2)_l 2F1(mu/2 + l, (mu-N+2)/2; N/2 + l; rho^2)
    with R = max(r, s), rho = min(r, s)/R.  Infinite on the diagonal when mu >= N-1.
    """
    _check(mu, N, l)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    R = np.maximum(r, s)
    rho = np.minimum(r, s) / R
    with np.errstate(divide="ignore"):
        val = _far_coefficient(mu, N, l) * R ** (-mu) * rho ** l * hyp2f1(
            mu / 2 + l, (mu - N + 2) / 2, N / 2 + l, rho * rho)
    return val


def _kernel_of_log_ratio(tau: np.ndarray, mu: float, N: int, l: int) -> np.ndarray:
    """kappa_l(e^tau) = k_l(1, e^tau), evaluated stably through |tau|."""
    a = np.abs(tau)
    z = np.exp(-2.0 * a)
    base = _far_coefficient(mu, N, l) * np.exp(-l * a) * hyp2f1(
        mu / 2 + l, (mu - N + 2) / 2, N / 2 + l, z)
    # R^{-mu} is 1 for s < r and e^{-mu tau} for s > r
    return np.where(tau > 0, np.exp(-mu * tau), 1.0) * base


def _angular_integrand(theta, r, s, mu, N, l):
    c = np.cos(theta)
    d2 = (r - s) ** 2 + 4.0 * r * s * np.sin(0.5 * theta) ** 2
    if l == 0:
        P = 1.0
    else:
        a = (N - 2) / 2
        P = eval_gegenbauer(l, a, c) / eval_gegenbauer(l, a, 1.0)
    return d2 ** (-mu / 2) * P * np.sin(theta) ** (N - 2)


def _graded_gauss(r, s, mu, N, l, nodes_per_panel):
    # geometric panels towards theta = 0, where the near-diagonal peak sits
    width = abs(r - s) / math.sqrt(r * s)
    levels = max(4, int(math.ceil(math.log(max(width, 1e-14) / math.pi) / math.log(0.2))) + 4)
    edges = [0.0] + [math.pi * 0.2 ** k for k in range(levels, 0, -1)] + [math.pi]
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        th = 0.5 * (b - a) * x + 0.5 * (a + b)
        total += 0.5 * (b - a) * float(np.dot(w, _angular_integrand(th, r, s, mu, N, l)))
    return total


def angular_kernel(r: float, s: float, mu: float, N: int, l: int = 0,
                   nodes: int = 128, tol: float = 1e-8) -> float:
    """Sector kernel k_l(r, s) by Gauss-Legendre quadrature in the angle.

    Starts from a single ``nodes``-point rule; near the diagonal (where the
    integrand peaks at theta = 0) it switches to geometrically graded panels and
    doubles the nodes until successive values agree to ``tol``.
    Returns ``inf`` on the diagonal when mu >= N-1, where the kernel is
    pointwise infinite (but still integrable in s).
    """
    _check(mu, N, l)
    if r <= 0 or s <= 0:
        raise DomainError("angular_kernel needs r, s > 0")
    if r == s and mu >= N - 1:
        return math.inf
    c = sphere_area(N - 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    th = 0.5 * math.pi * (x + 1.0)
    prev = c * 0.5 * math.pi * float(np.dot(w, _angular_integrand(th, r, s, mu, N, l)))
    m = 16
    for _ in range(8):
        cur = c * _graded_gauss(r, s, mu, N, l, m)
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev, m = cur, 2 * m
    return cur


@dataclass(frozen=True, eq=False)
class AngularKernel:
    """Kernel values k_l(r_i, r_j) on a grid (diagonal replaced by its log-cell average)."""

    grid: RadialGrid
    mu: float
    sector: int
    matrix: np.ndarray


def angular_kernel_matrix(grid: RadialGrid, mu: float, l: int = 0) -> AngularKernel:
    N = grid.dim
    r = grid.r
    M = kernel_closed_form(r[:, None], r[None, :], mu, N, l)
    h = grid.h
    diag = np.empty(grid.n)
    cell = np.array([quad(lambda u: float(_kernel_of_log_ratio(np.array(u), mu, N, l)),
                          -h / 2, 0.0)[0] + quad(lambda u: float(_kernel_of_log_ratio(np.array(u), mu, N, l)),
                                                 0.0, h / 2)[0]]) / h
    diag[:] = cell[0] * r ** (-mu)
    M[np.diag_indices(grid.n)] = diag
    M = 0.5 * (M + M.T)
    M.flags.writeable = False
    return AngularKernel(grid, mu, l, M)


# -- product-integration weights ----------------------------------------------

def _cardinal_pieces(x: np.ndarray, a: int) -> np.ndarray:
    """Piecewise-cubic Lagrange cardinal function of node 0 on [a, a+1]."""
    if a == -2:
        return (x + 3) * (x + 2) * (x + 1) / 6.0
    if a == -1:
        return -(x + 2) * (x + 1) * (x - 1) / 2.0
    if a == 0:
        return (x + 1) * (x - 1) * (x - 2) / 2.0
    return -(x - 1) * (x - 2) * (x - 3) / 6.0


def _compute_weights(h: float, mu: float, N: int, l: int, M: int) -> np.ndarray:
    """w_m = int G(tau) L(tau/h - m) dtau for m = -M..M, G(tau) = kappa_l(e^tau) e^{N tau}."""
    ms = np.arange(-M, M + 1)
    w = np.zeros(ms.size)
    xg = 0.5 * (_GL_X + 1.0)
    wg = 0.5 * _GL_W
    for a in (-2, -1, 0, 1):
        x = a + xg                       # nodes on [a, a+1]
        Lx = _cardinal_pieces(x, a)
        tau = h * (x[None, :] + ms[:, None])
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            G = _kernel_of_log_ratio(tau, mu, N, l) * np.exp(N * tau)
        contrib = h * (G * (wg * Lx)[None, :]).sum(axis=1)
        # pieces with the kernel singularity (tau = 0, i.e. x = -m) at an endpoint
        for i, m in enumerate(ms):
            if a == -m or a + 1 == -m:
                def f(xx, m=m, a=a):
                    tt = h * (xx + m)
                    return float(_kernel_of_log_ratio(np.array(tt), mu, N, l)) * math.exp(N * tt) \
                        * float(_cardinal_pieces(np.array(xx), a))
                val, _ = quad(f, a, a + 1, limit=400, epsabs=0.0, epsrel=1e-13)
                contrib[i] = h * val
        w += contrib
    return w


def _cache_path(h, mu, N, l, M, grid) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    key = f"v{CACHE_VERSION}-n{grid.n}-rmin{grid.r_min!r}-rmax{grid.r_max!r}-N{N}-mu{mu!r}-l{l}-M{M}"
    digest = hashlib.sha1(key.encode()).hexdigest()[:16]
    return Path(root) / f"riesz-{digest}.npy"


class RieszOperator:
    """Discrete I^{(l)}_mu on a grid; weights are built once and reused."""

    def __init__(self, grid: RadialGrid, mu: float, l: int = 0):
        _check(mu, grid.dim, l)
        self.grid, self.mu, self.l = grid, float(mu), int(l)
        N, h, n = grid.dim, grid.h, grid.n
        self.pad = int(math.ceil(math.log(1e4) / h))
        self.M = n - 1 + self.pad
        path = _cache_path(h, mu, N, l, self.M, grid)
        w = None
        if path is not None and path.exists():
            w = np.load(path)
            if w.shape != (2 * self.M + 1,):
                w = None
        if w is None:
            w = _compute_weights(h, self.mu, N, self.l, self.M)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                np.save(path, w)
        w.flags.writeable = False
        self.weights = w
        self.c_far = _far_coefficient(self.mu, N, self.l)

    def _corr_kernel(self) -> np.ndarray:
        # omega(d) for d = -(n-1) .. n-1+2P, d = J - i with J an extended index
        n, P, M = self.grid.n, self.pad, self.M
        d = np.arange(-(n - 1), n + 2 * P)
        return self.weights[d - P + M]

    def _tail_rates(self, p0, pinf):
        N, l = self.grid.dim, self.l
        lo = None if p0 is None else N + l + p0
        hi = None if pinf is None else N - self.mu - l + pinf
        return lo, hi

    def apply_values(self, values: np.ndarray, tail_inner, tail_outer) -> np.ndarray:
        grid, n, P, h = self.grid, self.grid.n, self.pad, self.grid.h
        f = RadialProfile(grid, values, tail_inner, tail_outer)
        ext = f.extended(P)
        a = np.concatenate([np.zeros(n - 1), ext, np.zeros(n - 1)])
        core = np.correlate(a, self._corr_kernel(), mode="valid")
        i = np.arange(n)
        lo, hi = self._tail_rates(tail_inner, tail_outer)
        tails = np.zeros(n)
        if ext[0] != 0.0 and lo is not None:
            if lo <= 0:
                raise IntegrabilityError(f"Riesz potential: inner tail not integrable (rate {lo:.4g})")
            tauL = -(P + i) * h
            tails += self.c_far * ext[0] * np.exp((grid.dim + self.l) * tauL) / lo
        if ext[-1] != 0.0 and hi is not None:
            if hi >= 0:
                raise IntegrabilityError(f"Riesz potential: outer tail not integrable (rate {hi:.4g})")
            tauR = (n - 1 + P - i) * h
            tails += self.c_far * ext[-1] * np.exp((grid.dim - self.mu - self.l) * tauR) / (-hi)
        return grid.r ** (grid.dim - self.mu) * (core + tails)

    def result_tails(self, p0, pinf):
        N, mu, l = self.grid.dim, self.mu, self.l
        if p0 is None:
            ti = float(l)
        else:
            ti = float(l) if p0 + N - mu - l > 0 else p0 + N - mu
        if pinf is None:
            to = -mu - l
        else:
            to = -mu - l if pinf + N + l < 0 else pinf + N - mu
        return ti, float(to)

    def apply(self, f: RadialProfile) -> RadialProfile:
        if f.grid != self.grid:
            raise DomainError("profile grid does not match the operator grid")
        vals = self.apply_values(f.values, f.tail_inner, f.tail_outer)
        ti, to = self.result_tails(f.tail_inner, f.tail_outer)
        return RadialProfile(self.grid, vals, ti, to)

    def matrix(self, tail_inner=0.0, tail_outer=None) -> np.ndarray:
        """Dense n x n matrix K with (I f)_i = sum_j K_ij f_j for given tail powers."""
        grid, n, P, h, M = self.grid, self.grid.n, self.pad, self.grid.h, self.M
        i = np.arange(n)[:, None]
        j = np.arange(n)[None, :]
        K = self.weights[(j - i) + M].copy()
        lo, hi = self._tail_rates(tail_inner, tail_outer)
        ii = np.arange(n)
        if tail_inner is not None:
            k = np.arange(1, P + 1)               # ghost j = -k
            fac = np.exp(-k * h * tail_inner)
            K[:, 0] += (self.weights[(-k[None, :] - ii[:, None]) + M] * fac[None, :]).sum(axis=1)
            if lo is None or lo <= 0:
                raise IntegrabilityError("Riesz matrix: inner tail not integrable")
            K[:, 0] += self.c_far * fac[-1] * np.exp((grid.dim + self.l) * (-(P + ii) * h)) / lo
        if tail_outer is not None:
            k = np.arange(1, P + 1)               # ghost j = n-1+k
            fac = np.exp(k * h * tail_outer)
            K[:, -1] += (self.weights[(n - 1 + k[None, :] - ii[:, None]) + M] * fac[None, :]).sum(axis=1)
            if hi is None or hi >= 0:
                raise IntegrabilityError("Riesz matrix: outer tail not integrable")
            K[:, -1] += self.c_far * fac[-1] * np.exp(
                (grid.dim - self.mu - self.l) * ((n - 1 + P - ii) * h)) / (-hi)
        return grid.r[:, None] ** (grid.dim - self.mu) * K


@lru_cache(maxsize=16)
def riesz_operator(grid: RadialGrid, mu: float, l: int = 0) -> RieszOperator:
    return RieszOperator(grid, float(mu), int(l))


def riesz_potential(f: RadialProfile, mu: float, l: int = 0) -> RadialProfile:
    """(I_mu^{(l)} f)(r) = int k_l(r, s) f(s) s^{N-1} ds on the grid of ``f``."""
    return riesz_operator(f.grid, float(mu), int(l)).apply(f)


def double_integral(f: RadialProfile, g: RadialProfile, mu: float) -> float:
    """int int f(x) g(y) |x-y|^{-mu} dx dy for radial f, g (symmetrised)."""
    a = integrate(riesz_potential(f, mu) * g)
    if f is g:
        return a
    b = integrate(riesz_potential(g, mu) * f)
    return 0.5 * (a + b)


# -- two-center integrals ------------------------------------------------------

def _two_center_radial(p, q, b1, b2, per_unit: int) -> float:
    from .bubbles import radial_W
    lo = 1e-6 / max(b1.scale, b2.scale)
    hi = 1e6 / min(b1.scale, b2.scale)
    n = int(math.ceil(per_unit * math.log(hi / lo))) + 1
    t = np.linspace(math.log(lo), math.log(hi), n)
    r = np.exp(t)
    y = radial_W(b1, r) ** p * radial_W(b2, r) ** q * r ** b1.dim
    return sphere_area(b1.dim) * float(np.trapezoid(y, t))


def _composite_gauss(a: float, b: float, panels: int, order: int = 8):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _two_center_axisymmetric(p, q, b1, b2, nodes: int) -> float:
    from .bubbles import radial_W
    N = b1.dim
    d = float(np.linalg.norm(np.asarray(b2.center) - np.asarray(b1.center)))
    l1, l2 = b1.scale, b2.scale
    lmin, lmax = min(l1, l2), max(l1, l2)
    reach = 1e6 / lmin
    # split the axis where both cores are equally far in their own units
    zm = d * l2 / (l1 + l2)
    panels = max(8, nodes // 8)
    zs, wz = [], []
    for c, lam, lo, hi in ((0.0, l1, -reach, zm), (d, l2, zm, d + reach)):
        u, w = _composite_gauss(math.asinh(lam * (lo - c)), math.asinh(lam * (hi - c)), panels)
        zs.append(c + np.sinh(u) / lam)
        wz.append(w * np.cosh(u) / lam)
    z, wz = np.concatenate(zs), np.concatenate(wz)
    s, ws = _composite_gauss(math.log(1e-6 / lmax), math.log(reach), panels)
    rho = np.exp(s)
    Z, R = np.meshgrid(z, rho, indexing="ij")
    f = radial_W(b1, np.hypot(Z, R)) ** p * radial_W(b2, np.hypot(Z - d, R)) ** q * R ** (N - 1)
    return sphere_area(N - 1) * float(wz @ f @ ws)


def two_center_integral(p: float, q: float, b1, b2, nodes: int = 400) -> float:
    """int W[b1]^p W[b2]^q dx.

    Concentric bubbles use a 1-D log-radius trapezoid; otherwise the integrand
    is axisymmetric about the line through both centers and is integrated in
    cylindrical coordinates (z, rho) by composite Gauss-Legendre rules in
    log rho and in sinh-stretched z about each core.
    """
    if (b1.dim, b1.mu) != (b2.dim, b2.mu):
        raise DomainError("two-center integral needs bubbles with the same (N, mu)")
    if p < 0 or q < 0:
        raise DomainError("exponents must be nonnegative")
    N = b1.dim
    if (N - 2) * (p + q) <= N:
        raise IntegrabilityError(f"W^{p} W^{q} is not integrable at infinity in dimension {N}")
    if b1.center == b2.center:
        return _two_center_radial(p, q, b1, b2, per_unit=50)
    return _two_center_axisymmetric(p, q, b1, b2, nodes)
