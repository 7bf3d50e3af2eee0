"""Radial functions on a log-uniform grid and the radial calculus built on them.

All quadratures run in the variable t = ln r, where a radial integral reads
``int f(r) r^{N-1} dr = int f r^N dt``.  For the smooth, power-law-decaying
profiles used here the trapezoid rule in t is spectrally accurate, so the only
real discretisation error comes from the derivative stencils (4th order).

Outside [r_min, r_max] each profile is continued by the power laws
``f(r_1) (r/r_1)^{p_0}`` and ``f(r_n) (r/r_n)^{p_inf}``; a tail power of ``None``
means the profile is continued by zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline

from .errors import DomainError, IntegrabilityError
from .special_fn import sphere_area

Tail = Optional[float]

TAIL_FIT_FRACTION = 0.05


@dataclass(frozen=True)
class RadialGrid:
    """Log-uniform radii r_1 < ... < r_n in dimension ``dim``."""

    dim: int
    n: int = 2048
    r_min: float = 1e-4
    r_max: float = 1e4

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise DomainError(f"grid dimension must be an integer >= 3, got {self.dim!r}")
        if int(self.n) != self.n or self.n < 64:
            raise DomainError(f"grid needs n >= 64 nodes, got {self.n!r}")
        if not (0.0 < self.r_min < self.r_max) or not math.isfinite(self.r_max):
            raise DomainError(f"need 0 < r_min < r_max, got ({self.r_min}, {self.r_max})")

    @cached_property
    def t(self) -> np.ndarray:
        t = np.linspace(math.log(self.r_min), math.log(self.r_max), self.n)
        t.flags.writeable = False
        return t

    @cached_property
    def r(self) -> np.ndarray:
        r = np.exp(self.t)
        r.flags.writeable = False
        return r

    @property
    def h(self) -> float:
        return (math.log(self.r_max) - math.log(self.r_min)) / (self.n - 1)

    @cached_property
    def trap(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        w.flags.writeable = False
        return w

    @cached_property
    def r_mid(self) -> np.ndarray:
        rm = np.exp(self.t[:-1] + 0.5 * self.h)
        rm.flags.writeable = False
        return rm

    @property
    def area(self) -> float:
        return sphere_area(self.dim)

    def refined(self, factor: int = 2) -> "RadialGrid":
        """Nested refinement with ``factor`` times as many intervals."""
        return RadialGrid(self.dim, factor * (self.n - 1) + 1, self.r_min, self.r_max)

    def with_dim(self, dim: int) -> "RadialGrid":
        return RadialGrid(dim, self.n, self.r_min, self.r_max)

    def to_dict(self) -> dict:
        return {"n": self.n, "r_min": self.r_min, "r_max": self.r_max}


def _combine_tail(a: Tail, b: Tail, pick) -> Tail:
    if a is None:
        return b
    if b is None:
        return a
    return pick(a, b)


def fit_tail_power(r: np.ndarray, values: np.ndarray, side: str,
                   fraction: float = TAIL_FIT_FRACTION) -> Tail:
    """Least-squares power law on the first/last ``fraction`` of the nodes.

    Returns ``None`` when the window changes sign or vanishes, in which case
    the profile is continued by zero on that side.
    """
    m = max(4, int(round(fraction * len(r))))
    sl = slice(0, m) if side == "inner" else slice(len(r) - m, len(r))
    v = values[sl]
    if np.any(v == 0) or not (np.all(v > 0) or np.all(v < 0)):
        return None
    slope = np.polyfit(np.log(r[sl]), np.log(np.abs(v)), 1)[0]
    return float(slope)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A scalar function of |x| sampled on a :class:`RadialGrid`."""

    grid: RadialGrid
    values: np.ndarray
    tail_inner: Tail = 0.0
    tail_outer: Tail = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.n,):
            raise DomainError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("profile values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        for name in ("tail_inner", "tail_outer"):
            p = getattr(self, name)
            if p is not None:
                object.__setattr__(self, name, float(p))

    # -- construction -------------------------------------------------------
    @classmethod
    def from_function(cls, grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray],
                      tail_inner: Tail = 0.0, tail_outer: Tail = None) -> "RadialProfile":
        return cls(grid, fn(grid.r), tail_inner, tail_outer)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialProfile":
        return cls(grid, np.zeros(grid.n), None, None)

    @classmethod
    def with_fitted_tails(cls, grid: RadialGrid, values) -> "RadialProfile":
        values = np.asarray(values, dtype=float)
        return cls(grid, values,
                   fit_tail_power(grid.r, values, "inner"),
                   fit_tail_power(grid.r, values, "outer"))

    def refit_tails(self) -> "RadialProfile":
        return RadialProfile.with_fitted_tails(self.grid, self.values)

    def with_tails(self, tail_inner: Tail, tail_outer: Tail) -> "RadialProfile":
        return RadialProfile(self.grid, self.values, tail_inner, tail_outer)

    # -- convenience --------------------------------------------------------
    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @property
    def dim(self) -> int:
        return self.grid.dim

    def _check_grid(self, other: "RadialProfile") -> None:
        if other.grid != self.grid:
            raise DomainError("profiles live on different grids")

    def __add__(self, other):
        if isinstance(other, RadialProfile):
            self._check_grid(other)
            return RadialProfile(self.grid, self.values + other.values,
                                 _combine_tail(self.tail_inner, other.tail_inner, min),
                                 _combine_tail(self.tail_outer, other.tail_outer, max))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, RadialProfile):
            return self + (-other)
        return NotImplemented

    def __neg__(self):
        return RadialProfile(self.grid, -self.values, self.tail_inner, self.tail_outer)

    def __mul__(self, other):
        if isinstance(other, RadialProfile):
            self._check_grid(other)
            ti = None if self.tail_inner is None or other.tail_inner is None \
                else self.tail_inner + other.tail_inner
            to = None if self.tail_outer is None or other.tail_outer is None \
                else self.tail_outer + other.tail_outer
            return RadialProfile(self.grid, self.values * other.values, ti, to)
        c = float(other)
        return RadialProfile(self.grid, c * self.values, self.tail_inner, self.tail_outer)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def abs_power(self, a: float) -> "RadialProfile":
        """|f|^a with the tail powers scaled accordingly (a > 0)."""
        if a <= 0:
            raise DomainError("abs_power needs a > 0")
        ti = None if self.tail_inner is None else a * self.tail_inner
        to = None if self.tail_outer is None else a * self.tail_outer
        return RadialProfile(self.grid, np.abs(self.values) ** a, ti, to)

    def signed_power(self, a: float) -> "RadialProfile":
        """|f|^{a-1} f."""
        p = self.abs_power(a)
        return RadialProfile(self.grid, np.sign(self.values) * p.values, p.tail_inner, p.tail_outer)

    def times_power_of_r(self, a: float) -> "RadialProfile":
        ti = None if self.tail_inner is None else self.tail_inner + a
        to = None if self.tail_outer is None else self.tail_outer + a
        return RadialProfile(self.grid, self.values * self.grid.r ** a, ti, to)

    def ghost_values(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Tail continuation on ``k`` nodes beyond each end (ordered by radius)."""
        h = self.grid.h
        steps = np.arange(k, 0, -1)
        left = np.zeros(k) if self.tail_inner is None else \
            self.values[0] * np.exp(-steps * h * self.tail_inner)
        right = np.zeros(k) if self.tail_outer is None else \
            self.values[-1] * np.exp(steps[::-1] * h * self.tail_outer)
        return left, right

    def extended(self, k: int) -> np.ndarray:
        left, right = self.ghost_values(k)
        return np.concatenate([left, self.values, right])


# -- tail bookkeeping ---------------------------------------------------------

def edge_integral(value: float, rate: Tail, side: str, what: str = "integral") -> float:
    """Integral in t of ``value * exp(rate (t - t_edge))`` over the region beyond an edge."""
    if value == 0.0 or rate is None:
        return 0.0
    if side == "inner":
        if rate <= 0.0:
            raise IntegrabilityError(f"{what}: inner tail not integrable (rate {rate:.4g} <= 0)")
        return value / rate
    if rate >= 0.0:
        raise IntegrabilityError(f"{what}: outer tail not integrable (rate {rate:.4g} >= 0)")
    return -value / rate


def _rate(p: Tail, shift: float) -> Tail:
    return None if p is None else p + shift


def integrate(f: RadialProfile) -> float:
    """int_{R^N} f(|x|) dx including the power-law tails."""
    g, N = f.grid, f.grid.dim
    y = f.values * g.r ** N
    core = float(np.dot(g.trap, y))
    inner = edge_integral(y[0], _rate(f.tail_inner, N), "inner", "integrate")
    outer = edge_integral(y[-1], _rate(f.tail_outer, N), "outer", "integrate")
    return g.area * (core + inner + outer)


def inner_product(f: RadialProfile, g: RadialProfile) -> float:
    return integrate(f * g)


def lp_norm(f: RadialProfile, p: float) -> float:
    """(int |f|^p dx)^{1/p}."""
    if p < 1:
        raise DomainError(f"lp_norm needs p >= 1, got {p}")
    return integrate(f.abs_power(p)) ** (1.0 / p)


# -- derivatives --------------------------------------------------------------

def staggered_derivative_matrix(grid: RadialGrid, tail_inner: Tail, tail_outer: Tail):
    """Sparse (n-1) x n matrix of d/dt at the midpoints t_{j+1/2}.

    Fourth order: (f_{j-1} - 27 f_j + 27 f_{j+1} - f_{j+2}) / (24 h), with the
    ghost values f_{-1}, f_n folded in through the tail powers.
    """
    n, h = grid.n, grid.h
    rows, cols, vals = [], [], []
    coef = (1.0, -27.0, 27.0, -1.0)
    for j in range(n - 1):
        for off, c in zip((-1, 0, 1, 2), coef):
            k = j + off
            if k < 0:
                if tail_inner is None:
                    continue
                rows.append(j); cols.append(0); vals.append(c * math.exp(-h * tail_inner))
            elif k > n - 1:
                if tail_outer is None:
                    continue
                rows.append(j); cols.append(n - 1); vals.append(c * math.exp(h * tail_outer))
            else:
                rows.append(j); cols.append(k); vals.append(c)
    D = sparse.csr_matrix((np.array(vals) / (24.0 * h), (rows, cols)), shape=(n - 1, n))
    return D


def _staggered_dt(f: RadialProfile) -> np.ndarray:
    e = f.extended(1)
    h = f.grid.h
    return (e[:-3] - 27.0 * e[1:-2] + 27.0 * e[2:-1] - e[3:]) / (24.0 * h)


def _dt(f: RadialProfile) -> np.ndarray:
    """Centred 4th-order d/dt at the nodes (two ghost nodes per side)."""
    e = f.extended(2)
    return (e[:-4] - 8.0 * e[1:-3] + 8.0 * e[3:-1] - e[4:]) / (12.0 * f.grid.h)


def radial_derivative(f: RadialProfile) -> RadialProfile:
    """f'(r) by centred differences in ln r; tail powers shift by -1."""
    vals = _dt(f) / f.grid.r
    ti = None if f.tail_inner is None else f.tail_inner - 1.0
    to = None if f.tail_outer is None else f.tail_outer - 1.0
    if f.tail_inner == 0.0:
        # d/dr of a constant continuation vanishes; the true derivative is O(r)
        ti = 1.0
    return RadialProfile(f.grid, vals, ti, to)


def grad_inner(f: RadialProfile, g: RadialProfile, l: int = 0) -> float:
    """int (f' g' + l(l+N-2) f g / r^2) r^{N-1} dr * |S^{N-1}|.

    For l = 0 this is the D^{1,2} inner product of two radial functions.
    """
    f._check_grid(g)
    grid, N = f.grid, f.grid.dim
    df, dg = _staggered_dt(f), _staggered_dt(g)
    core = grid.h * float(np.sum(df * dg * grid.r_mid ** (N - 2)))
    c = l * (l + N - 2)
    if c:
        core += c * float(np.dot(grid.trap, f.values * g.values * grid.r ** (N - 2)))
    tails = 0.0
    for side, idx, pf, pg in (("inner", 0, f.tail_inner, g.tail_inner),
                              ("outer", -1, f.tail_outer, g.tail_outer)):
        if pf is None or pg is None:
            continue
        v = f.values[idx] * g.values[idx] * (pf * pg + c) * grid.r[idx] ** (N - 2)
        tails += edge_integral(v, pf + pg + N - 2, side, "grad_inner")
    return grid.area * (core + tails)


def grad_norm_sq(f: RadialProfile, l: int = 0) -> float:
    """||grad f||_{L^2}^2 (sector ``l`` gradient energy when l > 0)."""
    return grad_inner(f, f, l)


def laplacian(f: RadialProfile) -> RadialProfile:
    """Delta f = r^{-N} d/dt (r^{N-2} df/dt), conservative form, 4th order."""
    grid, N, h = f.grid, f.grid.dim, f.grid.h
    e = f.extended(3)
    # midpoint derivatives j+1/2 for j = -2 .. n  (n+3 values)
    d = (e[:-3] - 27.0 * e[1:-2] + 27.0 * e[2:-1] - e[3:]) / (24.0 * h)
    tm = grid.t[0] + h * (np.arange(-2, grid.n + 1) + 0.5)
    flux = np.exp((N - 2) * tm) * d
    div = (flux[:-3] - 27.0 * flux[1:-2] + 27.0 * flux[2:-1] - flux[3:]) / (24.0 * h)
    vals = div / grid.r ** N
    ti = None if f.tail_inner is None else f.tail_inner - 2.0
    to = None if f.tail_outer is None else f.tail_outer - 2.0
    if f.tail_inner == 0.0:
        ti = 0.0
    return RadialProfile(grid, vals, ti, to)


# -- Poisson problem ----------------------------------------------------------

def _cumulative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    return CubicSpline(t, y).antiderivative()(t)


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    phi: RadialProfile
    dphi: np.ndarray  # phi'(r) at the nodes
    l: int


def _solve_sector(g: RadialProfile, l: int) -> PoissonSolution:
    """Green's-function solve of -Delta phi = g in angular sector l.

    phi(r) = [r^{2-N-l} A(r) + r^l B(r)] / (2l+N-2), with
    A(r) = int_0^r s^{l+N-1} g ds and B(r) = int_r^inf s^{1-l} g ds.
    """
    grid, N = g.grid, g.grid.dim
    r, t = grid.r, grid.t
    yA = r ** (l + N) * g.values
    yB = r ** (2 - l) * g.values
    a0 = edge_integral(yA[0], _rate(g.tail_inner, l + N), "inner", "poisson source")
    b_inf = edge_integral(yB[-1], _rate(g.tail_outer, 2 - l), "outer", "poisson source")
    cumA = _cumulative(t, yA)
    cumB = _cumulative(t, yB)
    A = a0 + cumA
    B = b_inf + (cumB[-1] - cumB)
    k = 2 * l + N - 2
    phi = (A * r ** (2 - N - l) + B * r ** l) / k
    dphi = (-(l + N - 2) * A * r ** (1 - N - l) + l * B * r ** (l - 1)) / k
    prof = RadialProfile(grid, phi, float(l), float(2 - N - l))
    return PoissonSolution(prof, dphi, l)


def poisson_solve(g: RadialProfile, l: int = 0) -> RadialProfile:
    """phi with -Delta phi = g (radially, or in sector l), phi -> 0 at infinity."""
    return _solve_sector(g, l).phi


def dual_norm(g: RadialProfile, l: int = 0) -> float:
    """||g||_{(D^{1,2})^{-1}} = ||grad phi||_{L^2} where -Delta phi = g."""
    sol = _solve_sector(g, l)
    grid, N = g.grid, g.grid.dim
    r = grid.r
    c = l * (l + N - 2)
    phi, dphi = sol.phi.values, sol.dphi
    dens = (dphi ** 2 * r ** 2 + c * phi ** 2) * r ** (N - 2)
    core = float(np.dot(grid.trap, dens))
    inner = edge_integral(dens[0], N - 2.0 + 2 * l, "inner", "dual_norm")
    outer = edge_integral(dens[-1], 2.0 - N - 2 * l, "outer", "dual_norm")
    val = grid.area * (core + inner + outer)
    return math.sqrt(max(val, 0.0))
