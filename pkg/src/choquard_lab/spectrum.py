"""Linearised eigenvalue problem at a bubble, one angular sector at a time.

For omega = f(r) Y_l the two quadratic forms are

    A[f] = int (f'^2 + l(l+N-2) f^2/r^2) + int V f^2,
    B[f] = int (I^{(l)}(W^{p-1} f)) W^{p-1} f + int V f^2,

with V = (|x|^{-mu} * W^p) W^{p-2} and p = 2*_mu.  Eigenvalues solve
A f = nu B f.  In sector 0 the bubble itself gives nu = 1 and the scale
derivative gives nu = p; in sector 1 the translation modes give nu = p.

Nodal unknowns f_j on the log grid; the gradient form uses staggered 4th-order
differences (no sawtooth null space), the nonlocal form the product-integration
Riesz matrix.  Beyond the grid, sector-l eigenfunctions are continued by
r^l (inner) and r^{2-N-l} (outer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bubbles import Bubble, bubble_profile
from .errors import CapabilityError, DomainError, NumericalError
from .radial import (RadialGrid, RadialProfile, grad_norm_sq, integrate,
                     poisson_solve, staggered_derivative_matrix)
from .riesz import riesz_operator, riesz_potential
from .special_fn import nl_exponent

ANCHORED_SECTORS = (0, 1)
MU_MAX = 4.0


def sector_tails(N: int, l: int) -> tuple[float, float]:
    return float(l), float(2 - N - l)


@dataclass(frozen=True, eq=False)
class SectorOperator:
    grid: RadialGrid
    bubble: Bubble
    sector: int
    A: np.ndarray
    B: np.ndarray

    @property
    def tails(self) -> tuple[float, float]:
        return sector_tails(self.grid.dim, self.sector)

    def profile(self, values) -> RadialProfile:
        ti, to = self.tails
        return RadialProfile(self.grid, values, ti, to)

    def quotient(self, f) -> float:
        """Matrix form of A[f]/B[f]."""
        v = f.values if isinstance(f, RadialProfile) else np.asarray(f, dtype=float)
        return float(v @ self.A @ v) / float(v @ self.B @ v)

    def energy_cosine(self, f, g) -> float:
        """|<f, g>_A| / (|f|_A |g|_A)."""
        a = f.values if isinstance(f, RadialProfile) else np.asarray(f, dtype=float)
        b = g.values if isinstance(g, RadialProfile) else np.asarray(g, dtype=float)
        return abs(float(a @ self.A @ b)) / math.sqrt(float(a @ self.A @ a) * float(b @ self.A @ b))


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    sector: int
    eigenvalues: tuple
    eigenvectors: tuple
    deflated: int = 0

    def to_dict(self) -> dict:
        return {"sector": self.sector, "eigenvalues": list(self.eigenvalues),
                "deflated": self.deflated}


def potential(b: Bubble, grid: RadialGrid) -> RadialProfile:
    """V = (|x|^{-mu} * W^p) W^{p-2}."""
    p = nl_exponent(b.dim, b.mu)
    W = bubble_profile(b, grid)
    return riesz_potential(W.abs_power(p), b.mu) * W.abs_power(p - 2.0)


def _edge_weight(r_edge: float, N: int, rate: float, side: str) -> float:
    """int beyond the edge of r^N e^{rate (t - t_edge)} dt, normalised to the edge value."""
    if (side == "inner" and rate <= 0) or (side == "outer" and rate >= 0):
        raise NumericalError(f"sector form not integrable at the {side} edge (rate {rate:.4g})")
    return r_edge ** N / abs(rate)


def assemble(grid: RadialGrid, b: Bubble, l: int, exploratory: bool = False) -> SectorOperator:
    """Matrices of A and B on sector ``l`` (0 and 1 anchored; l >= 2 only with ``exploratory``)."""
    if int(l) != l or l < 0:
        raise DomainError(f"sector must be a nonnegative integer, got {l!r}")
    if l not in ANCHORED_SECTORS and not exploratory:
        raise CapabilityError(f"sector l={l} carries no anchored spectrum; pass exploratory=True")
    if grid.dim != b.dim:
        raise DomainError("grid and bubble dimensions differ")
    if b.mu > MU_MAX:
        raise CapabilityError(f"spectrum needs mu <= {MU_MAX}, got {b.mu}")
    N, mu, h, r = grid.dim, b.mu, grid.h, grid.r
    p = nl_exponent(N, mu)
    c = l * (l + N - 2)
    p0, pinf = sector_tails(N, l)
    area = grid.area

    D = staggered_derivative_matrix(grid, p0, pinf).toarray()
    A = D.T @ (D * (h * grid.r_mid ** (N - 2))[:, None])
    A[0, 0] += (p0 * p0 + c) * _edge_weight(r[0], N - 2, 2 * p0 + N - 2, "inner")
    A[-1, -1] += (pinf * pinf + c) * _edge_weight(r[-1], N - 2, 2 * pinf + N - 2, "outer")
    A[np.diag_indices(grid.n)] += c * grid.trap * r ** (N - 2)

    V = potential(b, grid)
    mass = grid.trap * r ** N * V.values
    mass[0] += V.values[0] * _edge_weight(r[0], N, 2 * p0 + V.tail_inner + N, "inner")
    mass[-1] += V.values[-1] * _edge_weight(r[-1], N, 2 * pinf + V.tail_outer + N, "outer")
    A[np.diag_indices(grid.n)] += mass

    W = bubble_profile(b, grid)
    wp = W.values ** (p - 1)
    g_in, g_out = p0, pinf + (p - 1) * (2 - N)
    op = riesz_operator(grid, mu, l)
    K = op.matrix(g_in, g_out)
    i_in, i_out = op.result_tails(g_in, g_out)
    wq = grid.trap * r ** N * wp
    wq[0] += wp[0] * _edge_weight(r[0], N, i_in + g_in + N, "inner")
    wq[-1] += wp[-1] * _edge_weight(r[-1], N, i_out + g_out + N, "outer")
    Bn = wq[:, None] * K * wp[None, :]
    B = 0.5 * (Bn + Bn.T)
    B[np.diag_indices(grid.n)] += mass

    A = 0.5 * (A + A.T) * area
    B = B * area
    A.flags.writeable = False
    B.flags.writeable = False
    return SectorOperator(grid, b, int(l), A, B)


def eigenpairs(opr: SectorOperator, k: int = 3) -> SpectrumResult:
    """The k smallest nu with A f = nu B f; eigenvectors B-orthonormal."""
    if int(k) != k or not (1 <= k <= 10):
        raise DomainError(f"k must be an integer in [1, 10], got {k!r}")
    n = opr.grid.n
    s = 1.0 / np.sqrt(np.diag(opr.A))
    As = opr.A * np.outer(s, s)
    Bs = opr.B * np.outer(s, s)
    # largest theta of B x = theta A x  <->  smallest nu = 1/theta
    m = min(n, k + 8)
    theta, X = linalg.eigh(Bs, As, subset_by_index=[n - m, n - 1])
    order = np.argsort(-theta)
    vals, vecs, deflated = [], [], 0
    for i in order:
        if theta[i] <= 1e-12 * abs(theta[order[0]]):
            deflated += 1
            continue
        f = s * X[:, i]
        f = f / math.sqrt(float(f @ opr.B @ f))
        j = int(np.argmax(np.abs(f * opr.grid.r ** ((opr.grid.dim - 2) / 2))))
        if f[j] < 0:
            f = -f
        vals.append(1.0 / float(theta[i]))
        vecs.append(opr.profile(f))
        if len(vals) == k:
            break
    if len(vals) < k:
        raise NumericalError(f"only {len(vals)} eigenvalues with positive B-weight found")
    return SpectrumResult(opr.sector, tuple(vals), tuple(vecs), deflated)


def _sector_profile(f: RadialProfile, l: int) -> RadialProfile:
    ti, to = sector_tails(f.dim, l)
    return f.with_tails(ti, to)


def rayleigh_quotient(b: Bubble, f: RadialProfile, l: int) -> float:
    """A[f]/B[f] by direct quadrature (no assembled matrices)."""
    p = nl_exponent(b.dim, b.mu)
    f = _sector_profile(f, l)
    W = bubble_profile(b, f.grid)
    V = potential(b, f.grid)
    vf = integrate(V * f * f)
    g = W.abs_power(p - 1.0) * f
    num = grad_norm_sq(f, l) + vf
    den = integrate(riesz_potential(g, b.mu, l) * g) + vf
    return num / den


def linearized_action(b: Bubble, phi: RadialProfile, l: int) -> RadialProfile:
    """p (I^{(l)}(W^{p-1} phi)) W^{p-1} + (p-1) V phi: the nonlocal part of the linearised operator."""
    p = nl_exponent(b.dim, b.mu)
    W = bubble_profile(b, phi.grid)
    Wp1 = W.abs_power(p - 1.0)
    return riesz_potential(Wp1 * phi, b.mu, l) * Wp1 * p + potential(b, phi.grid) * phi * (p - 1.0)


def nondegeneracy_residual(b: Bubble, phi: RadialProfile, l: int) -> float:
    """Dual norm of L[phi] = -Delta phi - p I(W^{p-1} phi) W^{p-1} - (p-1) V phi in sector l, for ||grad phi|| = 1."""
    phi = _sector_profile(phi, l)
    nrm = math.sqrt(grad_norm_sq(phi, l))
    if nrm == 0.0:
        raise DomainError("phi must be nonzero")
    phi = phi / nrm
    psi = poisson_solve(linearized_action(b, phi, l), l)
    return math.sqrt(max(grad_norm_sq(phi - psi, l), 0.0))
