"""Talenti bubbles for the nonlocal problem, their tangent fields and interactions."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .radial import RadialGrid, RadialProfile
from .special_fn import best_sobolev_constant, hls_constant, riesz_identity_constant


@dataclass(frozen=True)
class Bubble:
    dim: int
    mu: float
    scale: float = 1.0
    center: tuple = ()

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise DomainError(f"bubble dimension must be an integer >= 3, got {self.dim!r}")
        if not (0.0 < self.mu < self.dim):
            raise DomainError(f"bubble needs 0 < mu < N, got mu={self.mu!r}")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise DomainError(f"bubble scale must be positive, got {self.scale!r}")
        c = tuple(float(v) for v in self.center) if len(self.center) else (0.0,) * int(self.dim)
        if len(c) != self.dim:
            raise DomainError(f"center must have {self.dim} coordinates, got {len(c)}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "center", c)

    @property
    def lam(self) -> float:
        return self.scale

    @property
    def is_centered(self) -> bool:
        return not any(self.center)

    def dilated(self, factor: float) -> "Bubble":
        return Bubble(self.dim, self.mu, self.scale * factor, self.center)

    def to_dict(self) -> dict:
        return {"lambda": self.scale, "xi": list(self.center)}


@dataclass(frozen=True)
class BubbleFamily:
    bubbles: tuple
    coefficients: tuple = field(default=())

    def __post_init__(self):
        bs = tuple(self.bubbles)
        if not bs:
            raise DomainError("a bubble family needs at least one bubble")
        if len({(b.dim, b.mu) for b in bs}) != 1:
            raise DomainError("all bubbles in a family must share (N, mu)")
        co = tuple(float(a) for a in self.coefficients) if len(self.coefficients) else (1.0,) * len(bs)
        if len(co) != len(bs):
            raise DomainError("one coefficient per bubble is required")
        object.__setattr__(self, "bubbles", bs)
        object.__setattr__(self, "coefficients", co)

    @property
    def dim(self) -> int:
        return self.bubbles[0].dim

    @property
    def mu(self) -> float:
        return self.bubbles[0].mu

    @property
    def kappa(self) -> int:
        return len(self.bubbles)

    @classmethod
    def concentric(cls, N: int, mu: float, scales, coefficients=()) -> "BubbleFamily":
        return cls(tuple(Bubble(N, mu, s) for s in scales), tuple(coefficients))

    def sorted(self) -> "BubbleFamily":
        order = sorted(range(self.kappa), key=lambda i: self.bubbles[i].scale)
        return BubbleFamily(tuple(self.bubbles[i] for i in order),
                            tuple(self.coefficients[i] for i in order))

    def to_dict(self) -> dict:
        return {"N": self.dim, "mu": self.mu,
                "bubbles": [b.to_dict() for b in self.bubbles],
                "alpha": list(self.coefficients)}

    @classmethod
    def from_dict(cls, d: dict) -> "BubbleFamily":
        try:
            N, mu = int(d["N"]), float(d["mu"])
            bs = tuple(Bubble(N, mu, float(b["lambda"]), tuple(b.get("xi", ())))
                       for b in d["bubbles"])
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed bubble family: {exc}") from exc
        return cls(bs, tuple(d.get("alpha", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BubbleFamily":
        return cls.from_dict(json.loads(text))


# -- constants -----------------------------------------------------------------

def bubble_prefactor(N: int, mu: float) -> float:
    """Amplitude A with W[0,1](0) = A."""
    S = best_sobolev_constant(N)
    C = hls_constant(N, mu)
    return (S ** ((N - mu) * (2 - N) / (4 * (N - mu + 2)))
            * C ** ((2 - N) / (2 * (N - mu + 2)))
            * (N * (N - 2)) ** ((N - 2) / 4))


def riesz_bubble_constant(N: int, mu: float) -> float:
    """Q with |x|^{-mu} * W^{2*_mu} = Q W^{2* - 2*_mu}.

    Obtained from the Riesz identity with gamma = mu/2 applied to the shape
    (1+r^2)^{-(2N-mu)/2}; equivalently N(N-2) A^{-4/(N-2)} by the
    Euler-Lagrange equation.
    """
    A = bubble_prefactor(N, mu)
    return riesz_identity_constant(N, mu / 2) * A ** (2 * (N - mu) / (N - 2))


def riesz_bubble_constant_from_equation(N: int, mu: float) -> float:
    return N * (N - 2) * bubble_prefactor(N, mu) ** (-4.0 / (N - 2))


# -- evaluation ------------------------------------------------------------------

def _radius(b: Bubble, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim >= 2 and x.shape[-1] == b.dim:
        return np.linalg.norm(x - np.asarray(b.center), axis=-1)
    return np.abs(x)


def _shape(r, lam, N):
    return (lam / (1.0 + (lam * r) ** 2)) ** ((N - 2) / 2)


def radial_W(b: Bubble, r):
    """W as a function of the distance to its center (any array shape)."""
    return bubble_prefactor(b.dim, b.mu) * _shape(np.asarray(r, dtype=float), b.scale, b.dim)


def eval_W(b: Bubble, r_or_x):
    """W[xi, lambda] at distances from the center, or at points given as an array of shape (..., N) with ndim >= 2."""
    r = _radius(b, r_or_x)
    out = bubble_prefactor(b.dim, b.mu) * _shape(r, b.scale, b.dim)
    return float(out) if np.ndim(out) == 0 else out


def eval_U(N: int, lam: float, xi, x):
    """Sobolev bubble [N(N-2)]^{(N-2)/4} (lambda/(1+lambda^2|x-xi|^2))^{(N-2)/2}."""
    if int(N) != N or N < 3:
        raise DomainError(f"N must be an integer >= 3, got {N!r}")
    if lam <= 0:
        raise DomainError("lambda must be positive")
    x = np.asarray(x, dtype=float)
    if x.ndim >= 2:
        xi = np.zeros(N) if xi is None or len(xi) == 0 else np.asarray(xi, dtype=float)
        r = np.linalg.norm(x - xi, axis=-1)
    else:
        r = np.abs(x)
    out = (N * (N - 2)) ** ((N - 2) / 4) * _shape(r, lam, N)
    return float(out) if np.ndim(out) == 0 else out


def bubble_profile(b: Bubble, grid: RadialGrid) -> RadialProfile:
    """W as a radial profile about its own center."""
    _match(b, grid)
    return RadialProfile(grid, eval_W(b, grid.r), 0.0, float(2 - b.dim))


def sobolev_bubble_profile(N: int, lam: float, grid: RadialGrid) -> RadialProfile:
    return RadialProfile(grid, eval_U(N, lam, None, grid.r), 0.0, float(2 - N))


def family_profile(fam: BubbleFamily, grid: RadialGrid) -> RadialProfile:
    """sigma = sum alpha_i W_i for a concentric family."""
    vals = np.zeros(grid.n)
    for a, b in zip(fam.coefficients, fam.bubbles):
        if not b.is_centered:
            raise DomainError("radial profiles need concentric bubbles")
        vals = vals + a * eval_W(b, grid.r)
    return RadialProfile(grid, vals, 0.0, float(2 - fam.dim))


def _match(b: Bubble, grid: RadialGrid) -> None:
    if grid.dim != b.dim:
        raise DomainError(f"grid dimension {grid.dim} does not match bubble dimension {b.dim}")


def d_lambda_W(b: Bubble, grid: RadialGrid) -> RadialProfile:
    """dW/dlambda = (N-2)/(2 lambda) W (1 - lambda^2 r^2)/(1 + lambda^2 r^2)."""
    _match(b, grid)
    N, lam, r = b.dim, b.scale, grid.r
    lr2 = (lam * r) ** 2
    vals = (N - 2) / (2 * lam) * eval_W(b, r) * (1 - lr2) / (1 + lr2)
    return RadialProfile(grid, vals, 0.0, float(2 - N))


def d_xi_W(b: Bubble, grid: RadialGrid) -> RadialProfile:
    """Radial factor of dW/dxi_k = -W'(r) x_k/r, i.e. -W'(r) >= 0 (an l = 1 mode)."""
    _match(b, grid)
    N, lam, r = b.dim, b.scale, grid.r
    vals = bubble_prefactor(N, b.mu) * (N - 2) * lam ** ((N + 2) / 2) * r * (1 + (lam * r) ** 2) ** (-N / 2)
    return RadialProfile(grid, vals, 1.0, float(1 - N))


def exact_riesz_of_bubble(b: Bubble, grid: RadialGrid) -> RadialProfile:
    """|x|^{-mu} * W^{2*_mu} in closed form: Q W^{2* - 2*_mu} = Q W^{mu/(N-2)}."""
    _match(b, grid)
    N, mu = b.dim, b.mu
    q = riesz_bubble_constant(N, mu)
    vals = q * eval_W(b, grid.r) ** (mu / (N - 2))
    return RadialProfile(grid, vals, 0.0, -float(mu))


# -- interaction ---------------------------------------------------------------

def interaction_Q(b1: Bubble, b2: Bubble) -> float:
    """(l1/l2 + l2/l1 + l1 l2 |xi1 - xi2|^2)^{-(N-2)/2}."""
    if (b1.dim, b1.mu) != (b2.dim, b2.mu):
        raise DomainError("interaction needs bubbles with the same (N, mu)")
    l1, l2 = b1.scale, b2.scale
    d2 = float(np.sum((np.asarray(b1.center) - np.asarray(b2.center)) ** 2))
    return (l1 / l2 + l2 / l1 + l1 * l2 * d2) ** (-(b1.dim - 2) / 2)


def max_interaction(fam: BubbleFamily) -> float:
    pairs = itertools.combinations(fam.bubbles, 2)
    return max((interaction_Q(a, b) for a, b in pairs), default=0.0)


def is_delta_interacting(fam: BubbleFamily, delta: float) -> bool:
    if delta <= 0:
        raise DomainError("delta must be positive")
    if fam.kappa > 1 and max_interaction(fam) >= delta:
        return False
    return max(abs(a - 1.0) for a in fam.coefficients) <= delta
