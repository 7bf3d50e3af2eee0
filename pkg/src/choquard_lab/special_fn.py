"""Gamma function and the sharp constants of the Sobolev, HLS and nonlocal
Sobolev inequalities."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# Lanczos approximation, g = 7, n = 9 (about 15 significant digits on the real axis).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos_sum(x: float) -> tuple[float, float]:
    # valid for x >= 0.5; returns (series, t)
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for k, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + k)
    return acc, x + _LANCZOS_G + 0.5


def _lanczos_gamma(x: float) -> float:
    acc, t = _lanczos_sum(x)
    # t^{x-1/2} split in two halves so that large x does not overflow early
    half = t ** (0.5 * (x - 0.5))
    return math.sqrt(2.0 * math.pi) * half * (half * math.exp(-t)) * acc


def gamma(x: float) -> float:
    """Gamma function for real ``x > 0``.

    Uses the Lanczos approximation; arguments below 1/2 go through the
    reflection formula so the series is only ever evaluated where it is
    accurate.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma requires x > 0, got {x!r}")
    if x < 0.5:
        # Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * _lanczos_gamma(1.0 - x))
    if x == round(x) and x <= 30:
        return float(math.factorial(int(x) - 1))
    return _lanczos_gamma(x)


def sphere_area(N: int) -> float:
    """Surface measure |S^{N-1}| of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2) / gamma(N / 2)


def _check_dim(N: int) -> None:
    if int(N) != N or N < 3:
        raise DomainError(f"dimension must be an integer N >= 3, got {N!r}")


def _check_mu(N: int, mu: float) -> None:
    _check_dim(N)
    if not (0.0 < mu < N):
        raise DomainError(f"mu must lie in (0, N) = (0, {N}), got {mu!r}")


def critical_exponent(N: int) -> float:
    """2* = 2N/(N-2)."""
    _check_dim(N)
    return 2.0 * N / (N - 2)


def nl_exponent(N: int, mu: float) -> float:
    """Upper HLS-critical exponent 2*_mu = (2N - mu)/(N - 2)."""
    _check_mu(N, mu)
    return (2.0 * N - mu) / (N - 2)


def hls_constant(N: int, mu: float) -> float:
    """Sharp HLS constant C(N, mu) for r = t = 2N/(2N - mu)."""
    _check_mu(N, mu)
    return (
        gamma((N - mu) / 2) * math.pi ** (mu / 2) / gamma(N - mu / 2)
        * (gamma(N) / gamma(N / 2)) ** (1.0 - mu / N)
    )


def best_sobolev_constant(N: int) -> float:
    """Best constant S(N) in ||grad u||^2 >= S ||u||_{2*}^2."""
    _check_dim(N)
    return math.pi * N * (N - 2) * (gamma(N / 2) / gamma(N)) ** (2.0 / N)


def nonlocal_sobolev_constant(N: int, mu: float) -> float:
    """S_HL = S * C(N, mu)^{(2-N)/(2N-mu)}."""
    _check_mu(N, mu)
    return best_sobolev_constant(N) * hls_constant(N, mu) ** ((2.0 - N) / (2.0 * N - mu))


def riesz_identity_constant(N: int, gamma_: float) -> float:
    """I(gamma) with  int |x-y|^{-2 gamma} (1+|y|^2)^{gamma-N} dy = I(gamma) (1+|x|^2)^{-gamma}."""
    _check_dim(N)
    if not (0.0 < gamma_ < N / 2):
        raise DomainError(f"need 0 < gamma < N/2 = {N / 2}, got {gamma_!r}")
    return math.pi ** (N / 2) * gamma((N - 2.0 * gamma_) / 2) / gamma(N - gamma_)


def ground_state_energy(N: int, mu: float) -> float:
    """||grad W||^2 = S_HL^{(2N-mu)/(N+2-mu)}, the energy of one bubble."""
    return nonlocal_sobolev_constant(N, mu) ** ((2.0 * N - mu) / (N + 2.0 - mu))


@dataclass(frozen=True)
class SharpConstants:
    dim: int
    mu: float
    C_hls: float
    S_sob: float
    S_hl: float
    two_star: float
    two_star_mu: float

    @classmethod
    def compute(cls, N: int, mu: float) -> "SharpConstants":
        _check_mu(N, mu)
        return cls(
            dim=int(N),
            mu=float(mu),
            C_hls=hls_constant(N, mu),
            S_sob=best_sobolev_constant(N),
            S_hl=nonlocal_sobolev_constant(N, mu),
            two_star=critical_exponent(N),
            two_star_mu=nl_exponent(N, mu),
        )

    def to_dict(self) -> dict:
        return {
            "N": self.dim,
            "mu": self.mu,
            "C_hls": self.C_hls,
            "S_sob": self.S_sob,
            "S_hl": self.S_hl,
            "two_star": self.two_star,
            "two_star_mu": self.two_star_mu,
        }


def sharp_constants(N: int, mu: float) -> SharpConstants:
    return SharpConstants.compute(N, mu)
