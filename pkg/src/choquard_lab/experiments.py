"""Parameter sweeps measuring empirical stability constants.

Two sweep families:

* deficit bound: u = W + eps g for a fixed perturbation g; v is the best
  multiple of a bubble rescaled to the NL norm of u, and the rows record
  ||grad(u - v)||^2, the deficit and ||u||_NL ||u - v||_NL.  The smallest
  (K, L) >= 0 with lhs <= K deficit + L nlprod on every row comes from a
  two-variable linear program.
* multi-bubble stability: u = sum_i W[0, lambda_i] + eps rho; the rows record
  the distance to sums of kappa bubbles and the Euler-Lagrange residual; the
  empirical constant is C = max dist / residual.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linprog

from .bubbles import (Bubble, BubbleFamily, bubble_profile, d_lambda_W, family_profile,
                      interaction_Q, is_delta_interacting)
from .errors import DomainError, NumericalError, RegionError
from .functionals import (deficit, deficit_bound_sides, nonlinearity, nl_norm,
                          residual_dual_norm)
from .manifold_fit import fit_sum, match_nl_norm, project_single
from .radial import RadialGrid, RadialProfile, grad_inner, grad_norm_sq, integrate
from .riesz import two_center_integral
from .special_fn import critical_exponent, ground_state_energy

PERTURBATIONS = ("bump", "gauss", "shell", "slow")
EPS_MAX = 0.3
SLOW_ROLLOVER = 1e2


# -- perturbation dictionary ---------------------------------------------------

def _raw_perturbation(name: str, grid: RadialGrid) -> RadialProfile:
    N, r = grid.dim, grid.r
    t = np.log(r)
    if name == "bump":
        # smooth, compactly supported in ln r on (-1.5, 2.5)
        x = (t - 0.5) / 2.0
        inside = np.abs(x) < 1.0
        vals = np.zeros_like(r)
        vals[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
        return RadialProfile(grid, vals, None, None)
    if name == "gauss":
        return RadialProfile(grid, np.exp(-0.5 * r * r), 0.0, None)
    if name == "shell":
        return RadialProfile(grid, (1.0 - r * r) * np.exp(-0.5 * r * r), 0.0, None)
    if name == "slow":
        # r^{-3(N-2)/4} on 1 << r << SLOW_ROLLOVER, then the bubble power r^{2-N},
        # so sums with bubbles keep a single exact tail power
        a = 0.75 * (N - 2)
        vals = (1.0 + r * r) ** (-a / 2) * (1.0 + (r / SLOW_ROLLOVER) ** 2) ** (-(N - 2 - a) / 2)
        return RadialProfile(grid, vals, 0.0, float(2 - N))
    raise DomainError(f"unknown perturbation {name!r}; choose from {PERTURBATIONS}")


def tangent_basis(fam: BubbleFamily, grid: RadialGrid) -> list:
    cols = []
    for b in fam.bubbles:
        cols.append(bubble_profile(b, grid))
        cols.append(d_lambda_W(b, grid))
    return cols


def orthogonalize(g: RadialProfile, basis: list) -> RadialProfile:
    """Remove from g its D^{1,2} projection onto span(basis)."""
    if not basis:
        return g
    G = np.array([[grad_inner(a, b) for b in basis] for a in basis])
    c = np.linalg.solve(G, np.array([grad_inner(g, b) for b in basis]))
    out = g
    for ci, b in zip(c, basis):
        out = out - b * ci
    return out


def perturbation(name: str, grid: RadialGrid, against: BubbleFamily | None = None) -> RadialProfile:
    """Dictionary element with ||grad g|| = 1, optionally tangent-orthogonal to a family."""
    g = _raw_perturbation(name, grid)
    n0 = math.sqrt(grad_norm_sq(g))
    if against is not None:
        g = orthogonalize(g, tangent_basis(against, grid))
    n = math.sqrt(max(grad_norm_sq(g), 0.0))
    if n <= 1e-8 * n0:
        raise NumericalError(f"perturbation {name!r} vanishes after orthogonalisation")
    return g / n


# -- reports -------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    scenario: str
    N: int
    mu: float
    kappa: int
    lambdas: tuple
    perturbation: str
    eps: float
    deficit: float
    relative_deficit: float
    dist_single: float
    dist_kappa: float
    residual_dual_norm: float
    lhs: float = 0.0
    nlprod: float = 0.0
    max_Q: float = 0.0
    delta_interacting: bool = True
    interaction_bound: float = 0.0
    two_center: tuple = ()
    fitted_lambdas: tuple = ()
    fitted_alphas: tuple = ()
    converged: bool = True

    @property
    def ratio(self) -> float:
        if self.residual_dual_norm > 0:
            return self.dist_kappa / self.residual_dual_norm
        return 0.0 if self.dist_kappa == 0 else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d

    def flat(self) -> dict:
        d = self.to_dict()
        for key in ("lambdas", "fitted_lambdas", "fitted_alphas", "two_center"):
            d[key] = ";".join(f"{float(x):.12g}" for x in d[key])
        return d


@dataclass(frozen=True)
class SweepSummary:
    kind: str
    rows: tuple
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "constants": self.constants,
                "rows": [r.to_dict() for r in self.rows]}


# -- deficit bound sweep -------------------------------------------------------

def _deficit_row(N, mu, grid, name, eps) -> StabilityReport:
    if not (0.0 <= eps <= EPS_MAX):
        raise DomainError(f"eps must lie in [0, {EPS_MAX}], got {eps}")
    base = Bubble(N, mu, 1.0)
    W = bubble_profile(base, grid)
    g = perturbation(name, grid, BubbleFamily((base,)))
    u = W + g * eps
    fit = project_single(u, mu)
    sigma = family_profile(fit.config, grid)
    v = match_nl_norm(sigma, nl_norm(u, mu), mu)
    lhs, d, nlp = deficit_bound_sides(u, v, mu)
    rep = deficit(u, mu)
    return StabilityReport(
        scenario="deficit_bound", N=N, mu=mu, kappa=1, lambdas=(1.0,), perturbation=name,
        eps=eps, deficit=d, relative_deficit=rep.relative, dist_single=fit.distance,
        dist_kappa=fit.distance, residual_dual_norm=residual_dual_norm(u, mu),
        lhs=lhs, nlprod=nlp, fitted_lambdas=tuple(fit.lambdas),
        fitted_alphas=tuple(fit.alphas), converged=fit.converged)


def envelope_constants(lhs, d, nlprod) -> tuple[float, float]:
    """Smallest K + L (K, L >= 0) with lhs_i <= K d_i + L nlprod_i for all i."""
    lhs, d, nlprod = (np.asarray(a, dtype=float) for a in (lhs, d, nlprod))
    active = lhs > 0
    if not np.any(active):
        return 0.0, 0.0
    A = -np.c_[d[active], nlprod[active]]
    b = -lhs[active]
    res = linprog(c=[1.0, 1.0], A_ub=A, b_ub=b, bounds=[(0, None), (0, None)], method="highs")
    if res.status != 0:
        return math.inf, math.inf
    K, L = (float(x) for x in res.x)
    # lift off the LP feasibility tolerance so the bound holds exactly
    for _ in range(8):
        rhs = K * d + L * nlprod
        if np.all(lhs <= rhs):
            return K, L
        bad = lhs > rhs
        if np.any(rhs[bad] <= 0):
            return math.inf, math.inf
        f = float(np.max(lhs[bad] / rhs[bad])) * (1.0 + 1e-12)
        K, L = K * f, L * f
    raise NumericalError("could not certify the empirical envelope")


def sweep_deficit_bound(N: int, mu: float, perturbations=("bump",), eps_list=(1e-3, 1e-2, 1e-1),
                        grid: RadialGrid | None = None, jobs: int = 1) -> SweepSummary:
    grid = grid or RadialGrid(N)
    tasks = [(N, mu, grid, name, float(e)) for name in perturbations for e in eps_list]
    rows = _run(_deficit_row, tasks, jobs)
    K, L = envelope_constants([r.lhs for r in rows], [r.deficit for r in rows],
                              [r.nlprod for r in rows])
    return SweepSummary("deficit_bound", tuple(rows), {"K_hat": K, "L_hat": L})


# -- multi-bubble stability sweep ---------------------------------------------

def check_region(N: int, mu: float, kappa: int) -> None:
    """Several bubbles are only admissible for 3 <= N < 6 - mu."""
    if kappa >= 2 and not (3 <= N < 6 - mu):
        raise RegionError(f"kappa={kappa} requires 3 <= N < 6 - mu; got N={N}, mu={mu}")


def centered_scales(kappa: int, ratio: float) -> tuple:
    """kappa scales in geometric progression with consecutive ratio ``ratio``, centred on 1."""
    return tuple(float(ratio ** (i - (kappa - 1) / 2)) for i in range(kappa))


def interaction_bound(fam: BubbleFamily, grid: RadialGrid) -> float:
    """max_{i != j} int (|x|^{-mu} * W_i^p) W_i^{p-1} W_j."""
    best = 0.0
    Ws = [bubble_profile(b, grid) for b in fam.bubbles]
    for i, Wi in enumerate(Ws):
        F = nonlinearity(Wi, fam.mu)
        for j, Wj in enumerate(Ws):
            if i != j:
                best = max(best, integrate(F * Wj))
    return best


def _stability_row(N, mu, kappa, grid, scales, name, eps, delta) -> StabilityReport:
    fam = BubbleFamily.concentric(N, mu, scales)
    sigma = family_profile(fam, grid)
    rho = perturbation(name, grid) if eps > 0 else RadialProfile.zeros(grid)
    u = sigma + rho * eps if eps > 0 else sigma
    starts = [list(scales), None]
    fits = [fit_sum(u, mu, kappa, starts=[s]) if s is not None else fit_sum(u, mu, kappa)
            for s in starts]
    fit = min(fits, key=lambda f: f.distance)
    single = project_single(u, mu) if kappa > 1 else fit
    rep = deficit(u, mu)
    Qs = [interaction_Q(a, b) for i, a in enumerate(fam.bubbles) for b in fam.bubbles[i + 1:]]
    two = ()
    if kappa == 2:
        p = critical_exponent(N)
        two = (two_center_integral(p - 1.0, 1.0, fam.bubbles[0], fam.bubbles[1]),
               two_center_integral(p / 2, p / 2, fam.bubbles[0], fam.bubbles[1]))
    return StabilityReport(
        scenario="multi_bubble", N=N, mu=mu, kappa=kappa, lambdas=tuple(scales),
        perturbation=name if eps > 0 else "none", eps=eps, deficit=rep.deficit,
        relative_deficit=rep.relative, dist_single=single.distance, dist_kappa=fit.distance,
        residual_dual_norm=residual_dual_norm(u, mu), max_Q=max(Qs, default=0.0),
        delta_interacting=is_delta_interacting(fam, delta),
        interaction_bound=interaction_bound(fam, grid) if kappa > 1 else 0.0,
        two_center=two, fitted_lambdas=tuple(fit.lambdas), fitted_alphas=tuple(fit.alphas),
        converged=fit.converged)


def sweep_stability(N: int, mu: float, kappa: int, lambda_ratios=(1e2, 1e3, 1e4),
                    eps_list=(1e-3, 1e-2, 1e-1), perturbation_name: str = "bump",
                    grid: RadialGrid | None = None, delta: float = 0.1,
                    scale_sets=None, jobs: int = 1) -> SweepSummary:
    """Rows for u = sum_i W[0, lambda_i] + eps rho; C_hat = max dist / residual."""
    check_region(N, mu, kappa)
    grid = grid or RadialGrid(N)
    if scale_sets is None:
        scale_sets = [centered_scales(kappa, R) for R in lambda_ratios] if kappa > 1 else [(1.0,)]
    tasks = [(N, mu, kappa, grid, tuple(s), perturbation_name, float(e), delta)
             for s in scale_sets for e in eps_list]
    rows = _run(_stability_row, tasks, jobs)
    ratios = [r.ratio for r in rows]
    C = max(ratios) if ratios else 0.0
    bound_ratio = float(max((r.interaction_bound / r.residual_dual_norm for r in rows
                             if r.residual_dual_norm > 0), default=0.0))
    return SweepSummary("multi_bubble", tuple(rows),
                        {"C_hat": C, "interaction_over_residual": bound_ratio})


def _star(args):
    fn, a = args
    return fn(*a)


def _run(fn, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(*a) for a in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_star, [(fn, a) for a in tasks]))


# -- profile decomposition -----------------------------------------------------

def profile_decomposition_demo(N: int, mu: float, kappa: int, seed: int = 0,
                               rho_norm: float = 0.05, spacing: float = 1e4,
                               grid: RadialGrid | None = None) -> dict:
    """Recover kappa well-separated bubbles from a perturbed sum and check the energy window."""
    check_region(N, mu, kappa)
    grid = grid or RadialGrid(N)
    rng = np.random.default_rng(seed)
    jitter = 10.0 ** rng.uniform(-0.2, 0.2, size=kappa)
    scales = tuple(float(s * j) for s, j in zip(centered_scales(kappa, spacing), jitter))
    fam = BubbleFamily.concentric(N, mu, scales)
    coef = rng.standard_normal(len(PERTURBATIONS))
    rho = RadialProfile.zeros(grid)
    for c, name in zip(coef, PERTURBATIONS):
        rho = rho + perturbation(name, grid) * float(c)
    rho = rho * (rho_norm / math.sqrt(grad_norm_sq(rho)))
    u = family_profile(fam, grid) + rho
    E = ground_state_energy(N, mu)
    g2 = grad_norm_sq(u)
    fit = fit_sum(u, mu, kappa)
    rel = [abs(a / b - 1.0) for a, b in zip(fit.lambdas, sorted(scales))]
    return {
        "N": N, "mu": mu, "kappa": kappa, "seed": seed, "lambdas": sorted(scales),
        "grad_sq": g2, "window": [(kappa - 0.5) * E, (kappa + 0.5) * E],
        "in_window": (kappa - 0.5) * E <= g2 <= (kappa + 0.5) * E,
        "energy_ratio": g2 / (kappa * E),
        "residual_dual_norm": residual_dual_norm(u, mu),
        "fit": fit.to_dict(), "lambda_rel_errors": rel,
    }


# -- interaction slopes ----------------------------------------------------------

def interaction_slopes(N: int, p: float, q: float, ratios=None) -> dict:
    """Regression of log int W_1^p W_2^q against log Q for concentric pairs.

    Expected slope: min(p, q) for p != q; for p = q the integral behaves like
    Q^{N/(N-2)} log(1/Q), so the fit includes a log log(1/Q) regressor whose
    coefficient should be positive.
    """
    two_star = critical_exponent(N)
    if abs(p + q - two_star) > 1e-9:
        raise DomainError(f"need p + q = 2* = {two_star}, got {p + q}")
    ratios = np.logspace(1, 4, 13) if ratios is None else np.asarray(ratios, dtype=float)
    if np.ptp(np.log10(ratios)) < 3 - 1e-9:
        raise DomainError("the ratio grid must span at least three decades")
    Q, v = [], []
    for R in ratios:
        b1, b2 = Bubble(N, 1.0, float(R) ** -0.5), Bubble(N, 1.0, float(R) ** 0.5)
        Q.append(interaction_Q(b1, b2))
        v.append(two_center_integral(p, q, b1, b2))
    Q, v = np.array(Q), np.array(v)
    slope = float(np.polyfit(np.log(Q), np.log(v), 1)[0])
    out = {"N": N, "p": p, "q": q, "ratios": ratios.tolist(), "Q": Q.tolist(), "values": v.tolist(),
           "raw_slope": slope}
    if abs(p - q) < 1e-12:
        X = np.c_[np.ones_like(Q), np.log(Q), np.log(np.log(1.0 / Q))]
        coef = np.linalg.lstsq(X, np.log(v), rcond=None)[0]
        out.update(expected=N / (N - 2), slope=float(coef[1]), log_coefficient=float(coef[2]))
    else:
        out.update(expected=min(p, q), slope=slope, log_coefficient=0.0)
    out["relative_error"] = abs(out["slope"] / out["expected"] - 1.0)
    return out


# -- config runner -------------------------------------------------------------

def _grid_from(cfg: dict, N: int) -> RadialGrid:
    g = cfg.get("grid", {}) or {}
    return RadialGrid(N, int(g.get("n", 2048)), float(g.get("r_min", 1e-4)), float(g.get("r_max", 1e4)))


def run_config(cfg: dict, jobs: int = 1) -> SweepSummary:
    """Run a sweep described by a config dict (see README for the keys)."""
    try:
        N, mu = int(cfg["N"]), float(cfg["mu"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"sweep config needs numeric N and mu: {exc}") from exc
    kappa = int(cfg.get("kappa", 1))
    eps = tuple(float(e) for e in cfg.get("eps", (1e-3, 1e-2, 1e-1)))
    perts = tuple(cfg.get("perturbations", ("bump",)))
    for name in perts:
        if name not in PERTURBATIONS:
            raise DomainError(f"unknown perturbation {name!r}")
    grid = _grid_from(cfg, N)
    kind = cfg.get("kind", "multi_bubble" if kappa > 1 else "deficit_bound")
    if kind == "deficit_bound":
        return sweep_deficit_bound(N, mu, perts, eps, grid=grid, jobs=jobs)
    if kind != "multi_bubble":
        raise DomainError(f"unknown sweep kind {kind!r}")
    scale_sets = None
    if "lambdas" in cfg:
        lam = cfg["lambdas"]
        scale_sets = [tuple(float(x) for x in s) for s in (lam if isinstance(lam[0], list) else [lam])]
        if any(len(s) != kappa for s in scale_sets):
            raise DomainError("each lambda set needs kappa entries")
    return sweep_stability(N, mu, kappa, tuple(float(r) for r in cfg.get("ratios", (1e2, 1e3, 1e4))),
                           eps, perts[0], grid=grid, delta=float(cfg.get("delta", 0.1)),
                           scale_sets=scale_sets, jobs=jobs)
