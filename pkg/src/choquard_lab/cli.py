"""Command-line interface: ``choquard-lab <command> [options]``.

Every command prints one JSON document ``{"command", "config", "result"}`` with
floats rounded to 12 significant digits.  Exit status: 0 success, 1 invalid
input or unknown command, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bubbles import (Bubble, BubbleFamily, bubble_prefactor, bubble_profile, exact_riesz_of_bubble,
                      family_profile, interaction_Q, riesz_bubble_constant,
                      riesz_bubble_constant_from_equation)
from .errors import ConvergenceError, DomainError, NumericalError
from .experiments import interaction_slopes, profile_decomposition_demo, run_config
from .functionals import deficit, residual_dual_norm, residual_dual_norm_strong
from .io import dumps, read_profile, rows_to_csv, write_json
from .manifold_fit import fit_sum
from .radial import RadialGrid
from .riesz import riesz_potential, two_center_integral
from .spectrum import assemble, eigenpairs
from .special_fn import (critical_exponent, ground_state_energy, nl_exponent,
                         riesz_identity_constant, sharp_constants)

log = logging.getLogger("choquard_lab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2
KERNEL_TEST_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass
class RunConfig:
    command: str
    N: int
    mu: float
    grid: dict
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    format: str = "json"

    def validate(self) -> None:
        if self.N < 3:
            raise DomainError(f"--dim must be an integer >= 3 (got {self.N})")
        if not (0.0 < self.mu < self.N):
            raise DomainError(f"--mu must satisfy 0 < mu < N = {self.N} (got {self.mu})")
        if self.grid["n"] < 64:
            raise DomainError("--n must be at least 64")
        if not (0 < self.grid["r_min"] < self.grid["r_max"]):
            raise DomainError("need 0 < --r-min < --r-max")
        if self.format not in ("json", "csv"):
            raise DomainError("--format must be json or csv")

    def make_grid(self) -> RadialGrid:
        return RadialGrid(self.N, self.grid["n"], self.grid["r_min"], self.grid["r_max"])


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--dim", type=int, default=3, help="space dimension N")
    p.add_argument("--mu", type=float, default=1.0, help="Riesz exponent mu in (0, N)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="grid nodes")
    p.add_argument("--r-min", type=float, default=1e-4)
    p.add_argument("--r-max", type=float, default=1e4)
    p.add_argument("--out", default=None, help="also write the JSON result here")
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _profile_args(p):
    p.add_argument("profile", nargs="?", help="radial profile CSV; omit to use --lambda/--alpha")
    p.add_argument("--lambda", dest="lambdas", type=float, nargs="+", default=None)
    p.add_argument("--alpha", dest="alphas", type=float, nargs="+", default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="choquard-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sub.add_parser("constants", parents=[common], help="sharp constants and bubble normalisation")
    _profile_args(sub.add_parser("deficit", parents=[common], help="deficit of a profile"))
    _profile_args(sub.add_parser("residual", parents=[common], help="Euler-Lagrange residual dual norm"))
    pf = sub.add_parser("fit", parents=[common], help="distance to sums of kappa bubbles")
    _profile_args(pf)
    pf.add_argument("--kappa", type=int, default=1)
    ps = sub.add_parser("spectrum", parents=[common], help="linearised eigenvalues in one sector")
    ps.add_argument("--l", type=int, default=0, choices=(0, 1))
    ps.add_argument("--count", type=int, default=3)
    pw = sub.add_parser("sweep", parents=[common], help="run a sweep config")
    pw.add_argument("config")
    pw.add_argument("--jobs", type=int, default=1)
    pi = sub.add_parser("interaction", parents=[common], help="interaction integral of two bubbles")
    pi.add_argument("--p", type=float, required=True)
    pi.add_argument("--q", type=float, required=True)
    pi.add_argument("--lambda-ratio", type=float, default=100.0)
    pi.add_argument("--separation", type=float, default=0.0)
    pi.add_argument("--slopes", action="store_true", help="regress against Q over 3 decades")
    sub.add_parser("kernel-test", parents=[common], help="Riesz identity self-check")
    return parser


# -- commands ------------------------------------------------------------------

def _profile_from(cfg: RunConfig, args):
    if args.profile:
        f, mu = read_profile(args.profile)
        if f.dim != cfg.N or mu != cfg.mu:
            cfg.N, cfg.mu = f.dim, mu
            cfg.validate()
        cfg.grid = f.grid.to_dict()
        return f
    lambdas = args.lambdas or [1.0]
    alphas = args.alphas or [1.0] * len(lambdas)
    if len(alphas) != len(lambdas):
        raise DomainError("--alpha needs one value per --lambda")
    fam = BubbleFamily.concentric(cfg.N, cfg.mu, lambdas, alphas)
    cfg.params["family"] = fam.to_dict()
    return family_profile(fam, cfg.make_grid())


def cmd_constants(cfg: RunConfig, args) -> dict:
    N, mu = cfg.N, cfg.mu
    out = sharp_constants(N, mu).to_dict()
    out.update({
        "riesz_bubble_constant": riesz_bubble_constant(N, mu),
        "riesz_bubble_constant_check": riesz_bubble_constant_from_equation(N, mu),
        "riesz_identity_gamma": mu / 2,
        "riesz_identity_constant": riesz_identity_constant(N, mu / 2),
        "bubble_amplitude": bubble_prefactor(N, mu),
        "ground_state_energy": ground_state_energy(N, mu),
    })
    return out


def cmd_deficit(cfg, args) -> dict:
    return deficit(_profile_from(cfg, args), cfg.mu).to_dict()


def cmd_residual(cfg, args) -> dict:
    f = _profile_from(cfg, args)
    return {"residual_dual_norm": residual_dual_norm(f, cfg.mu),
            "residual_dual_norm_strong": residual_dual_norm_strong(f, cfg.mu)}


def cmd_fit(cfg, args) -> dict:
    f = _profile_from(cfg, args)
    res = fit_sum(f, cfg.mu, args.kappa)
    if not res.converged:
        raise ConvergenceError(f"fit did not converge: {dumps(res)}")
    return res.to_dict()


def cmd_spectrum(cfg, args) -> dict:
    b = Bubble(cfg.N, cfg.mu, 1.0)
    res = eigenpairs(assemble(cfg.make_grid(), b, args.l), args.count)
    out = res.to_dict()
    out["two_star_mu"] = nl_exponent(cfg.N, cfg.mu)
    return out


def cmd_sweep(cfg, args):
    try:
        conf = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read sweep config: {exc}") from exc
    if not isinstance(conf, dict):
        raise DomainError("sweep config must be a JSON object")
    cfg.params["sweep"] = conf
    if conf.get("kind") == "decomposition":
        return profile_decomposition_demo(int(conf["N"]), float(conf["mu"]), int(conf.get("kappa", 2)),
                                          seed=int(conf.get("seed", cfg.seed)))
    return run_config(conf, jobs=args.jobs)


def cmd_interaction(cfg, args) -> dict:
    N = cfg.N
    if args.slopes:
        return interaction_slopes(N, args.p, args.q)
    R = args.lambda_ratio
    if R <= 0:
        raise DomainError("--lambda-ratio must be positive")
    c2 = (args.separation,) + (0.0,) * (N - 1)
    b1, b2 = Bubble(N, cfg.mu, R ** -0.5), Bubble(N, cfg.mu, R ** 0.5, c2)
    return {"Q": interaction_Q(b1, b2), "value": two_center_integral(args.p, args.q, b1, b2),
            "lambdas": [b1.scale, b2.scale], "separation": args.separation,
            "two_star": critical_exponent(N)}


def cmd_kernel_test(cfg, args) -> dict:
    grid = cfg.make_grid()
    b = Bubble(cfg.N, cfg.mu, 1.0)
    W = exact_riesz_of_bubble(b, grid)
    Wb = bubble_profile(b, grid)
    num = riesz_potential(Wb.abs_power(nl_exponent(cfg.N, cfg.mu)), cfg.mu)
    mask = (grid.r >= 1e-2) & (grid.r <= 1e2)
    err = float(np.max(np.abs(num.values[mask] / W.values[mask] - 1.0)))
    out = {"max_relative_error": err, "tolerance": KERNEL_TEST_TOL, "passed": err < KERNEL_TEST_TOL,
           "window": [1e-2, 1e2]}
    if not out["passed"]:
        raise NumericalError(f"Riesz identity check failed: {err:.3e}")
    return out


COMMANDS = {
    "constants": cmd_constants, "deficit": cmd_deficit, "residual": cmd_residual,
    "fit": cmd_fit, "spectrum": cmd_spectrum, "sweep": cmd_sweep,
    "interaction": cmd_interaction, "kernel-test": cmd_kernel_test,
}

DEFAULT_N = {"spectrum": 1024}


def _emit(cfg: RunConfig, result, stream) -> None:
    doc = {"command": cfg.command, "config": asdict(cfg), "result": result}
    text = dumps(doc)
    if cfg.out:
        write_json(cfg.out, doc)
        rows = getattr(result, "rows", None)
        if rows is not None:
            Path(cfg.out).with_suffix(".csv").write_text(rows_to_csv([r.flat() for r in rows]))
    if cfg.format == "csv":
        rows = getattr(result, "rows", None)
        flat = [r.flat() for r in rows] if rows is not None else [json.loads(dumps(result))]
        stream.write(rows_to_csv(flat))
    else:
        stream.write(text)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command not in COMMANDS:
        stderr.write(parser.format_usage())
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    cfg = RunConfig(
        command=args.command, N=args.dim, mu=args.mu,
        grid={"n": args.n or DEFAULT_N.get(args.command, 2048),
              "r_min": args.r_min, "r_max": args.r_max},
        seed=args.seed, out=args.out, format=args.format)
    try:
        cfg.validate()
        result = COMMANDS[args.command](cfg, args)
        _emit(cfg, result, stdout)
    except DomainError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
