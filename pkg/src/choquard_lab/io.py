"""Profile CSV files and deterministic JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import DomainError
from .radial import RadialGrid, RadialProfile

SIG_DIGITS = 12
SCHEMA_PATH = Path(__file__).with_name("schemas") / "output.schema.json"

_HEADER = re.compile(
    r"#\s*N=(?P<N>\S+)\s+mu=(?P<mu>\S+)\s+tail_inner=(?P<ti>\S+)\s+tail_outer=(?P<to>\S+)"
    r"(?:\s+r_min=(?P<r0>\S+)\s+r_max=(?P<r1>\S+))?\s*$")


def _fmt_tail(p) -> str:
    return "none" if p is None else repr(float(p))


def _parse_tail(s: str):
    if s.lower() in ("none", "nan", ""):
        return None
    return float(s)


def write_profile(path, f: RadialProfile, mu: float) -> None:
    lines = [f"# N={f.dim} mu={float(mu)!r} tail_inner={_fmt_tail(f.tail_inner)} "
             f"tail_outer={_fmt_tail(f.tail_outer)} r_min={f.grid.r_min!r} r_max={f.grid.r_max!r}"]
    lines += [f"{r!r},{v!r}" for r, v in zip(f.r.tolist(), f.values.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_profile(path) -> tuple[RadialProfile, float]:
    """Profile and mu from a radial CSV file; the radii must be log-uniform."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise DomainError(f"{path}: empty profile file")
    m = _HEADER.match(text[0].strip())
    if not m:
        raise DomainError(f"{path}: bad header {text[0]!r}")
    try:
        N = int(m["N"])
        mu = float(m["mu"])
        ti, to = _parse_tail(m["ti"]), _parse_tail(m["to"])
        rows = [row for row in csv.reader(text[1:]) if row and not row[0].startswith("#")]
        if len(rows) < 2:
            raise ValueError("need at least two data rows")
        r = np.array([float(a) for a, _ in rows])
        v = np.array([float(b) for _, b in rows])
        r0 = float(m["r0"]) if m["r0"] else float(r[0])
        r1 = float(m["r1"]) if m["r1"] else float(r[-1])
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from exc
    grid = RadialGrid(N, len(r), r0, r1)
    if not np.allclose(grid.r, r, rtol=1e-9, atol=0.0):
        raise DomainError(f"{path}: radii are not log-uniform")
    return RadialProfile(grid, v, ti, to), mu


def _round(x):
    if isinstance(x, (bool, type(None), str)):
        return x
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_round(v) for v in x]
    if hasattr(x, "to_dict"):
        return _round(x.to_dict())
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(obj) -> str:
    """JSON with floats rounded to 12 significant digits and sorted keys."""
    return json.dumps(_round(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def rows_to_csv(rows: list) -> str:
    """Flat CSV of a list of flat dicts; columns in first-row order."""
    if not rows:
        return ""
    cols = list(rows[0].keys())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow(["" if row.get(c) is None else
                    (f"{row[c]:.{SIG_DIGITS}g}" if isinstance(row.get(c), float) else row.get(c))
                    for c in cols])
    return buf.getvalue()


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text())
