"""Command-line front end: ``hqrsim {eval,sweep,optimize,reproduce,validate}``.

Settings come from flags and/or a ``key = value`` config file (``#`` starts
a comment); flags win.  Output is CSV (default) or JSON lines with a fixed
column order and numbers rendered to 12 significant digits.

Exit status: 0 success, 1 some rows flagged with a numerical error,
2 invalid configuration.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import experiments as ex
from .link import Grid, LinkResult, evaluate_grid
from .oracle import conditional_state
from .states import LOSS_DB_PER_KM_DEFAULT, THETA_DEFAULT, LinkConfig, MeasurementConfig, SqueezedQumode

COMMANDS = ("eval", "sweep", "optimize", "reproduce", "validate")
COLUMNS = (
    "alpha", "r", "beta", "p_c", "distance_km", "T", "F", "F_abs", "P_s", "feasible", "error",
    "theta", "label", "x", "y",
)
ORACLE_COLUMNS = ("F_oracle", "P_s_oracle")


class UsageError(Exception):
    pass


def _float(v: str) -> float:
    try:
        x = float(v)
    except ValueError:
        raise UsageError(f"not a number: {v!r}") from None
    if not math.isfinite(x):
        raise UsageError(f"value must be finite: {v!r}")
    return x


def _int(v: str) -> int:
    try:
        return int(v)
    except ValueError:
        raise UsageError(f"not an integer: {v!r}") from None


def _choice(*options: str) -> Callable[[str], str]:
    def parse(v: str) -> str:
        v = {"json-lines": "jsonl"}.get(v, v)
        if v not in options:
            raise UsageError(f"{v!r} is not one of {', '.join(options)}")
        return v
    return parse


def _axis(v: str) -> tuple[float, ...]:
    """Scalar, comma list, or ``lo:hi:n`` range."""
    if ":" in v:
        parts = v.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must be lo:hi:n, got {v!r}")
        lo, hi, n = _float(parts[0]), _float(parts[1]), _int(parts[2])
        if n < 1:
            raise UsageError(f"range needs n >= 1, got {v!r}")
        return tuple(float(x) for x in np.linspace(lo, hi, n))
    return tuple(_float(p) for p in v.split(",") if p.strip())


def _names(v: str) -> tuple[str, ...]:
    names = tuple(p.strip() for p in v.split(",") if p.strip())
    bad = set(names) - set(ex.PARAMS)
    if bad or not names:
        raise UsageError(f"free parameters must be drawn from {ex.PARAMS}, got {v!r}")
    return names


# key -> parser; sweep reinterprets alpha/r/beta/p_c as axes
KEYS: dict[str, Callable[[str], Any]] = {
    "command": _choice(*COMMANDS),
    "theta": _float,
    "distance_km": _float,
    "loss_db_per_km": _float,
    "alpha": str,
    "r": str,
    "beta": str,
    "p_c": str,
    "exhibit": _choice(*ex.EXHIBITS),
    "seed": _int,
    "out": str,
    "format": _choice("csv", "jsonl"),
    "objective": _choice(*ex.OBJECTIVES),
    "free": _names,
    "F_target": _float,
    "n_starts": _int,
    "n_points": _int,
    "protocol": _choice("shared-beta", "free"),
    "workers": _int,
}
ALIASES = {"pc": "p_c", "loss_db_km": "loss_db_per_km", "f_target": "F_target"}
DEFAULTS = {
    "theta": THETA_DEFAULT,
    "loss_db_per_km": LOSS_DB_PER_KM_DEFAULT,
    "seed": 0,
    "format": "csv",
    "objective": "max_F_abs",
    "n_starts": 16,
    "n_points": 20,
    "protocol": "shared-beta",
    "workers": 1,
}


def _canonical(key: str) -> str:
    key = key.strip().replace("-", "_")
    key = ALIASES.get(key, key)
    if key not in KEYS:
        raise UsageError(f"unknown key {key!r}")
    return key


def read_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected key = value")
        k, v = line.split("=", 1)
        out[_canonical(k)] = v.strip()
    return out


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    output_path: str | None = None
    format: str = "csv"

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if k not in self.params]
        if missing:
            raise UsageError(f"{self.command} needs {', '.join(missing)}")

    def scalar(self, key: str) -> float:
        vals = _axis(self.params[key])
        if len(vals) != 1:
            raise UsageError(f"{key} must be a single value for {self.command}")
        return vals[0]

    def link(self) -> LinkConfig:
        try:
            return LinkConfig(self.params["theta"], self.params["distance_km"], self.params["loss_db_per_km"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hqrsim", description=__doc__.split("\n\n")[0],
                                argument_default=argparse.SUPPRESS)
    p.add_argument("command", nargs="?", help="one of " + ", ".join(COMMANDS))
    p.add_argument("target", nargs="?", help="exhibit name for reproduce")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--theta", help="conditional rotation angle (default 0.01)")
    p.add_argument("--distance-km", dest="distance_km")
    p.add_argument("--loss-db-km", dest="loss_db_per_km", help="fibre loss in dB/km (default 0.17)")
    p.add_argument("--alpha", help="probe amplitude; sweep accepts lo:hi:n or a comma list")
    p.add_argument("--r", help="squeezing parameter")
    p.add_argument("--beta", help="re-amplification displacement")
    p.add_argument("--pc", "--p-c", dest="p_c", help="homodyne window half-width")
    p.add_argument("--exhibit", help="table1, fig2, fig3 or fig4")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", help="csv or jsonl")
    p.add_argument("--seed", help="multi-start sampling seed")
    p.add_argument("--objective", help="optimize: max_F_abs or max_Ps_at_fixed_F")
    p.add_argument("--free", help="optimize: comma list from alpha,r,beta")
    p.add_argument("--f-target", dest="F_target", help="optimize: fidelity target")
    p.add_argument("--n-starts", dest="n_starts", help="multi-start count")
    p.add_argument("--n-points", dest="n_points", help="validate: number of random points")
    p.add_argument("--protocol", help="table1: shared-beta (default) or free")
    p.add_argument("--workers", help="process count for independent exhibit cells")
    return p


def resolve(argv: Sequence[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    raw: dict[str, str] = {}
    if "config" in ns:
        try:
            with open(ns.pop("config")) as fh:
                raw.update(read_config(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    target = ns.pop("target", None)
    if "command" in ns:
        raw["command"] = ns.pop("command")
    if target is not None:
        if "exhibit" in ns and ns["exhibit"] != target:
            raise UsageError("exhibit given twice with different values")
        ns["exhibit"] = target
    raw.update({k: str(v) for k, v in ns.items()})

    params: dict[str, Any] = dict(DEFAULTS)
    for k, v in raw.items():
        params[_canonical(k)] = KEYS[_canonical(k)](v)
    command = params.pop("command", None)
    if command is None:
        raise UsageError("no command given")
    if target is not None and command != "reproduce":
        raise UsageError(f"unexpected argument {target!r}")
    if params["n_starts"] < 0 or params["n_points"] < 1 or params["workers"] < 1:
        raise UsageError("n_starts >= 0, n_points >= 1 and workers >= 1 required")
    return RunConfig(command, params, params.pop("out", None), params.pop("format"))


# ---------------------------------------------------------------- rows


def _row_from_result(res: LinkResult, label: str = "", x=math.nan, y=math.nan, feasible=None) -> dict:
    return _row_from_point(ex.CurvePoint.from_result(res, x, y, label, res.ok if feasible is None else feasible))


def _row_from_point(pt: ex.CurvePoint) -> dict:
    link = pt.link
    return {
        "alpha": pt.alpha, "r": pt.r, "beta": pt.beta, "p_c": pt.p_c,
        "distance_km": link.distance_km if link else math.nan, "T": link.T if link else math.nan,
        "F": pt.F, "F_abs": pt.F_abs, "P_s": pt.P_s, "feasible": pt.feasible, "error": pt.error,
        "theta": link.theta if link else math.nan, "label": pt.label, "x": pt.x, "y": pt.y,
    }


def _num(v: float) -> str:
    return "nan" if math.isnan(v) else format(v, ".12g")


def render(rows: Iterable[dict], columns: Sequence[str], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        import csv

        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])
    else:
        for row in rows:
            obj = {}
            for c in columns:
                v = row[c]
                if isinstance(v, bool) or isinstance(v, str):
                    obj[c] = v
                else:
                    obj[c] = None if math.isnan(v) else float(_num(v))
            buf.write(json.dumps(obj) + "\n")
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    return _num(float(v))


def flagged(row: dict) -> bool:
    """A numerical failure, as opposed to a target reported infeasible."""
    return bool(row["error"]) and not row["error"].startswith("infeasible")


# ---------------------------------------------------------------- commands


def cmd_eval(cfg: RunConfig) -> list[dict]:
    cfg.require("distance_km", "alpha", "p_c")
    link = cfg.link()
    grid = Grid(
        (cfg.scalar("alpha"),),
        (cfg.scalar("r"),) if "r" in cfg.params else (0.0,),
        (cfg.scalar("beta"),) if "beta" in cfg.params else (0.0,),
        (cfg.scalar("p_c"),),
    )
    return [_row_from_result(res) for res in evaluate_grid(grid, link)]


def cmd_sweep(cfg: RunConfig) -> list[dict]:
    cfg.require("distance_km", "alpha", "p_c")
    axes = {k: _axis(cfg.params[k]) if k in cfg.params else (0.0,) for k in ("alpha", "r", "beta", "p_c")}
    if any(not a for a in axes.values()):
        raise UsageError("empty axis")
    return [_row_from_result(res) for res in evaluate_grid(Grid(**axes), cfg.link())]


def cmd_optimize(cfg: RunConfig) -> list[dict]:
    cfg.require("distance_km", "p_c")
    free = cfg.get("free", ex.PARAMS)
    fixed = {k: cfg.scalar(k) for k in ex.PARAMS if k not in free and k in cfg.params}
    starts = ({k: cfg.scalar(k) for k in ex.PARAMS if k in cfg.params},) if any(k in cfg.params for k in free) else ()
    try:
        prob = ex.OptimizationProblem(
            cfg.params["objective"], cfg.link(), cfg.scalar("p_c"), free=free, fixed=fixed,
            F_target=cfg.get("F_target"), n_starts=cfg.params["n_starts"], seed=cfg.params["seed"], starts=starts,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if prob.objective == "max_F_abs":
        res, _ = ex.optimize_fidelity(prob)
        return [_row_from_result(res, "max_F_abs", cfg.scalar("p_c"), res.F_abs)]
    return [_row_from_point(ex.optimize_success(prob, label="max_Ps_at_fixed_F"))]


def cmd_reproduce(cfg: RunConfig) -> list[dict]:
    cfg.require("exhibit")
    exhibit = cfg.params["exhibit"]
    opts: dict[str, Any] = {"n_starts": cfg.params["n_starts"]}
    if exhibit == "table1":
        opts["protocol"] = cfg.params["protocol"]
    if exhibit == "fig3" and "n_starts" not in cfg.params:
        opts["n_starts"] = 8
    kwargs = {"workers": cfg.params["workers"]} if exhibit != "fig4" else {}
    return [_row_from_point(p) for p in ex.reproduce(exhibit, seed=cfg.params["seed"], **kwargs, **opts)]


def validation_points(n: int, seed: int) -> list[tuple[SqueezedQumode, LinkConfig, MeasurementConfig]]:
    """Random points in the regime where the quadrature oracle is affordable."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        alpha, r, theta, T, beta, p_c = rng.uniform([0, 0, 0.1, 0.5, 0, 0.1], [3, 1, 1, 1, 2, 1])
        out.append((SqueezedQumode(alpha, r), LinkConfig.from_transmittance(theta, T), MeasurementConfig(beta, p_c)))
    return out


def cmd_validate(cfg: RunConfig) -> list[dict]:
    from .link import fidelity

    rows = []
    for q, link, meas in validation_points(cfg.params["n_points"], cfg.params["seed"]):
        res = fidelity(q, link, meas)
        row = _row_from_result(res, "validate")
        try:
            st = conditional_state(q, link, meas)
            row["F_oracle"], row["P_s_oracle"] = st.fidelity(), st.norm
            dF, dP = abs(res.F - st.fidelity()), abs(res.P_s - st.norm)
            if dF > 1e-5 or dP > 1e-6:
                row["error"] = f"closed form vs oracle: dF={dF:.3g}, dP={dP:.3g}"
        except (ArithmeticError, ValueError) as exc:
            row["F_oracle"] = row["P_s_oracle"] = math.nan
            row["error"] = f"oracle: {exc}"
        rows.append(row)
    return rows


HANDLERS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "reproduce": cmd_reproduce,
    "validate": cmd_validate,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve(argv)
        rows = HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"hqrsim: error: {exc}", file=sys.stderr)
        return 2
    columns = COLUMNS + (ORACLE_COLUMNS if cfg.command == "validate" else ())
    text = render(rows, columns, cfg.format)
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    bad = [r for r in rows if flagged(r)]
    if bad:
        print(f"hqrsim: {len(bad)} of {len(rows)} rows flagged", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
