"""Parameter optimisation and the datasets behind the reference exhibits.

Exhibits are fixed at theta = 0.01 and 0.17 dB/km:

* ``table1``: best F_abs and its P_s for three probe configurations;
* ``fig2``: best F_abs (free alpha, r, beta) against p_c for 10-25 km;
* ``fig3``: best P_s at a fidelity target, with the USD benchmark;
* ``fig4``: F_abs against alpha for the three configurations.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import optimize as sopt

from .link import LinkResult, evaluate
from .numerics import maximize
from .states import LOSS_DB_PER_KM_DEFAULT, THETA_DEFAULT, LinkConfig

PARAMS = ("alpha", "r", "beta")
DEFAULT_BOUNDS = {"alpha": (0.0, 2000.0), "r": (0.0, 2.5), "beta": (0.0, 2000.0)}
OBJECTIVES = ("max_F_abs", "max_Ps_at_fixed_F")
EXHIBITS = ("table1", "fig2", "fig3", "fig4")

# optimisers are steered away from vanishing acceptance; below this the
# objective is F_abs minus the number of decades missing
P_MIN = 1e-6
# constraint slack when declaring a fidelity target met
F_TOL = 1e-9

NAN = float("nan")


@dataclass(frozen=True)
class OptimizationProblem:
    objective: str
    link: LinkConfig
    p_c: float
    free: tuple[str, ...] = PARAMS
    fixed: Mapping[str, float] = field(default_factory=dict)
    bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    F_target: float | None = None
    n_starts: int = 16
    seed: int = 0
    # warm starts, as full {alpha, r, beta} mappings
    starts: tuple[Mapping[str, float], ...] = ()
    heuristic_starts: bool = True

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        free = tuple(self.free)
        if not free or len(set(free)) != len(free) or not set(free) <= set(PARAMS):
            raise ValueError(f"free must be a nonempty subset of {PARAMS}, got {free}")
        object.__setattr__(self, "free", free)
        for name, (lo, hi) in self.box_items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad bounds for {name}: ({lo}, {hi})")
        for name, v in self.fixed.items():
            if name not in PARAMS or not math.isfinite(v):
                raise ValueError(f"bad fixed parameter {name}={v}")
        if self.objective == "max_Ps_at_fixed_F":
            if self.F_target is None or not math.isfinite(self.F_target):
                raise ValueError("max_Ps_at_fixed_F needs a finite F_target")
            if "alpha" not in free:
                raise ValueError("max_Ps_at_fixed_F needs alpha free")

    def box_items(self):
        return [(n, tuple(map(float, self.bounds.get(n, DEFAULT_BOUNDS[n])))) for n in self.free]

    @property
    def box(self) -> np.ndarray:
        return np.array([b for _, b in self.box_items()])

    def params(self, x: Sequence[float]) -> dict[str, float]:
        out = {n: float(self.fixed.get(n, 0.0)) for n in PARAMS}
        out.update({n: float(v) for n, v in zip(self.free, x)})
        return out

    def vector(self, params: Mapping[str, float]) -> np.ndarray:
        box = self.box
        x = np.array([params.get(n, self.fixed.get(n, 0.0)) for n in self.free], dtype=float)
        return np.clip(x, box[:, 0], box[:, 1])

    def evaluate(self, params: Mapping[str, float]) -> LinkResult:
        return evaluate(params["alpha"], params["r"], params["beta"], self.p_c, self.link)


@dataclass(frozen=True)
class CurvePoint:
    """One row of an exhibit: abscissa, ordinate and where it came from."""

    x: float
    y: float
    alpha: float
    r: float
    beta: float
    label: str
    p_c: float = NAN
    link: LinkConfig | None = None
    F: float = NAN
    F_abs: float = NAN
    P_s: float = NAN
    feasible: bool = True
    error: str = ""

    @property
    def params(self) -> tuple[float, float, float]:
        return (self.alpha, self.r, self.beta)

    @classmethod
    def from_result(cls, res: LinkResult, x: float, y: float, label: str, feasible: bool = True, error: str = ""):
        return cls(
            x, y, res.alpha, res.r, res.beta, label, res.p_c, res.link,
            res.F, res.F_abs, res.P_s, feasible, error or res.error,
        )


def _safe_eval(problem: OptimizationProblem, params: Mapping[str, float]) -> LinkResult | None:
    try:
        return problem.evaluate(params)
    except (ArithmeticError, ValueError):
        return None


def _fidelity_score(res: LinkResult | None) -> float:
    if res is None:
        return -1e3
    if res.P_s < P_MIN:
        return res.F_abs - math.log10(P_MIN / res.P_s)
    return res.F_abs


def _heuristic_starts(problem: OptimizationProblem) -> list[dict[str, float]]:
    # useful displacements put beta sin(theta/2) and alpha sin(theta) at the
    # scale of the window, so seed a few multiples of that
    s = max(problem.p_c, 0.05) / max(abs(math.sin(problem.link.theta / 2)), 1e-9)
    out = []
    for a, b, r in ((1.0, 1.0, 1.0), (2.0, 0.5, 1.5), (0.5, 2.0, 0.5), (4.0, 4.0, 1.5), (1.0, 0.0, 0.0)):
        out.append({"alpha": a * s, "beta": b * s, "r": r})
    return out


def _starts(problem: OptimizationProblem, extra: Iterable[Mapping[str, float]] = ()) -> list[np.ndarray]:
    seeds = _heuristic_starts(problem) if problem.heuristic_starts else []
    return [problem.vector(p) for p in (*problem.starts, *extra, *seeds)]


def optimize_fidelity(problem: OptimizationProblem) -> tuple[LinkResult, dict[str, float]]:
    """Multi-start maximisation of F_abs over the free parameters.

    On total failure the returned ``LinkResult`` carries the error text and
    the best parameters seen so far (or the first start).
    """
    if problem.objective != "max_F_abs":
        raise ValueError("optimize_fidelity needs objective max_F_abs")

    def score(x):
        return _fidelity_score(_safe_eval(problem, problem.params(x)))

    starts = _starts(problem)
    try:
        opt = maximize(score, starts[0], problem.box, problem.n_starts, problem.seed, extra_starts=starts[1:])
    except RuntimeError as exc:
        params = problem.params(starts[0])
        return LinkResult(NAN, NAN, NAN, params["alpha"], params["r"], params["beta"], problem.p_c, problem.link, str(exc)), params
    params = problem.params(opt.x)
    res = _safe_eval(problem, params)
    if res is None:
        res = LinkResult(NAN, NAN, NAN, params["alpha"], params["r"], params["beta"], problem.p_c, problem.link, "optimum not evaluable")
    elif res.P_s < P_MIN:
        res = replace(res, error=f"P_s = {res.P_s:.3g} below {P_MIN:g}")
    return res, params


def _slice_search(problem: OptimizationProblem, params: Mapping[str, float], target: float) -> LinkResult | None:
    """Best P_s with F_abs = target along alpha, everything else held at ``params``."""
    lo, hi = dict(problem.box_items())["alpha"]

    def f(a):
        res = _safe_eval(problem, {**params, "alpha": a})
        return (res.F_abs if res is not None and res.P_s >= P_MIN else -1.0), res

    opt = maximize(lambda x: f(float(x[0]))[0], [params["alpha"]], [(lo, hi)], n_starts=2, seed=problem.seed)
    peak = float(opt.x[0])
    if opt.fun < target:
        return None
    best = None
    for end in (lo, hi):
        val, res = f(end)
        if val >= target:
            cand = res
        else:
            a = sopt.brentq(lambda a: f(a)[0] - target, min(end, peak), max(end, peak), xtol=1e-12, rtol=1e-14)
            # brentq can land a hair on the wrong side; step toward the peak
            step = 1e-12 * max(1.0, abs(a))
            while f(a)[0] < target - F_TOL and abs(a - peak) > step:
                a += math.copysign(step, peak - a)
                step *= 2
            cand = f(a)[1]
        if cand is not None and cand.F_abs >= target - F_TOL and (best is None or cand.P_s > best.P_s):
            best = cand
    return best


def optimize_success(
    problem: OptimizationProblem, ceiling: tuple[LinkResult, Mapping[str, float]] | None = None, label: str = ""
) -> CurvePoint:
    """Maximise P_s subject to F_abs >= F_target.

    Penalty method with escalating weight, then a bisection along alpha at
    the best displacement to land on the constraint.  ``ceiling`` is the
    max-F_abs solution over the same free set; it is computed when absent
    and decides feasibility.
    """
    target = float(problem.F_target)
    if ceiling is None:
        ceiling = optimize_fidelity(replace(problem, objective="max_F_abs", F_target=None))
    top, top_params = ceiling
    if not top.ok or target > top.F_abs + F_TOL:
        msg = f"infeasible: F_target {target:g} above attainable F_abs {top.F_abs:.6g}" if top.ok else top.error
        return CurvePoint(target, NAN, *(top_params[n] for n in PARAMS), label, problem.p_c, problem.link, feasible=False, error=msg)

    def scored(weight):
        def g(x):
            res = _safe_eval(problem, problem.params(x))
            if res is None:
                return -1e3
            gap = max(0.0, target - res.F_abs)
            return res.P_s - weight * gap * gap
        return g

    incumbent = problem.vector(top_params)
    starts = _starts(problem, [top_params])
    for i, weight in enumerate((1e2, 1e4, 1e6, 1e8)):
        opt = maximize(
            scored(weight), incumbent, problem.box, problem.n_starts if i == 0 else 0,
            problem.seed, extra_starts=starts if i == 0 else (),
        )
        incumbent = opt.x

    found = []
    res = _safe_eval(problem, problem.params(incumbent))
    if res is not None and res.F_abs >= target - F_TOL:
        found.append(res)
    for base in (problem.params(incumbent), dict(top_params)):
        sl = _slice_search(problem, base, target)
        if sl is not None:
            found.append(sl)
    if not found:
        return CurvePoint(target, NAN, *(top_params[n] for n in PARAMS), label, problem.p_c, problem.link,
                          feasible=False, error="infeasible: no feasible point located")
    best = max(found, key=lambda r: (r.P_s, r.F_abs))
    return CurvePoint.from_result(best, target, best.P_s, label)


# ---------------------------------------------------------------- USD benchmark


def usd_bound(link: LinkConfig, alphas: Iterable[float], label: str = "USD") -> list[CurvePoint]:
    """Coherent-state benchmark: (F, P) traced out parametrically in alpha.

    The fibre dephases the qubit pair by Lambda = exp(-R a^2 (1 - cos theta)),
    giving F = (1 + Lambda)/2, while unambiguous discrimination of the
    transmitted branches succeeds with 1 - exp(-T a^2 (1 - cos theta)).
    """
    c = 1.0 - math.cos(link.theta)
    out = []
    for a in alphas:
        a = float(a)
        lam = math.exp(-link.R * a * a * c)
        F = 0.5 * (1.0 + lam)
        P = -math.expm1(-link.T * a * a * c)
        out.append(CurvePoint(F, P, a, 0.0, 0.0, label, link=link, F=F, F_abs=F, P_s=P))
    return out


def usd_success_at_fidelity(F: float, link: LinkConfig) -> float:
    """P_USD as a function of F, i.e. 1 - (2F - 1)^(T/R)."""
    if not 0.5 < F <= 1.0:
        raise ValueError("F must lie in (0.5, 1]")
    if link.R == 0:
        return 1.0 if F == 1.0 else float("nan")
    return 1.0 - (2.0 * F - 1.0) ** (link.T / link.R)


# ---------------------------------------------------------------- exhibits


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _link(distance_km: float) -> LinkConfig:
    return LinkConfig(THETA_DEFAULT, distance_km, LOSS_DB_PER_KM_DEFAULT)


TABLE1_DISTANCES = (10.0, 20.0)
TABLE1_WINDOWS = (0.1, 0.25, 0.5)
CONFIGS = ("squeezed-amplified", "coherent-amplified", "coherent-no-amp")
R_SQUEEZED = 1.5
# window at which the shared displacement of the alpha sweeps is tuned
P_C_REFERENCE = 0.25


def shared_displacement(distance_km: float, seed: int = 0, n_starts: int = 16) -> float:
    """beta used by the alpha sweeps: best (alpha, beta) at r = 1.5, p_c = 0.25."""
    prob = OptimizationProblem(
        "max_F_abs", _link(distance_km), P_C_REFERENCE, free=("alpha", "beta"),
        fixed={"r": R_SQUEEZED}, n_starts=n_starts, seed=seed,
    )
    res, params = optimize_fidelity(prob)
    if not res.ok:
        raise RuntimeError(f"shared displacement at {distance_km} km: {res.error}")
    return params["beta"]


def _config_problem(config: str, distance_km: float, p_c: float, beta: float, protocol: str, seed: int, n_starts: int):
    link = _link(distance_km)
    if protocol == "shared-beta":
        fixed = {
            "squeezed-amplified": {"r": R_SQUEEZED, "beta": beta},
            "coherent-amplified": {"r": 0.0, "beta": beta},
            "coherent-no-amp": {"r": 0.0, "beta": 0.0},
        }[config]
        free = ("alpha",)
    else:
        free, fixed = {
            "squeezed-amplified": (("alpha", "r", "beta"), {}),
            "coherent-amplified": (("alpha", "beta"), {"r": 0.0}),
            "coherent-no-amp": (("alpha",), {"r": 0.0, "beta": 0.0}),
        }[config]
    return OptimizationProblem("max_F_abs", link, p_c, free=free, fixed=fixed, n_starts=n_starts, seed=seed)


def _table_cell(args) -> CurvePoint:
    config, d, p_c, beta, protocol, seed, n_starts = args
    res, _ = optimize_fidelity(_config_problem(config, d, p_c, beta, protocol, seed, n_starts))
    return CurvePoint.from_result(res, p_c, res.F_abs, f"{d:g}km/{config}", feasible=res.ok)


def table1(protocol: str = "shared-beta", seed: int = 0, n_starts: int = 16, workers: int = 1) -> list[CurvePoint]:
    """18 cells in (distance, p_c, configuration) order; x = p_c, y = F_abs.

    ``shared-beta`` (default) fixes r = 1.5 for the squeezed probe and, per
    distance, one displacement shared by both amplified configurations, then
    optimises alpha per cell.  ``free`` optimises every free parameter per cell.
    """
    if protocol not in ("shared-beta", "free"):
        raise ValueError("protocol must be 'shared-beta' or 'free'")
    betas = {d: shared_displacement(d, seed, n_starts) if protocol == "shared-beta" else NAN for d in TABLE1_DISTANCES}
    jobs = [(c, d, p, betas[d], protocol, seed, n_starts) for d in TABLE1_DISTANCES for p in TABLE1_WINDOWS for c in CONFIGS]
    return _map(_table_cell, jobs, workers)


FIG2_DISTANCES = (10.0, 15.0, 20.0, 25.0)
FIG2_WINDOWS = (0.01, 0.025, 0.05, 0.075, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)


def _fig2_problem(d, p_c, seed, n_starts, starts=(), heuristic=True):
    return OptimizationProblem(
        "max_F_abs", _link(d), p_c, n_starts=n_starts, seed=seed, starts=tuple(starts), heuristic_starts=heuristic
    )


def _fig2_curve(args) -> list[tuple[LinkResult, dict]]:
    d, windows, seed, n_starts = args
    sols: list[tuple[LinkResult, dict] | None] = [None] * len(windows)
    for i, p_c in enumerate(windows):
        warm = [sols[i - 1][1]] if i else []
        sols[i] = optimize_fidelity(_fig2_problem(d, p_c, seed, n_starts, warm))
    return sols


def fig2(
    distances: Sequence[float] = FIG2_DISTANCES,
    windows: Sequence[float] = FIG2_WINDOWS,
    seed: int = 0,
    n_starts: int = 16,
    workers: int = 1,
) -> list[CurvePoint]:
    """Best F_abs (alpha, r, beta free) against p_c per distance; x = p_c, y = F_abs.

    Each curve is swept in increasing p_c with warm starts; a polishing pass
    then restarts every point from its neighbours in p_c and distance and
    keeps any improvement.
    """
    windows = tuple(sorted(windows))
    grid = _map(_fig2_curve, [(d, windows, seed, n_starts) for d in distances], workers)
    for _ in range(2):
        changed = False
        for a, d in enumerate(distances):
            for i, p_c in enumerate(windows):
                nbrs = [grid[a][j][1] for j in (i - 1, i + 1) if 0 <= j < len(windows)]
                nbrs += [grid[b][i][1] for b in (a - 1, a + 1) if 0 <= b < len(distances)]
                cand = optimize_fidelity(_fig2_problem(d, p_c, seed, 0, nbrs, heuristic=False))
                if cand[0].ok and (not grid[a][i][0].ok or cand[0].F_abs > grid[a][i][0].F_abs + 1e-12):
                    grid[a][i] = cand
                    changed = True
        if not changed:
            break
    return [
        CurvePoint.from_result(res, p_c, res.F_abs, f"{d:g}km", feasible=res.ok)
        for d, row in zip(distances, grid)
        for p_c, (res, _) in zip(windows, row)
    ]


FIG3_DISTANCE = 10.0
FIG3_WINDOWS = (0.1, 0.25, 0.5)
FIG3_SQUEEZING = (0.8, 1.15)
FIG3_TARGETS = tuple(round(0.66 + 0.01 * i, 2) for i in range(34)) + (0.995, 1.0)


def _fig3_curve(args) -> list[CurvePoint]:
    d, p_c, r, targets, seed, n_starts = args
    base = OptimizationProblem(
        "max_F_abs", _link(d), p_c, free=("alpha", "beta"), fixed={"r": r}, n_starts=n_starts, seed=seed
    )
    ceiling = optimize_fidelity(base)
    label = f"p_c={p_c:g}/r={r:g}"
    out = []
    warm: tuple = ()
    for F in targets:
        prob = replace(base, objective="max_Ps_at_fixed_F", F_target=F, starts=warm)
        pt = optimize_success(prob, ceiling, label)
        out.append(pt)
        if pt.feasible:
            warm = ({"alpha": pt.alpha, "r": r, "beta": pt.beta},)
    return out


def fig3(
    distance_km: float = FIG3_DISTANCE,
    windows: Sequence[float] = FIG3_WINDOWS,
    squeezing: Sequence[float] = FIG3_SQUEEZING,
    targets: Sequence[float] = FIG3_TARGETS,
    seed: int = 0,
    n_starts: int = 8,
    workers: int = 1,
    usd_alphas: Sequence[float] | None = None,
) -> list[CurvePoint]:
    """Best P_s per fidelity target (alpha, beta free, r fixed) plus the USD curve.

    x = F target, y = P_s; infeasible targets are kept with ``feasible=False``.
    """
    jobs = [(distance_km, p, r, tuple(targets), seed, n_starts) for p in windows for r in squeezing]
    curves = _map(_fig3_curve, jobs, workers)
    if usd_alphas is None:
        usd_alphas = np.linspace(0.0, 400.0, 81)
    return [pt for c in curves for pt in c] + usd_bound(_link(distance_km), usd_alphas)


FIG4_ALPHAS = tuple(float(a) for a in np.linspace(0.0, 400.0, 81))


def fig4(
    distances: Sequence[float] = TABLE1_DISTANCES,
    windows: Sequence[float] = TABLE1_WINDOWS,
    alphas: Sequence[float] = FIG4_ALPHAS,
    seed: int = 0,
    n_starts: int = 16,
) -> list[CurvePoint]:
    """F_abs against alpha for the three configurations; x = alpha, y = F_abs."""
    out = []
    for d in distances:
        beta = shared_displacement(d, seed, n_starts)
        link = _link(d)
        for p_c in windows:
            for config in CONFIGS:
                r, b = {
                    "squeezed-amplified": (R_SQUEEZED, beta),
                    "coherent-amplified": (0.0, beta),
                    "coherent-no-amp": (0.0, 0.0),
                }[config]
                label = f"{d:g}km/p_c={p_c:g}/{config}"
                for a in alphas:
                    try:
                        res = evaluate(a, r, b, p_c, link)
                    except (ArithmeticError, ValueError) as exc:
                        out.append(CurvePoint(a, NAN, a, r, b, label, p_c, link, feasible=False, error=str(exc)))
                        continue
                    out.append(CurvePoint.from_result(res, a, res.F_abs, label))
    return out


def reproduce(target: str, seed: int = 0, workers: int = 1, **options) -> list[CurvePoint]:
    """Dataset behind one exhibit, in a fixed deterministic order."""
    if target not in EXHIBITS:
        raise ValueError(f"unknown exhibit {target!r}; choose from {EXHIBITS}")
    if target == "fig4":
        return fig4(seed=seed, **options)
    return {"table1": table1, "fig2": fig2, "fig3": fig3}[target](seed=seed, workers=workers, **options)
