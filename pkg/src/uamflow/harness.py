"""Parameter sweeps, Pareto filtering, trade-off curves and design comparisons.

Every metric reported here is recomputed from route flows with
``evaluate_solution``; nothing is read back from LP auxiliary variables.
"""

from __future__ import annotations

import csv
import enum
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .optimizer import BACKENDS, CCPMonotonicityError, LpBackendError, Solution, Status, ccp_solve
from .scenario import CompiledScenario, compile_scenario, load_scenario
from .welfare import gini

log = logging.getLogger(__name__)

ENV_TOL = "UAMFLOW_TOL"
ENV_MAX_ITER = "UAMFLOW_MAX_ITER"
ENV_BACKEND = "UAMFLOW_BACKEND"

# Large enough to exceed the [0, 1] utility range, so the SWF is the mean.
UTILITARIAN_DELTA = 1.0
EGALITARIAN_DELTA = 0.0


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-4
    max_iter: int = 50
    backend: str = "highs"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"solver tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")

    @classmethod
    def from_env(cls, **overrides) -> "SolverSettings":
        """Defaults, then environment variables, then explicit overrides."""
        values = asdict(cls())
        env = os.environ
        if ENV_TOL in env:
            values["tol"] = float(env[ENV_TOL])
        if ENV_MAX_ITER in env:
            values["max_iter"] = int(env[ENV_MAX_ITER])
        if ENV_BACKEND in env:
            values["backend"] = env[ENV_BACKEND]
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def solve(self, compiled: CompiledScenario, y0=None, **params) -> Solution:
        return ccp_solve(
            compiled.problem(**params), y0=y0, tol=self.tol, max_iter=self.max_iter, backend=self.backend
        )


GRID_FIELDS = ("omega", "delta1", "delta2", "m_u", "p_u")


@dataclass(frozen=True)
class SweepPlan:
    """Cartesian grid over the objective weight, fairness thresholds and caps.

    With ``tie_deltas`` the two thresholds move together (``delta2`` takes
    the value of ``delta1`` and its own grid is ignored). Replication 0 of
    every cell starts from the default uniform flows; further replications
    start from random flows drawn from ``(seed, cell, replication)``.
    """

    omega: tuple[float, ...] = (0.5,)
    delta1: tuple[float, ...] = (0.5,)
    delta2: tuple[float, ...] = (0.5,)
    m_u: tuple[float, ...] = (math.inf,)
    p_u: tuple[float, ...] = (math.inf,)
    tie_deltas: bool = False
    replications: int = 1
    seed: int = 0
    scenario: str | None = None
    output_dir: str = "sweep_out"
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        for name in GRID_FIELDS:
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        problems = self.problems()
        if problems:
            raise ValueError("invalid sweep plan: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        for name in GRID_FIELDS:
            vals = getattr(self, name)
            if not vals:
                out.append(f"grid.{name}: empty")
            if any(math.isnan(v) or v < 0 for v in vals):
                out.append(f"grid.{name}: values must be >= 0")
        if any(v > 1 for v in self.omega):
            out.append("grid.omega: values must be in [0, 1]")
        if self.replications < 1:
            out.append("replications must be >= 1")
        return out

    def cells(self) -> list[dict]:
        deltas2 = (None,) if self.tie_deltas else self.delta2
        out = []
        for omega, d1, d2, m_u, p_u in itertools.product(self.omega, self.delta1, deltas2, self.m_u, self.p_u):
            for rep in range(self.replications):
                out.append(dict(omega=omega, delta1=d1, delta2=d1 if d2 is None else d2,
                                m_u=m_u, p_u=p_u, replication=rep))
        return out

    def __len__(self) -> int:
        return len(self.cells())


def _plan_float(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(value)


def load_plan(path: str | Path) -> SweepPlan:
    path = Path(path)
    data = tomllib.loads(path.read_text())
    grid = data.get("grid", {})
    unknown = set(grid) - set(GRID_FIELDS)
    if unknown:
        raise ValueError(f"plan grid has unknown parameters: {sorted(unknown)}")
    kwargs = {name: tuple(_plan_float(v) for v in grid[name]) for name in GRID_FIELDS if name in grid}
    scenario = data.get("scenario")
    if scenario is not None and not Path(scenario).is_absolute():
        scenario = str(path.parent / scenario)
    return SweepPlan(
        **kwargs,
        tie_deltas=bool(data.get("tie_deltas", False)),
        replications=int(data.get("replications", 1)),
        seed=int(data.get("seed", 0)),
        scenario=scenario,
        output_dir=str(data.get("output_dir", "sweep_out")),
        solver=SolverSettings.from_env(**data.get("solver", {})),
    )


@dataclass
class DesignPoint:
    index: int
    omega: float
    delta1: float
    delta2: float
    m_u: float
    p_u: float
    replication: int
    status: str
    iterations: int = 0
    objective: float = math.nan
    demand_pct: float = math.nan
    noise_db: float = math.nan
    energy_pct: float = math.nan
    gini_d: float = math.nan
    gini_n: float = math.nan
    max_noise_db: float = math.nan
    message: str = ""
    d: np.ndarray | None = field(default=None, repr=False, compare=False)
    n_inc: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def ok(self) -> bool:
        return self.status in (Status.Converged.value, Status.IterationCap.value)

    @property
    def params(self) -> dict:
        return dict(omega=self.omega, delta1=self.delta1, delta2=self.delta2, m_u=self.m_u, p_u=self.p_u)

    def objectives(self) -> tuple[float, float, float]:
        return (self.demand_pct, self.noise_db, self.energy_pct)


CSV_FIELDS = [f.name for f in fields(DesignPoint) if f.name not in ("d", "n_inc")]


def point_from_solution(index: int, cell: dict, sol: Solution) -> DesignPoint:
    base = dict(index=index, **cell)
    if sol.status is Status.Infeasible or sol.metrics is None:
        return DesignPoint(**base, status=sol.status.value, iterations=sol.iterations, message=sol.message)
    m = sol.metrics
    return DesignPoint(
        **base,
        status=sol.status.value,
        iterations=sol.iterations,
        objective=m.objective,
        demand_pct=100.0 * m.mean_d,
        noise_db=m.mean_n,
        energy_pct=100.0 * m.p_a,
        gini_d=m.gini_d,
        gini_n=m.gini_n,
        max_noise_db=float(m.n_inc.max(initial=0.0)),
        d=m.d,
        n_inc=m.n_inc,
    )


def start_flows(n_links: int, seed: int, index: int, replication: int) -> np.ndarray | None:
    if replication == 0:
        return None
    rng = np.random.default_rng([seed, index, replication])
    return 0.01 + rng.random(n_links)


def solve_cell(compiled: CompiledScenario, solver: SolverSettings, seed: int, index: int, cell: dict) -> DesignPoint:
    params = {k: cell[k] for k in GRID_FIELDS}
    y0 = start_flows(compiled.topology.n_l, seed, index, cell["replication"])
    try:
        sol = solver.solve(compiled, y0=y0, **params)
    except (LpBackendError, CCPMonotonicityError, ValueError) as exc:
        return DesignPoint(index=index, **cell, status="Error", message=f"{type(exc).__name__}: {exc}")
    return point_from_solution(index, cell, sol)


_WORKER_STATE: dict = {}


def _init_worker(compiled, solver, seed):
    _WORKER_STATE.update(compiled=compiled, solver=solver, seed=seed)


def _solve_indexed(job):
    index, cell = job
    s = _WORKER_STATE
    return solve_cell(s["compiled"], s["solver"], s["seed"], index, cell)


def run_sweep(plan: SweepPlan, compiled: CompiledScenario | None = None, workers: int = 1) -> list[DesignPoint]:
    """One design point per grid cell, ordered by grid index.

    Failed cells are kept with their status. A scenario that cannot be
    loaded aborts the sweep.
    """
    if compiled is None:
        if plan.scenario is None:
            raise ValueError("sweep plan names no scenario and none was given")
        compiled = compile_scenario(load_scenario(plan.scenario))
    jobs = list(enumerate(plan.cells()))
    if workers <= 1 or len(jobs) <= 1:
        return [solve_cell(compiled, plan.solver, plan.seed, i, cell) for i, cell in jobs]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(compiled, plan.solver, plan.seed)
    ) as pool:
        points = list(pool.map(_solve_indexed, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return sorted(points, key=lambda p: p.index)


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_points_csv(points: Sequence[DesignPoint], path: str | Path) -> None:
    write_rows(path, CSV_FIELDS, ([getattr(p, k) for k in CSV_FIELDS] for p in points))


def read_points_csv(path: str | Path) -> list[DesignPoint]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for f in fields(DesignPoint):
                if f.name not in row:
                    continue
                raw = row[f.name]
                if f.name in ("index", "replication", "iterations"):
                    kw[f.name] = int(raw)
                elif f.name in ("status", "message"):
                    kw[f.name] = raw
                else:
                    kw[f.name] = math.nan if raw == "" else float(raw)
            out.append(DesignPoint(**kw))
    return out


# --------------------------------------------------------------------------
# Pareto filtering


DEFAULT_DIRECTIONS = ("max", "min", "min")


def _oriented(point: DesignPoint, directions: Sequence[str]) -> tuple[float, ...]:
    """Objectives flipped so that larger is better on every axis."""
    out = []
    for value, sense in zip(point.objectives(), directions):
        if sense not in ("max", "min"):
            raise ValueError(f"direction must be 'max' or 'min', got {sense!r}")
        out.append(value if sense == "max" else -value)
    return tuple(out)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def pareto_filter(points: Sequence[DesignPoint], directions: Sequence[str] = DEFAULT_DIRECTIONS) -> list[DesignPoint]:
    """Non-dominated subset over (demand %, noise dB, energy %).

    Failed cells are skipped. Among points equal on all three objectives
    only the one with the lowest grid index is kept.
    """
    if len(directions) != 3:
        raise ValueError("need one direction per objective (demand, noise, energy)")
    live = sorted((p for p in points if p.ok), key=lambda p: p.index)
    keys = [_oriented(p, directions) for p in live]
    kept = []
    seen = set()
    for i, p in enumerate(live):
        if keys[i] in seen:
            continue
        if any(dominates(keys[j], keys[i]) for j in range(len(live)) if j != i):
            continue
        seen.add(keys[i])
        kept.append(p)
    return kept


# --------------------------------------------------------------------------
# efficiency-fairness curves


class Aspect(str, enum.Enum):
    Demand = "Demand"
    Noise = "Noise"


# Conditioning parameter per aspect: demand curves at fixed mean-noise caps,
# noise curves at fixed objective weights.
DEFAULT_BAND = {Aspect.Demand: "m_u", Aspect.Noise: "omega"}


@dataclass(frozen=True)
class CurvePoint:
    band: str
    band_value: float
    mean: float
    gini: float
    index: int


def efficiency_fairness_curve(
    points: Sequence[DesignPoint], aspect: Aspect | str, band_by: str | None = None
) -> list[CurvePoint]:
    """Per-band efficiency-fairness frontiers.

    For ``Demand`` the efficiency axis is mean fulfillment (higher is
    better); for ``Noise`` it is mean noise increase (lower is better).
    Within each band only points that no other point beats on both
    efficiency and Gini are kept, sorted by mean.
    """
    aspect = Aspect(aspect)
    band_by = band_by or DEFAULT_BAND[aspect]
    if band_by not in GRID_FIELDS:
        raise ValueError(f"band_by must be one of {GRID_FIELDS}")
    bands: dict[float, list[DesignPoint]] = {}
    for p in points:
        bands.setdefault(getattr(p, band_by), [])
        if p.ok:
            bands[getattr(p, band_by)].append(p)
    out: list[CurvePoint] = []
    for value in sorted(bands):
        members = bands[value]
        label = f"{band_by}={_fmt(value)}"
        if not members:
            log.warning("efficiency-fairness band %s has no solved points; omitted", label)
            continue
        if aspect is Aspect.Demand:
            pairs = [(p.demand_pct, p.gini_d, p) for p in members]
            oriented = [(m, -g) for m, g, _ in pairs]
        else:
            pairs = [(p.noise_db, p.gini_n, p) for p in members]
            oriented = [(-m, -g) for m, g, _ in pairs]
        seen = set()
        frontier = []
        for i, (m, g, p) in sorted(enumerate(pairs), key=lambda t: t[1][2].index):
            if oriented[i] in seen or any(dominates(oriented[j], oriented[i]) for j in range(len(pairs))):
                continue
            seen.add(oriented[i])
            frontier.append(CurvePoint(label, value, m, g, p.index))
        out.extend(sorted(frontier, key=lambda c: (c.mean, c.gini, c.index)))
    return out


def write_curve_csv(curve: Sequence[CurvePoint], path: str | Path) -> None:
    write_rows(path, ["band", "band_value", "mean", "gini", "index"],
               ([c.band, c.band_value, c.mean, c.gini, c.index] for c in curve))


# --------------------------------------------------------------------------
# design comparison


class Criterion(str, enum.Enum):
    Utilitarian = "Utilitarian"
    Egalitarian = "Egalitarian"


CRITERION_DELTA = {Criterion.Utilitarian: UTILITARIAN_DELTA, Criterion.Egalitarian: EGALITARIAN_DELTA}
RADAR_AXES = (
    "demand_mean",
    "demand_fairness",
    "noise_mitigation_mean",
    "noise_mitigation_fairness",
    "energy_saving",
)
BOX_STATS = ("min", "q1", "median", "q3", "max")


@dataclass
class Comparison:
    boxplot: list[dict]
    radar: list[dict]
    runs: list[DesignPoint]


def _box(values: np.ndarray) -> dict:
    q = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])
    return dict(zip(BOX_STATS, (float(v) for v in q)))


def compare_designs(
    selected: Sequence[DesignPoint],
    compiled: CompiledScenario,
    criteria: Sequence[Criterion | str] = (Criterion.Utilitarian, Criterion.Egalitarian),
    solver: SolverSettings | None = None,
) -> Comparison:
    """Re-solve each design under each criterion and summarize.

    Boxplot rows give quartiles of ``d`` and of ``n' / delta_n_max`` (both
    in [0, 1]) plus the extra-energy fraction. Radar rows score five axes
    where larger is better, then divide each axis by the best design under
    the same criterion so the best maps to 1.
    """
    solver = solver or SolverSettings()
    dn_max = compiled.scenario.problem.delta_n_max
    runs: list[DesignPoint] = []
    box: list[dict] = []
    raw_radar: list[dict] = []
    for k, design in enumerate(selected):
        for crit in criteria:
            crit = Criterion(crit)
            delta = CRITERION_DELTA[crit]
            cell = dict(design.params, delta1=delta, delta2=delta, replication=0)
            pt = solve_cell(compiled, solver, 0, design.index, cell)
            runs.append(pt)
            tag = dict(design=k + 1, source_index=design.index, criterion=crit.value, status=pt.status)
            if not pt.ok:
                for quantity in ("demand", "noise", "energy"):
                    box.append(dict(tag, quantity=quantity, **{s: math.nan for s in BOX_STATS}))
                raw_radar.append(dict(tag, **{a: math.nan for a in RADAR_AXES}))
                continue
            noise_norm = np.clip(pt.n_inc / dn_max, 0.0, 1.0)
            energy = pt.energy_pct / 100.0
            box.append(dict(tag, quantity="demand", **_box(pt.d)))
            box.append(dict(tag, quantity="noise", **_box(noise_norm)))
            box.append(dict(tag, quantity="energy", **{s: energy for s in BOX_STATS}))
            raw_radar.append(dict(
                tag,
                demand_mean=float(pt.d.mean()),
                demand_fairness=1.0 - gini(pt.d),
                noise_mitigation_mean=1.0 - float(noise_norm.mean()),
                noise_mitigation_fairness=1.0 - gini(pt.n_inc),
                energy_saving=1.0 - energy,
            ))
    radar = [dict(r) for r in raw_radar]
    for crit in {r["criterion"] for r in raw_radar}:
        rows = [r for r in radar if r["criterion"] == crit]
        for axis in RADAR_AXES:
            vals = [r[axis] for r in rows if not math.isnan(r[axis])]
            best = max(vals, default=math.nan)
            for r in rows:
                if math.isnan(r[axis]):
                    continue
                r[axis] = 1.0 if best <= 0 else r[axis] / best
    return Comparison(boxplot=box, radar=radar, runs=runs)


def write_dict_rows(rows: Sequence[dict], path: str | Path) -> None:
    if not rows:
        write_rows(path, [], [])
        return
    header = list(rows[0])
    write_rows(path, header, ([r[h] for h in header] for r in rows))


def select_designs(points: Sequence[DesignPoint], n: int = 8) -> list[DesignPoint]:
    """Pareto points closest to the ideal corner in min-max scaled objectives."""
    front = pareto_filter(points)
    if len(front) <= n:
        return front
    obj = np.array([_oriented(p, DEFAULT_DIRECTIONS) for p in front])
    lo, hi = obj.min(axis=0), obj.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    gap = np.linalg.norm((hi - obj) / span, axis=1)
    order = np.lexsort(([p.index for p in front], gap))
    return [front[i] for i in order[:n]]


# --------------------------------------------------------------------------
# map export


def noise_map_features(compiled: CompiledScenario, n: np.ndarray, n_inc: np.ndarray) -> dict:
    """GeoJSON FeatureCollection of communities with n, n' and reaction score.

    Coordinates are the scenario's planar ft coordinates, not WGS84.
    Silence (no audible flight) is written as ``null`` for ``n``.
    """
    react = compiled.reaction
    feats = []
    for j, c in enumerate(compiled.scenario.communities):
        level = float(n[j])
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [c.x, c.y]},
            "properties": {
                "id": c.id,
                "ambient_dba": c.ambient,
                "population": c.population,
                "noise_dba": None if math.isnan(level) else level,
                "noise_increase_db": float(n_inc[j]),
                "reaction_score": float(react(float(n_inc[j]))),
            },
        })
    return {
        "type": "FeatureCollection",
        "properties": {"scenario": compiled.scenario.name, "coordinate_units": "ft (local planar)"},
        "features": feats,
    }


def export_noise_map(compiled: CompiledScenario, sol: Solution, path: str | Path) -> None:
    if sol.n is None:
        raise ValueError(f"no flows to map (solver status {sol.status.value})")
    Path(path).write_text(json.dumps(noise_map_features(compiled, sol.n, sol.n_inc), indent=1) + "\n")
