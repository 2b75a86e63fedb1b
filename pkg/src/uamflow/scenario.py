"""Scenario files, synthetic scenario generation and problem compilation.

A scenario is a TOML document; see ``scenarios/minimal.toml`` for the
smallest complete example. Lengths may be declared in ft or m and are
stored in ft.
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .acoustics import NpdTable, load_npd_table
from .energy import VehicleParams, route_extra_energy
from .exposure import (
    CLASS_AMBIENT,
    Community,
    CommunityClass,
    LinkGeometry,
    NoiseImpactMatrix,
    build_impact_matrix,
)
from .network import (
    IncidenceMatrices,
    Link,
    NetworkTopology,
    OdPair,
    Route,
    Vertiport,
    build_incidence,
    enumerate_routes,
)
from .optimizer import ProblemSpec
from .welfare import DEFAULT_REACTION_ANCHORS, ReactionScore

SCHEMA_VERSION = 1
LENGTH_UNITS = {"ft": 1.0, "m": 1.0 / 0.3048}


class ScenarioError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__(f"{len(self.errors)} scenario error(s):\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class Corridor:
    id: str
    a: str
    b: str
    capacity: float = math.inf
    undirected: bool = True


@dataclass(frozen=True)
class ExplicitRoute:
    origin: str
    destination: str
    layer: int
    via: tuple[str, ...] = ()


@dataclass(frozen=True)
class DemandPair:
    origin: str
    destination: str
    demand: float


@dataclass(frozen=True)
class ProblemDefaults:
    omega: float = 0.5
    delta1: float = 0.5
    delta2: float = 0.5
    delta_n_max: float = 25.0
    m_u: float = math.inf
    p_u: float = math.inf
    epsilon: float = 0.0
    T: float = 3600.0


@dataclass
class Scenario:
    name: str
    vertiports: list[Vertiport]
    corridors: list[Corridor]
    od_pairs: list[DemandPair]
    communities: list[Community]
    layers: tuple[float, ...] = (1000.0, 2000.0, 3000.0)
    msl_offset: float = 500.0
    waypoint_capacity: float = math.inf
    route_k: int = 3
    route_max_stretch: float = 1.4
    explicit_routes: list[ExplicitRoute] = field(default_factory=list)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    npd_table: str | None = None
    problem: ProblemDefaults = field(default_factory=ProblemDefaults)
    reaction_anchors: tuple[tuple[float, float], ...] = DEFAULT_REACTION_ANCHORS
    description: str = ""
    version: int = SCHEMA_VERSION


# --------------------------------------------------------------------------
# parsing


def _num(value, path: str, errors: list[str], positive=False, nonneg=False, allow_inf=False):
    try:
        if isinstance(value, str):
            if value.strip().lower() not in ("inf", "+inf", "infinity"):
                raise ValueError
            x = math.inf
        elif isinstance(value, bool):
            raise ValueError
        else:
            x = float(value)
    except (TypeError, ValueError):
        errors.append(f"{path}: expected a number, got {value!r}")
        return None
    if math.isnan(x) or (math.isinf(x) and not allow_inf):
        errors.append(f"{path}: must be finite")
        return None
    if positive and not x > 0:
        errors.append(f"{path}: must be positive, got {x}")
        return None
    if nonneg and x < 0:
        errors.append(f"{path}: must be >= 0, got {x}")
        return None
    return x


def _require(table: Mapping, key: str, path: str, errors: list[str]):
    if key not in table:
        errors.append(f"{path}.{key}: missing")
        return None
    return table[key]


def parse_scenario(data: Mapping[str, Any], base_dir: Path | None = None) -> Scenario:
    errors: list[str] = []
    version = data.get("version")
    if version is None:
        errors.append("version: missing")
    elif version != SCHEMA_VERSION:
        errors.append(f"version: unsupported {version!r} (expected {SCHEMA_VERSION})")

    units = data.get("units", {})
    length_unit = units.get("length", "ft")
    if length_unit not in LENGTH_UNITS:
        errors.append(f"units.length: unknown unit {length_unit!r} (use 'ft' or 'm')")
        length_unit = "ft"
    for key, expected in (("noise", "dBA"), ("flow", "flights/hour"), ("time", "s")):
        if key in units and units[key] != expected:
            errors.append(f"units.{key}: expected {expected!r}, got {units[key]!r}")
    to_ft = LENGTH_UNITS[length_unit]

    net = data.get("network", {})
    layers = net.get("layers", [1000.0, 2000.0, 3000.0])
    layer_vals = []
    for i, alt in enumerate(layers):
        x = _num(alt, f"network.layers[{i}]", errors, positive=True)
        if x is not None:
            layer_vals.append(x * to_ft)
    if layer_vals and any(b <= a for a, b in zip(layer_vals, layer_vals[1:])):
        errors.append("network.layers: altitudes must be strictly increasing")
    if not layers:
        errors.append("network.layers: need at least one layer")
    msl = _num(net.get("msl_offset", 500.0), "network.msl_offset", errors) or 0.0
    wp_cap = _num(net.get("waypoint_capacity", "inf"), "network.waypoint_capacity", errors,
                  nonneg=True, allow_inf=True)

    vertiports: list[Vertiport] = []
    vp_ids: set[str] = set()
    for i, row in enumerate(data.get("vertiports", [])):
        path = f"vertiports[{i}]"
        vid = _require(row, "id", path, errors)
        x = _num(_require(row, "x", path, errors), f"{path}.x", errors)
        y = _num(_require(row, "y", path, errors), f"{path}.y", errors)
        cap = _num(row.get("capacity", "inf"), f"{path}.capacity", errors, nonneg=True, allow_inf=True)
        if vid is None:
            continue
        vid = str(vid)
        if vid in vp_ids:
            errors.append(f"{path}.id: duplicate vertiport id {vid!r}")
        vp_ids.add(vid)
        if x is not None and y is not None:
            vertiports.append(Vertiport(vid, x * to_ft, y * to_ft, cap if cap is not None else math.inf))
    if len(vertiports) < 2:
        errors.append("vertiports: need at least two")

    corridors: list[Corridor] = []
    for i, row in enumerate(data.get("corridors", [])):
        path = f"corridors[{i}]"
        a = _require(row, "from", path, errors)
        b = _require(row, "to", path, errors)
        for end, vid in (("from", a), ("to", b)):
            if vid is not None and str(vid) not in vp_ids:
                errors.append(f"{path}.{end}: unknown vertiport {vid!r}")
        if a is not None and a == b:
            errors.append(f"{path}: corridor joins {a!r} to itself")
        cap = _num(row.get("capacity", "inf"), f"{path}.capacity", errors, nonneg=True, allow_inf=True)
        if a is None or b is None:
            continue
        corridors.append(Corridor(
            id=str(row.get("id", f"c{i}")), a=str(a), b=str(b),
            capacity=cap if cap is not None else math.inf,
            undirected=bool(row.get("undirected", True)),
        ))
    if not corridors:
        errors.append("corridors: need at least one")

    od_pairs: list[DemandPair] = []
    seen_od = set()
    for i, row in enumerate(data.get("od_pairs", [])):
        path = f"od_pairs[{i}]"
        o = _require(row, "origin", path, errors)
        dst = _require(row, "destination", path, errors)
        dem = _num(_require(row, "demand", path, errors), f"{path}.demand", errors)
        if dem is not None and not dem > 0:
            errors.append(f"{path}.demand: must be positive, got {dem}")
        for end, vid in (("origin", o), ("destination", dst)):
            if vid is not None and str(vid) not in vp_ids:
                errors.append(f"{path}.{end}: unknown vertiport {vid!r}")
        if o is not None and o == dst:
            errors.append(f"{path}: origin equals destination")
        if (o, dst) in seen_od:
            errors.append(f"{path}: duplicate O-D pair {o!r}->{dst!r}")
        seen_od.add((o, dst))
        if o is not None and dst is not None and dem is not None:
            od_pairs.append(DemandPair(str(o), str(dst), dem))
    if not od_pairs:
        errors.append("od_pairs: need at least one")

    communities: list[Community] = []
    c_ids = set()
    for i, row in enumerate(data.get("communities", [])):
        path = f"communities[{i}]"
        cid = _require(row, "id", path, errors)
        x = _num(_require(row, "x", path, errors), f"{path}.x", errors)
        y = _num(_require(row, "y", path, errors), f"{path}.y", errors)
        pop = _num(row.get("population", 0.0), f"{path}.population", errors, nonneg=True)
        cls = row.get("class")
        if cls is not None and cls not in CommunityClass.__members__:
            errors.append(f"{path}.class: unknown class {cls!r}")
            cls = None
        if "ambient" in row:
            amb = _num(row["ambient"], f"{path}.ambient", errors, positive=True)
        elif cls is not None:
            amb = CLASS_AMBIENT[CommunityClass(cls)]
        else:
            errors.append(f"{path}: needs 'ambient' or 'class'")
            amb = None
        if cls is not None and amb is not None and not math.isclose(amb, CLASS_AMBIENT[CommunityClass(cls)]):
            errors.append(f"{path}.ambient: {amb} inconsistent with class {cls}")
            continue
        if cid is not None and str(cid) in c_ids:
            errors.append(f"{path}.id: duplicate community id {cid!r}")
        if None in (cid, x, y, amb, pop):
            continue
        c_ids.add(str(cid))
        communities.append(Community(
            id=str(cid), x=x * to_ft, y=y * to_ft, ambient=amb, population=pop,
            cls=CommunityClass(cls) if cls else None,
        ))
    if not communities:
        errors.append("communities: need at least one")

    routing = data.get("routes", {})
    route_k = routing.get("k", 3)
    if not isinstance(route_k, int) or route_k < 1:
        errors.append(f"routes.k: must be a positive integer, got {route_k!r}")
        route_k = 3
    stretch = _num(routing.get("max_stretch", 1.4), "routes.max_stretch", errors, positive=True) or 1.4
    if stretch < 1.0:
        errors.append(f"routes.max_stretch: must be >= 1, got {stretch}")
    explicit = []
    for i, row in enumerate(routing.get("explicit", [])):
        path = f"routes.explicit[{i}]"
        o = _require(row, "origin", path, errors)
        dst = _require(row, "destination", path, errors)
        layer = row.get("layer", 0)
        if not isinstance(layer, int) or not 0 <= layer < max(len(layer_vals), 1):
            errors.append(f"{path}.layer: invalid layer {layer!r}")
        via = tuple(str(v) for v in row.get("via", []))
        for vid in (o, dst, *via):
            if vid is not None and str(vid) not in vp_ids:
                errors.append(f"{path}: unknown vertiport {vid!r}")
        if o is not None and dst is not None and (o, dst) not in seen_od:
            errors.append(f"{path}: no O-D pair {o!r}->{dst!r}")
        if o is not None and dst is not None:
            explicit.append(ExplicitRoute(str(o), str(dst), int(layer) if isinstance(layer, int) else 0, via))

    vehicle = VehicleParams()
    if "vehicle" in data:
        try:
            vehicle = VehicleParams.from_mapping(data["vehicle"])
        except (TypeError, ValueError) as exc:
            errors.append(f"vehicle: {exc}")

    npd = data.get("npd", {}).get("table")
    if npd is not None and npd != "default":
        npd_path = Path(npd)
        if base_dir is not None and not npd_path.is_absolute():
            npd_path = base_dir / npd_path
        if not npd_path.exists():
            errors.append(f"npd.table: file not found: {npd}")
        npd = str(npd_path)
    else:
        npd = None

    prob = data.get("problem", {})
    pd_kwargs = {}
    for f in fields(ProblemDefaults):
        if f.name in prob:
            val = _num(prob[f.name], f"problem.{f.name}", errors, nonneg=True,
                       allow_inf=f.name in ("m_u", "p_u", "delta1", "delta2"))
            if val is not None:
                pd_kwargs[f.name] = val
    unknown = set(prob) - {f.name for f in fields(ProblemDefaults)}
    for key in sorted(unknown):
        errors.append(f"problem.{key}: unknown parameter")
    problem = ProblemDefaults(**pd_kwargs)
    if not 0 <= problem.omega <= 1:
        errors.append("problem.omega: must be in [0, 1]")
    if not 0 <= problem.epsilon <= 1:
        errors.append("problem.epsilon: must be in [0, 1]")
    if not problem.T > 0:
        errors.append("problem.T: must be positive")
    if not problem.delta_n_max > 0:
        errors.append("problem.delta_n_max: must be positive")

    anchors = data.get("reaction", {}).get("anchors", DEFAULT_REACTION_ANCHORS)
    try:
        anchors = ReactionScore(tuple(tuple(a) for a in anchors)).anchors
    except (TypeError, ValueError) as exc:
        errors.append(f"reaction.anchors: {exc}")
        anchors = DEFAULT_REACTION_ANCHORS

    if errors:
        raise ScenarioError(errors)
    return Scenario(
        name=str(data.get("name", "scenario")),
        description=str(data.get("description", "")),
        vertiports=vertiports,
        corridors=corridors,
        od_pairs=od_pairs,
        communities=communities,
        layers=tuple(layer_vals),
        msl_offset=msl * to_ft,
        waypoint_capacity=wp_cap if wp_cap is not None else math.inf,
        route_k=route_k,
        route_max_stretch=stretch,
        explicit_routes=explicit,
        vehicle=vehicle,
        npd_table=npd,
        problem=problem,
        reaction_anchors=tuple(anchors),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError([f"{path}: cannot read ({exc.strerror})"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([f"{path}: invalid TOML ({exc})"]) from exc
    scn = parse_scenario(data, base_dir=path.parent)
    problems = compile_problems(scn)
    if problems:
        raise ScenarioError(problems)
    return scn


def _toml_num(x: float):
    if math.isinf(x):
        return "inf"
    return float(x)


def scenario_to_dict(scn: Scenario) -> dict:
    out: dict[str, Any] = {
        "version": scn.version,
        "name": scn.name,
    }
    if scn.description:
        out["description"] = scn.description
    out["units"] = {"length": "ft", "noise": "dBA", "flow": "flights/hour", "time": "s"}
    out["network"] = {
        "layers": [float(a) for a in scn.layers],
        "msl_offset": float(scn.msl_offset),
        "waypoint_capacity": _toml_num(scn.waypoint_capacity),
    }
    out["routes"] = {"k": scn.route_k, "max_stretch": float(scn.route_max_stretch)}
    if scn.explicit_routes:
        out["routes"]["explicit"] = [
            {"origin": r.origin, "destination": r.destination, "layer": r.layer, "via": list(r.via)}
            for r in scn.explicit_routes
        ]
    out["problem"] = {k: _toml_num(v) for k, v in asdict(scn.problem).items()}
    out["reaction"] = {"anchors": [[float(x), float(y)] for x, y in scn.reaction_anchors]}
    if scn.vehicle != VehicleParams():
        out["vehicle"] = scn.vehicle.to_mapping()
    if scn.npd_table is not None:
        out["npd"] = {"table": scn.npd_table}
    out["vertiports"] = [
        {"id": v.id, "x": float(v.x), "y": float(v.y), "capacity": _toml_num(v.capacity)}
        for v in scn.vertiports
    ]
    out["corridors"] = [
        {"id": c.id, "from": c.a, "to": c.b, "capacity": _toml_num(c.capacity), "undirected": c.undirected}
        for c in scn.corridors
    ]
    out["od_pairs"] = [
        {"origin": p.origin, "destination": p.destination, "demand": float(p.demand)} for p in scn.od_pairs
    ]
    comms = []
    for c in scn.communities:
        row = {"id": c.id, "x": float(c.x), "y": float(c.y), "ambient": float(c.ambient),
               "population": float(c.population)}
        if c.cls is not None:
            row["class"] = c.cls.value
        comms.append(row)
    out["communities"] = comms
    return out


def dumps_scenario(scn: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(scn))


def save_scenario(scn: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps_scenario(scn))


# --------------------------------------------------------------------------
# compilation


@dataclass
class CompiledScenario:
    scenario: Scenario
    topology: NetworkTopology
    mats: IncidenceMatrices
    link_geometry: list[LinkGeometry]
    impact: NoiseImpactMatrix
    p: np.ndarray
    route_lengths: np.ndarray
    warnings: list[str]

    def problem(self, **overrides) -> ProblemSpec:
        params = asdict(self.scenario.problem)
        params.update(overrides)
        t = self.topology
        return ProblemSpec(
            mats=self.mats,
            M=self.impact.M,
            ambient=np.array([c.ambient for c in self.scenario.communities]),
            demand=t.demands(),
            c_v=t.vertiport_capacity(),
            c_l=t.link_capacity(),
            c_w=t.node_capacity(),
            p=self.p,
            **params,
        )

    @property
    def reaction(self) -> ReactionScore:
        return ReactionScore(self.scenario.reaction_anchors)

    def layer_flow_shares(self, z: np.ndarray) -> np.ndarray:
        """Fraction of total route flow on each layer."""
        z = np.asarray(z, dtype=float)
        layers = self.topology.route_layers()
        totals = np.array([z[layers == k].sum() for k in range(self.topology.n_layers)])
        s = totals.sum()
        return totals / s if s > 0 else totals


def build_topology(scn: Scenario) -> tuple[NetworkTopology, list[str]]:
    vp_index = {v.id: i for i, v in enumerate(scn.vertiports)}
    n_v = len(scn.vertiports)
    links: list[Link] = []
    for layer in range(len(scn.layers)):
        for c in scn.corridors:
            a, b = vp_index[c.a], vp_index[c.b]
            links.append(Link(layer * n_v + a, layer * n_v + b, layer, c.capacity))
            if c.undirected:
                links.append(Link(layer * n_v + b, layer * n_v + a, layer, c.capacity))
    od_pairs = [OdPair(vp_index[p.origin], vp_index[p.destination], p.demand) for p in scn.od_pairs]
    topo = NetworkTopology(
        vertiports=list(scn.vertiports),
        altitudes=tuple(scn.layers),
        links=links,
        od_pairs=od_pairs,
        waypoint_capacity=np.full(n_v * len(scn.layers), scn.waypoint_capacity),
    )
    warnings: list[str] = []
    if scn.explicit_routes:
        link_at = {(lk.tail, lk.head): i for i, lk in enumerate(links)}
        od_at = {(p.origin, p.destination): k for k, p in enumerate(scn.od_pairs)}
        routes = []
        for i, r in enumerate(scn.explicit_routes):
            stops = [vp_index[r.origin], *(vp_index[v] for v in r.via), vp_index[r.destination]]
            nodes = [r.layer * n_v + s for s in stops]
            try:
                idx = tuple(link_at[(u, v)] for u, v in zip(nodes, nodes[1:]))
            except KeyError as exc:
                raise ScenarioError([f"routes.explicit[{i}]: no corridor for hop {exc.args[0]}"]) from None
            routes.append(Route(idx, od_at[(r.origin, r.destination)], r.layer))
        topo.routes = routes
    else:
        topo.routes, warnings = enumerate_routes(topo, scn.route_k, scn.route_max_stretch)
    return topo, warnings


def compile_problems(scn: Scenario) -> list[str]:
    """Cross-entity checks that need the built network."""
    try:
        topo, _ = build_topology(scn)
    except ScenarioError as exc:
        return exc.errors
    problems = [f"network: {p}" for p in topo.validate()]
    served = {r.od for r in topo.routes}
    for k, p in enumerate(scn.od_pairs):
        if k not in served:
            problems.append(f"od_pairs[{k}]: no route serves {p.origin}->{p.destination}")
    return problems


def compile_scenario(scn: Scenario, npd: NpdTable | None = None) -> CompiledScenario:
    topo, warnings = build_topology(scn)
    mats = build_incidence(topo)
    geoms = []
    for i, link in enumerate(topo.links):
        geoms.append(LinkGeometry(
            link_id=i,
            start=topo.position(link.tail),
            end=topo.position(link.head),
            altitude_agl=topo.altitudes[link.layer],
        ))
    curves = npd if npd is not None else load_npd_table(scn.npd_table)
    impact = build_impact_matrix(geoms, scn.communities, curves)
    lengths = np.array([topo.route_length(r) for r in range(topo.n_r)])
    p = route_extra_energy(lengths, topo.route_layers(), topo.altitudes, scn.vehicle, scn.msl_offset)
    return CompiledScenario(scn, topo, mats, geoms, impact, p, lengths, warnings)


# --------------------------------------------------------------------------
# synthetic scenarios


# Mostly suburban tracts, as in a sprawling mid-size city.
DEFAULT_AMBIENT_MIX = {
    CommunityClass.QuietSuburban: 0.45,
    CommunityClass.NormalSuburban: 0.3,
    CommunityClass.Urban: 0.15,
    CommunityClass.NoisyUrban: 0.07,
    CommunityClass.VeryNoisyUrban: 0.03,
}
AUSTIN_LIKE_SEED = 7


def _segments_cross(p1, p2, p3, p4) -> bool:
    """Proper crossing of segments p1p2 and p3p4 (shared endpoints excluded)."""
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    if {tuple(p1), tuple(p2)} & {tuple(p3), tuple(p4)}:
        return False
    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


def crossing_corridors(scn: Scenario) -> list[tuple[str, str]]:
    pos = {v.id: (v.x, v.y) for v in scn.vertiports}
    out = []
    cs = scn.corridors
    for i in range(len(cs)):
        for j in range(i + 1, len(cs)):
            if _segments_cross(pos[cs[i].a], pos[cs[i].b], pos[cs[j].a], pos[cs[j].b]):
                out.append((cs[i].id, cs[j].id))
    return out


def _place_vertiports(rng, n, width, height, min_sep) -> list[tuple[float, float]]:
    pts: list[tuple[float, float]] = []
    for _ in range(200_000):
        if len(pts) == n:
            break
        cand = (rng.uniform(0.05, 0.95) * width, rng.uniform(0.05, 0.95) * height)
        if all(math.dist(cand, q) >= min_sep for q in pts):
            pts.append(cand)
    if len(pts) < n:
        raise ValueError("could not place vertiports with the required separation; enlarge the area")
    return [(round(x, 1), round(y, 1)) for x, y in pts]


def _delaunay_edges(pts) -> set[tuple[int, int]]:
    from scipy.spatial import Delaunay

    edges = set()
    for tri in Delaunay(np.array(pts)).simplices:
        for a, b in ((0, 1), (1, 2), (0, 2)):
            i, j = sorted((int(tri[a]), int(tri[b])))
            edges.add((i, j))
    return edges


def _routable_pairs(pts, edges, pairs, max_stretch) -> list[bool]:
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(len(pts)))
    for i, j in edges:
        g.add_edge(i, j, length=math.dist(pts[i], pts[j]))
    dist = dict(nx.all_pairs_dijkstra_path_length(g, weight="length"))
    return [dist[i].get(j, math.inf) <= max_stretch * math.dist(pts[i], pts[j]) * (1 + 1e-9) for i, j in pairs]


def generate_synthetic(
    seed: int = 0,
    n_vertiports: int = 19,
    n_layers: int = 3,
    n_communities: int = 292,
    area: tuple[float, float] = (63_360.0, 63_360.0),
    ambient_mix: Mapping[CommunityClass | str, float] | None = None,
    n_od_pairs: int = 62,
    n_corridors: int | None = 45,
    demand_range: tuple[float, float] = (4.0, 20.0),
    corridor_capacity: float = 10.0,
    vertiport_capacity: float = math.inf,
    layer_spacing: float = 1000.0,
    name: str | None = None,
    max_stretch: float = 1.4,
) -> Scenario:
    """Random planar city network with a layered corridor system.

    Vertiports are placed uniformly with a minimum separation, corridors
    are Delaunay edges (planar, so no two cross), thinned to
    ``n_corridors`` by dropping the longest edges that keep the graph
    connected. A layout whose triangulation is too sparse is redrawn.
    Every O-D pair has a corridor path within ``max_stretch`` of its
    straight-line distance. O-D pairs come in both directions. Communities sit on a
    jittered grid with ambient levels drawn from ``ambient_mix``.
    """
    if n_vertiports < 3 or n_layers < 1 or n_communities < 1 or n_od_pairs < 2:
        raise ValueError("need >= 3 vertiports, >= 1 layer, >= 1 community and >= 2 O-D pairs")
    if n_od_pairs % 2:
        raise ValueError("n_od_pairs must be even (pairs are generated in both directions)")
    if n_od_pairs > n_vertiports * (n_vertiports - 1):
        raise ValueError("more O-D pairs requested than ordered vertiport pairs")
    width, height = area
    if not (width > 0 and height > 0):
        raise ValueError("area must be positive")
    mix = {CommunityClass(k): float(v) for k, v in (ambient_mix or DEFAULT_AMBIENT_MIX).items()}
    total = sum(mix.values())
    if total <= 0 or any(v < 0 for v in mix.values()):
        raise ValueError("ambient_mix must be a nonnegative distribution")
    rng = np.random.default_rng(seed)

    min_sep = 0.5 * math.sqrt(width * height / n_vertiports)
    for _attempt in range(50):
        pts = _place_vertiports(rng, n_vertiports, width, height, min_sep)
        edges = _delaunay_edges(pts)
        if n_corridors is None or len(edges) >= n_corridors:
            break
    else:
        raise ValueError(f"no planar layout of {n_vertiports} vertiports yields {n_corridors} corridors")
    vp_ids = [f"V{i:02d}" for i in range(n_vertiports)]
    edges = sorted(edges, key=lambda e: (math.dist(pts[e[0]], pts[e[1]]), e))
    if n_corridors is not None and len(edges) > n_corridors:
        import networkx as nx

        g = nx.Graph()
        g.add_edges_from(edges)
        for e in reversed(list(edges)):
            if g.number_of_edges() <= n_corridors:
                break
            g.remove_edge(*e)
            if not nx.is_connected(g):
                g.add_edge(*e)
        edges = [e for e in edges if g.has_edge(*e)]
    edges = sorted(edges)
    corridors = [
        Corridor(id=f"C{k:02d}", a=vp_ids[i], b=vp_ids[j], capacity=corridor_capacity)
        for k, (i, j) in enumerate(edges)
    ]

    all_pairs = [(i, j) for i in range(n_vertiports) for j in range(i + 1, n_vertiports)]
    chosen = [int(c) for c in rng.choice(len(all_pairs), size=n_od_pairs // 2, replace=False)]
    ok = _routable_pairs(pts, edges, all_pairs, max_stretch)
    if not all(ok[k] for k in chosen):
        spare = [k for k in range(len(all_pairs)) if ok[k] and k not in chosen]
        bad = [k for k in chosen if not ok[k]]
        if len(spare) < len(bad):
            raise ValueError(f"only {sum(ok)} vertiport pairs are reachable within stretch {max_stretch}; "
                             f"{n_od_pairs // 2} requested")
        picks = rng.choice(len(spare), size=len(bad), replace=False)
        chosen = [k for k in chosen if ok[k]] + [spare[int(i)] for i in picks]
    od_pairs = []
    for k in sorted(chosen):
        i, j = all_pairs[k]
        dem = round(float(rng.uniform(*demand_range)), 1)
        od_pairs.append(DemandPair(vp_ids[i], vp_ids[j], dem))
        od_pairs.append(DemandPair(vp_ids[j], vp_ids[i], dem))

    classes = list(mix)
    probs = np.array([mix[c] for c in classes]) / total
    cols = math.ceil(math.sqrt(n_communities * width / height))
    rows = math.ceil(n_communities / cols)
    dx, dy = width / cols, height / rows
    communities = []
    for k in range(n_communities):
        r, c = divmod(k, cols)
        x = (c + 0.5 + rng.uniform(-0.3, 0.3)) * dx
        y = (r + 0.5 + rng.uniform(-0.3, 0.3)) * dy
        cls = classes[int(rng.choice(len(classes), p=probs))]
        pop = float(rng.integers(1000, 8000))
        communities.append(Community(
            id=f"T{k:03d}", x=round(x, 1), y=round(y, 1), ambient=CLASS_AMBIENT[cls],
            population=pop, cls=cls,
        ))

    vertiports = [Vertiport(vp_ids[i], x, y, vertiport_capacity) for i, (x, y) in enumerate(pts)]
    return Scenario(
        name=name or f"synthetic-{seed}",
        description="Synthetic scenario generated by uamflow.scenario.generate_synthetic",
        vertiports=vertiports,
        corridors=corridors,
        od_pairs=od_pairs,
        communities=communities,
        layers=tuple(layer_spacing * (k + 1) for k in range(n_layers)),
        route_max_stretch=max_stretch,
    )


def austin_like() -> Scenario:
    """Synthetic stand-in with the cardinalities of the Austin case study.

    19 vertiports, 45 corridors (90 directed links per layer), 3 layers,
    62 O-D pairs and 292 communities on a 12 mi square. Coordinates and
    demands are random; nothing here is real Austin data.
    """
    scn = generate_synthetic(seed=AUSTIN_LIKE_SEED, name="austin-like-synthetic")
    return replace(scn, description=(
        "SYNTHETIC scenario with Austin-like cardinalities (19 vertiports, 45 corridors, "
        "3 layers, 62 O-D pairs, 292 communities); not real data"
    ))


def with_problem(scn: Scenario, **params) -> Scenario:
    return replace(scn, problem=replace(scn.problem, **params))
