"""Multi-layer corridor network: topology, incidence matrices, routes.

Node ``layer * n_v + v`` is vertiport ``v``'s copy on cruise layer
``layer``; every route stays on one layer.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import islice
from typing import Sequence

import networkx as nx
import numpy as np

log = logging.getLogger(__name__)


class TopologyError(ValueError):
    """Raised with every offending element listed, not just the first."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Vertiport:
    id: str
    x: float
    y: float
    capacity: float = math.inf


@dataclass(frozen=True)
class Link:
    tail: int
    head: int
    layer: int
    capacity: float = math.inf


@dataclass(frozen=True)
class Route:
    links: tuple[int, ...]
    od: int
    layer: int


@dataclass(frozen=True)
class OdPair:
    origin: int
    destination: int
    demand: float


@dataclass
class NetworkTopology:
    vertiports: list[Vertiport]
    altitudes: tuple[float, ...]
    links: list[Link]
    od_pairs: list[OdPair]
    routes: list[Route] = field(default_factory=list)
    waypoint_capacity: np.ndarray | None = None

    @property
    def n_v(self) -> int:
        return len(self.vertiports)

    @property
    def n_layers(self) -> int:
        return len(self.altitudes)

    @property
    def n_n(self) -> int:
        return self.n_v * self.n_layers

    @property
    def n_l(self) -> int:
        return len(self.links)

    @property
    def n_r(self) -> int:
        return len(self.routes)

    @property
    def n_o(self) -> int:
        return len(self.od_pairs)

    def node(self, vertiport: int, layer: int) -> int:
        return layer * self.n_v + vertiport

    def node_vertiport(self, node: int) -> int:
        return node % self.n_v

    def node_layer(self, node: int) -> int:
        return node // self.n_v

    def position(self, node: int) -> tuple[float, float]:
        v = self.vertiports[self.node_vertiport(node)]
        return (v.x, v.y)

    def link_length(self, i: int) -> float:
        link = self.links[i]
        (x0, y0), (x1, y1) = self.position(link.tail), self.position(link.head)
        return math.hypot(x1 - x0, y1 - y0)

    def link_lengths(self) -> np.ndarray:
        return np.array([self.link_length(i) for i in range(self.n_l)])

    def route_length(self, r: int) -> float:
        return sum(self.link_length(i) for i in self.routes[r].links)

    def route_layers(self) -> np.ndarray:
        return np.array([r.layer for r in self.routes], dtype=int)

    def demands(self) -> np.ndarray:
        return np.array([od.demand for od in self.od_pairs], dtype=float)

    def vertiport_capacity(self) -> np.ndarray:
        return np.array([v.capacity for v in self.vertiports], dtype=float)

    def link_capacity(self) -> np.ndarray:
        return np.array([link.capacity for link in self.links], dtype=float)

    def node_capacity(self) -> np.ndarray:
        if self.waypoint_capacity is None:
            return np.full(self.n_n, np.inf)
        return np.asarray(self.waypoint_capacity, dtype=float)

    def validate(self) -> list[str]:
        """Every violated structural invariant, as human-readable strings."""
        problems = []
        n_n = self.n_n
        for i, link in enumerate(self.links):
            for end in ("tail", "head"):
                node = getattr(link, end)
                if not 0 <= node < n_n:
                    problems.append(f"links[{i}].{end}: node {node} out of range")
            if link.tail == link.head:
                problems.append(f"links[{i}]: tail equals head")
            elif 0 <= link.tail < n_n and 0 <= link.head < n_n:
                if self.node_layer(link.tail) != self.node_layer(link.head):
                    problems.append(f"links[{i}]: joins different layers")
                elif self.node_layer(link.tail) != link.layer:
                    problems.append(f"links[{i}].layer: {link.layer} does not match its nodes")
            if link.capacity < 0:
                problems.append(f"links[{i}].capacity: negative")
        for k, od in enumerate(self.od_pairs):
            for end in ("origin", "destination"):
                v = getattr(od, end)
                if not 0 <= v < self.n_v:
                    problems.append(f"od_pairs[{k}].{end}: vertiport {v} out of range")
            if od.origin == od.destination:
                problems.append(f"od_pairs[{k}]: origin equals destination")
            if not od.demand > 0 or not math.isfinite(od.demand):
                problems.append(f"od_pairs[{k}].demand: must be positive and finite, got {od.demand}")
        for j, v in enumerate(self.vertiports):
            if v.capacity < 0:
                problems.append(f"vertiports[{j}].capacity: negative")
        if self.waypoint_capacity is not None:
            cw = np.asarray(self.waypoint_capacity)
            if cw.shape != (n_n,):
                problems.append(f"waypoint_capacity: expected {n_n} entries, got {cw.shape}")
            elif np.any(cw < 0):
                problems.append("waypoint_capacity: negative entries")
        for r, route in enumerate(self.routes):
            problems.extend(self._route_problems(r, route))
        return problems

    def _route_problems(self, r: int, route: Route) -> list[str]:
        out = []
        if not route.links:
            return [f"routes[{r}]: empty"]
        bad = [i for i in route.links if not 0 <= i < self.n_l]
        if bad:
            return [f"routes[{r}]: unknown links {bad}"]
        if not 0 <= route.od < self.n_o:
            return [f"routes[{r}].od: {route.od} out of range"]
        for a, b in zip(route.links, route.links[1:]):
            if self.links[a].head != self.links[b].tail:
                out.append(f"routes[{r}]: link {a} head does not meet link {b} tail")
        od = self.od_pairs[route.od]
        first, last = self.links[route.links[0]], self.links[route.links[-1]]
        if first.tail != self.node(od.origin, route.layer) or last.head != self.node(od.destination, route.layer):
            out.append(f"routes[{r}]: endpoints do not match O-D pair {route.od} on layer {route.layer}")
        if any(self.links[i].layer != route.layer for i in route.links):
            out.append(f"routes[{r}]: changes layer")
        nodes = [self.links[route.links[0]].tail] + [self.links[i].head for i in route.links]
        if len(set(nodes)) != len(nodes):
            out.append(f"routes[{r}]: revisits a node")
        return out


@dataclass(frozen=True)
class IncidenceMatrices:
    E: np.ndarray
    F: np.ndarray
    H: np.ndarray
    J: np.ndarray
    K: np.ndarray


def build_incidence(topology: NetworkTopology) -> IncidenceMatrices:
    problems = topology.validate()
    if problems:
        raise TopologyError(problems)
    t = topology
    E = np.zeros((t.n_n, t.n_l))
    for j, link in enumerate(t.links):
        E[link.head, j] = 1.0
        E[link.tail, j] = -1.0
    F = np.zeros((t.n_l, t.n_r))
    H = np.zeros((t.n_o, t.n_r))
    J = np.zeros((t.n_v, t.n_r))
    for r, route in enumerate(t.routes):
        F[list(route.links), r] = 1.0
        H[route.od, r] = 1.0
        J[t.od_pairs[route.od].destination, r] = 1.0
    K = np.maximum(E, 0.0)
    return IncidenceMatrices(E=E, F=F, H=H, J=J, K=K)


@dataclass
class FlowReport:
    ok: dict[str, bool]
    worst: dict[str, float]

    @property
    def feasible(self) -> bool:
        return all(self.ok.values())


def validate_flows(
    mats: IncidenceMatrices,
    y: np.ndarray,
    z: np.ndarray,
    epsilon: float,
    c_v: np.ndarray,
    c_l: np.ndarray,
    c_w: np.ndarray,
    tol: float = 1e-6,
) -> FlowReport:
    """Check conservation, link-route consistency, capacities and signs.

    ``worst`` holds the largest violation per constraint family (0 when
    satisfied).
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    n_l, n_r = mats.F.shape
    if y.shape != (n_l,) or z.shape != (n_r,):
        raise ValueError(f"expected y of length {n_l} and z of length {n_r}, got {y.shape}, {z.shape}")
    scale = 1.0 - epsilon

    def over(lhs, cap):
        cap = np.asarray(cap, dtype=float)
        with np.errstate(invalid="ignore"):
            excess = lhs - scale * cap
        excess = np.where(np.isinf(cap), -np.inf, excess)
        return float(max(0.0, np.max(excess, initial=0.0)))

    worst = {
        "conservation": float(np.max(np.abs(mats.E @ y), initial=0.0)),
        "link_route": float(np.max(np.abs(mats.F @ z - y), initial=0.0)),
        "vertiport_capacity": over(mats.J @ z, c_v),
        "link_capacity": over(y, c_l),
        "waypoint_capacity": over(mats.K @ y, c_w),
        "nonnegativity": float(max(0.0, -np.min(y, initial=0.0), -np.min(z, initial=0.0))),
    }
    return FlowReport(ok={k: v <= tol for k, v in worst.items()}, worst=worst)


def layer_graph(topology: NetworkTopology, layer: int) -> nx.DiGraph:
    g = nx.DiGraph()
    for v in range(topology.n_v):
        g.add_node(topology.node(v, layer))
    for i, link in enumerate(topology.links):
        if link.layer == layer:
            g.add_edge(link.tail, link.head, index=i, length=topology.link_length(i))
    return g


def enumerate_routes(
    topology: NetworkTopology, k: int = 3, max_stretch: float = 1.4
) -> tuple[list[Route], list[str]]:
    """Up to ``k`` loop-free shortest routes per O-D pair and layer.

    Routes longer than ``max_stretch`` times the straight-line O-D distance
    are dropped. Returns the routes and a warning per O-D pair and layer
    left without any route.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    routes: list[Route] = []
    warnings: list[str] = []
    for layer in range(topology.n_layers):
        g = layer_graph(topology, layer)
        for o, od in enumerate(topology.od_pairs):
            src, dst = topology.node(od.origin, layer), topology.node(od.destination, layer)
            a, b = topology.vertiports[od.origin], topology.vertiports[od.destination]
            limit = max_stretch * math.hypot(b.x - a.x, b.y - a.y) * (1 + 1e-9)
            found = 0
            try:
                paths = nx.shortest_simple_paths(g, src, dst, weight="length")
                for path in islice(paths, k):
                    length = nx.path_weight(g, path, "length")
                    if length > limit:
                        break
                    links = tuple(g.edges[u, v]["index"] for u, v in zip(path, path[1:]))
                    routes.append(Route(links=links, od=o, layer=layer))
                    found += 1
            except nx.NetworkXNoPath:
                pass
            if not found:
                msg = f"O-D pair {o} ({a.id}->{b.id}) has no admissible route on layer {layer}"
                log.warning(msg)
                warnings.append(msg)
    routes.sort(key=lambda r: (r.od, r.layer))
    return routes, warnings
