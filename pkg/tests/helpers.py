"""Toy instances and brute-force oracles shared by the test modules."""

from __future__ import annotations

import math

import numpy as np

from uamflow.exposure import cumulative_noise, noise_increase
from uamflow.network import Link, NetworkTopology, OdPair, Route, Vertiport, build_incidence
from uamflow.optimizer import ProblemSpec
from uamflow.welfare import fairness_threshold_swf


def two_vertiport_topology(demand=(10.0, 10.0), cap=8.0, parallel=False) -> NetworkTopology:
    """A and B 10,000 ft apart; optionally a second A->B corridor (link 2)."""
    vps = [Vertiport("A", 0.0, 0.0), Vertiport("B", 10_000.0, 0.0)]
    caps = np.broadcast_to(np.asarray(cap, dtype=float), (3 if parallel else 2,))
    links = [Link(0, 1, 0, caps[0]), Link(1, 0, 0, caps[1])]
    routes = [Route((0,), 0, 0), Route((1,), 1, 0)]
    if parallel:
        links.append(Link(0, 1, 0, caps[2]))
        routes.insert(1, Route((2,), 0, 0))
    ods = [OdPair(0, 1, demand[0]), OdPair(1, 0, demand[1])]
    return NetworkTopology(vps, (1000.0,), links, ods, routes)


def spec_for(topo: NetworkTopology, M, ambient, p=None, **params) -> ProblemSpec:
    return ProblemSpec(
        mats=build_incidence(topo),
        M=np.asarray(M, dtype=float),
        ambient=np.asarray(ambient, dtype=float),
        demand=topo.demands(),
        c_v=topo.vertiport_capacity(),
        c_l=topo.link_capacity(),
        c_w=topo.node_capacity(),
        p=np.zeros(topo.n_r) if p is None else np.asarray(p, dtype=float),
        **params,
    )


def random_toy_spec(rng: np.random.Generator, parallel=True, n_c=None) -> ProblemSpec:
    """Random three-link (or two-link) instance with partly masked noise."""
    topo = two_vertiport_topology(
        demand=tuple(rng.uniform(4.0, 14.0, 2).round(1)),
        cap=rng.uniform(3.0, 12.0, 3).round(1),
        parallel=parallel,
    )
    n_l = topo.n_l
    n_c = int(rng.integers(1, 5)) if n_c is None else n_c
    ambient = rng.choice([45.0, 50.0, 55.0, 60.0, 65.0], n_c)
    sel = rng.uniform(65.0, 90.0, (n_l, n_c))
    masked = rng.random((n_l, n_c)) < 0.3
    M = np.where(masked | (sel <= ambient), 0.0, 10.0 ** (sel / 10.0))
    p = np.zeros(topo.n_r)
    if parallel:
        p[1] = rng.uniform(0.05, 0.35)
    params = dict(
        omega=float(rng.uniform(0.1, 0.9)),
        delta1=float(rng.choice([0.0, 0.1, 0.3, 1.0, math.inf])),
        delta2=float(rng.choice([0.0, 0.1, 0.3, 1.0, math.inf])),
        delta_n_max=float(rng.uniform(8.0, 25.0)),
        m_u=float(rng.choice([math.inf, rng.uniform(0.5, 6.0)])),
        p_u=float(rng.choice([math.inf, rng.uniform(0.0, 0.2)])),
    )
    return spec_for(topo, M, ambient, p, **params)


def grid_objective(spec: ProblemSpec, step: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """True objective on a ``step`` grid of route flows (``-inf`` where infeasible).

    Works for the three-route parallel toy (z = z_AB1, z_AB2, z_BA) and the
    two-route toy; flow conservation pins the B->A flow to the A->B total.
    Returns the value grid (1-D or 2-D) and the matching route flows.
    """
    F, demand = spec.mats.F, spec.demand
    cap = (1.0 - spec.epsilon) * spec.c_l
    if spec.n_r == 2:
        g = np.arange(0.0, min(cap[0], cap[1], demand[0], demand[1]) + 1e-9, step)
        shape = g.shape
        Z = np.column_stack([g, g])
    else:
        g1 = np.arange(0.0, min(cap[0], demand[0]) + 1e-9, step)
        g2 = np.arange(0.0, min(cap[2], demand[0]) + 1e-9, step)
        a, b = np.meshgrid(g1, g2, indexing="ij")
        shape = a.shape
        Z = np.column_stack([a.ravel(), b.ravel(), (a + b).ravel()])
    Y = Z @ F.T
    ok = np.all(Y <= cap + 1e-9, axis=1)
    D = Z @ spec.mats.H.T / demand
    ok &= np.all(D <= 1.0 + 1e-9, axis=1)
    if math.isfinite(spec.p_u):
        ok &= Z @ spec.p <= spec.p_u * Z.sum(axis=1) + 1e-12
    values = np.full(len(Z), -np.inf)
    for k in np.flatnonzero(ok):
        n_inc = noise_increase(cumulative_noise(spec.M, Y[k], spec.T), spec.ambient)
        if n_inc.max(initial=0.0) > spec.delta_n_max:
            continue
        if math.isfinite(spec.m_u) and n_inc.mean() > spec.m_u:
            continue
        values[k] = (spec.omega * fairness_threshold_swf(D[k], spec.delta1)
                     + (1 - spec.omega) * fairness_threshold_swf(1 - n_inc / spec.delta_n_max, spec.delta2))
    return values.reshape(shape), Z.reshape(*shape, -1)


def grid_optimum(spec: ProblemSpec, step: float = 0.1) -> tuple[float, np.ndarray]:
    values, Z = grid_objective(spec, step)
    k = np.unravel_index(np.argmax(values), values.shape)
    return float(values[k]), Z[k]


def is_unimodal(values: np.ndarray, tol: float = 1e-9) -> bool:
    """True if every grid local maximum (>= all feasible neighbours) is global."""
    best = values.max()
    if not np.isfinite(best):
        return False
    padded = np.pad(values, 1, constant_values=-np.inf)
    is_max = np.isfinite(values)
    for shift in np.ndindex(*(3,) * values.ndim):
        if all(s == 1 for s in shift):
            continue
        sl = tuple(slice(s, s + n) for s, n in zip(shift, values.shape))
        is_max &= values >= padded[sl] - tol
    return bool(np.all(values[is_max] >= best - 1e-6))


def unimodal_toy_specs(count: int, seed: int = 0, step: float = 0.1) -> list[ProblemSpec]:
    """First ``count`` random toy specs whose exact grid objective is unimodal."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        spec = random_toy_spec(rng)
        values, _ = grid_objective(spec, step)
        if is_unimodal(values):
            out.append(spec)
    return out
