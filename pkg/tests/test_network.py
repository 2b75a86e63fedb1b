import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uamflow.network import (
    Link,
    NetworkTopology,
    OdPair,
    Route,
    TopologyError,
    Vertiport,
    build_incidence,
    enumerate_routes,
    validate_flows,
)

from .helpers import two_vertiport_topology


def triangle(k_layers=1, stretch_ok=True):
    # C sits close enough to the A-B line that A-C-B is a mild detour
    vps = [Vertiport("A", 0.0, 0.0), Vertiport("B", 10_000.0, 0.0),
           Vertiport("C", 5000.0, 2000.0 if stretch_ok else 9000.0)]
    links = []
    for layer in range(k_layers):
        off = layer * 3
        for a, b in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]:
            links.append(Link(off + a, off + b, layer, 10.0))
    ods = [OdPair(0, 1, 5.0)]
    return NetworkTopology(vps, tuple(1000.0 * (i + 1) for i in range(k_layers)), links, ods)


def test_two_node_incidence():
    topo = two_vertiport_topology()
    m = build_incidence(topo)
    np.testing.assert_array_equal(m.E, [[-1, 1], [1, -1]])
    np.testing.assert_array_equal(m.E.sum(axis=0), [0, 0])
    np.testing.assert_array_equal(m.F, np.eye(2))
    np.testing.assert_array_equal(m.H, np.eye(2))
    np.testing.assert_array_equal(m.J, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(m.K, np.maximum(m.E, 0))


def test_incidence_invariants_on_triangle():
    topo = triangle(k_layers=2)
    topo.routes, _ = enumerate_routes(topo, k=2)
    m = build_incidence(topo)
    assert m.E.shape == (6, 12)
    assert np.all((m.E == 1).sum(axis=0) == 1) and np.all((m.E == -1).sum(axis=0) == 1)
    assert np.all(m.H.sum(axis=0) == 1) and np.all(m.J.sum(axis=0) == 1)
    np.testing.assert_array_equal(m.K, np.maximum(m.E, 0))


def test_chain_violation_is_reported():
    topo = triangle()
    # link 0 is A->B, link 2 is A->C: head(B) != tail(A)
    topo.routes = [Route((0, 2), 0, 0)]
    with pytest.raises(TopologyError) as err:
        build_incidence(topo)
    assert any("head does not meet" in p for p in err.value.problems)


def test_all_problems_listed():
    topo = triangle()
    topo.links.append(Link(0, 99, 0))
    topo.routes = [Route((42,), 0, 0)]
    topo.od_pairs.append(OdPair(1, 1, -2.0))
    with pytest.raises(TopologyError) as err:
        build_incidence(topo)
    msgs = " ".join(err.value.problems)
    for needle in ("out of range", "unknown links", "origin equals destination", "demand"):
        assert needle in msgs


def test_layer_count_n_n():
    vps = [Vertiport(f"V{i}", float(i * 1000), float((i * 7) % 5) * 1000) for i in range(19)]
    topo = NetworkTopology(vps, (1000.0, 2000.0, 3000.0), [], [OdPair(0, 1, 1.0)])
    assert topo.n_n == 57
    assert build_incidence(topo).E.shape == (57, 0)


def test_validate_flows_examples():
    topo = two_vertiport_topology(cap=10.0)
    m = build_incidence(topo)
    cv, cl, cw = topo.vertiport_capacity(), topo.link_capacity(), topo.node_capacity()
    ok = validate_flows(m, np.array([5.0, 5.0]), np.array([5.0, 5.0]), 0.0, cv, cl, cw)
    assert ok.feasible
    bad = validate_flows(m, np.array([5.0, 4.0]), np.array([5.0, 4.0]), 0.0, cv, cl, cw)
    assert not bad.ok["conservation"] and bad.worst["conservation"] == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(m.E @ np.array([5.0, 4.0])), [1.0, 1.0])
    closed = validate_flows(m, np.array([1.0, 1.0]), np.array([1.0, 1.0]), 1.0, cv, cl, cw)
    assert not closed.ok["link_capacity"]
    with pytest.raises(ValueError):
        validate_flows(m, np.zeros(3), np.zeros(2), 0.0, cv, cl, cw)


def test_validate_flows_sign_and_consistency():
    topo = two_vertiport_topology(cap=10.0)
    m = build_incidence(topo)
    args = (0.0, topo.vertiport_capacity(), topo.link_capacity(), topo.node_capacity())
    r = validate_flows(m, np.array([2.0, 2.0]), np.array([3.0, 2.0]), *args)
    assert not r.ok["link_route"] and r.worst["link_route"] == pytest.approx(1.0)
    r = validate_flows(m, np.array([-1.0, -1.0]), np.array([-1.0, -1.0]), *args)
    assert not r.ok["nonnegativity"]


def brute_force_paths(topo, od, layer, max_stretch):
    g = nx.DiGraph()
    for i, link in enumerate(topo.links):
        if link.layer == layer:
            g.add_edge(link.tail, link.head, length=topo.link_length(i))
    src, dst = topo.node(od.origin, layer), topo.node(od.destination, layer)
    a, b = topo.vertiports[od.origin], topo.vertiports[od.destination]
    limit = max_stretch * math.hypot(b.x - a.x, b.y - a.y) * (1 + 1e-9)
    paths = [p for p in nx.all_simple_paths(g, src, dst)]
    lengths = sorted(nx.path_weight(g, p, "length") for p in paths)
    return [x for x in lengths if x <= limit]


def test_triangle_detour_within_stretch():
    topo = triangle()
    routes, warnings = enumerate_routes(topo, k=2)
    assert not warnings
    topo.routes = routes
    lengths = sorted(topo.route_length(r) for r in range(topo.n_r))
    assert lengths == pytest.approx(brute_force_paths(topo, topo.od_pairs[0], 0, 1.4)[:2])
    assert len(routes) == 2


def test_detour_outside_stretch_dropped():
    topo = triangle(stretch_ok=False)
    routes, _ = enumerate_routes(topo, k=2)
    assert len(routes) == 1 and len(routes[0].links) == 1


def test_k1_shortest_only():
    topo = triangle(k_layers=3)
    routes, _ = enumerate_routes(topo, k=1)
    assert len(routes) == 3
    assert {r.layer for r in routes} == {0, 1, 2}
    assert all(len(r.links) == 1 for r in routes)


def test_only_detour_with_unit_stretch_warns():
    topo = triangle()
    topo.links = [lk for lk in topo.links if (lk.tail, lk.head) != (0, 1)]
    routes, warnings = enumerate_routes(topo, k=3, max_stretch=1.0)
    assert routes == [] and len(warnings) == 1


def test_routes_never_change_layer():
    topo = triangle(k_layers=3)
    topo.routes, _ = enumerate_routes(topo, k=3)
    assert not topo.validate()
    for r in topo.routes:
        assert {topo.links[i].layer for i in r.links} == {r.layer}


def test_enumerate_rejects_bad_k():
    with pytest.raises(ValueError):
        enumerate_routes(triangle(), k=0)


@given(st.lists(st.floats(0.0, 20.0), min_size=4, max_size=4))
def test_round_trip_flows_conserve(z_half):
    topo = triangle()
    topo.od_pairs.append(OdPair(1, 0, 5.0))
    topo.routes, _ = enumerate_routes(topo, k=2)
    m = build_incidence(topo)
    # pair every A->B route flow with an equal B->A flow along the reversed path
    z = np.zeros(topo.n_r)
    rev = {}
    for r, route in enumerate(topo.routes):
        nodes = tuple([topo.links[route.links[0]].tail] + [topo.links[i].head for i in route.links])
        rev[nodes] = r
    for idx, (nodes, r) in enumerate(sorted(rev.items())):
        if topo.routes[r].od == 0:
            z[r] = z_half[idx % 4]
            z[rev[nodes[::-1]]] = z_half[idx % 4]
    y = m.F @ z
    np.testing.assert_allclose(m.E @ y, 0.0, atol=1e-9)


@given(st.lists(st.floats(0.0, 30.0), min_size=12, max_size=12))
def test_k_counts_arrivals(y):
    topo = triangle(k_layers=2)
    m = build_incidence(topo)
    y = np.array(y)
    arrivals = np.zeros(topo.n_n)
    for j, link in enumerate(topo.links):
        arrivals[link.head] += y[j]
    np.testing.assert_allclose(m.K @ y, arrivals)


def test_matrix_route_length_matches_geometry():
    topo = triangle(k_layers=2)
    topo.od_pairs += [OdPair(2, 1, 3.0), OdPair(1, 2, 3.0)]
    topo.routes, _ = enumerate_routes(topo, k=3)
    m = build_incidence(topo)
    via_matrix = topo.link_lengths() @ m.F
    direct = [topo.route_length(r) for r in range(topo.n_r)]
    np.testing.assert_allclose(via_matrix, direct)


def test_route_endpoints_checked():
    topo = triangle()
    # link 4 is B->C: starts at the wrong vertiport for O-D A->B
    topo.routes = [Route((4,), 0, 0)]
    assert any("endpoints" in p for p in topo.validate())


def test_route_layer_mismatch():
    topo = triangle(k_layers=2)
    topo.routes = [Route((0,), 0, 1)]
    assert topo.validate()


def test_capacity_accessors():
    topo = two_vertiport_topology(cap=(3.0, 4.0))
    np.testing.assert_array_equal(topo.link_capacity(), [3.0, 4.0])
    assert np.all(np.isinf(topo.node_capacity()))
    assert list(itertools.islice(topo.route_layers(), 2)) == [0, 0]
