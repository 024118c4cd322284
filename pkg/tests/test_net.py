import itertools
import json
import math

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcslp.net import (
    DEST,
    ORIGIN,
    InstanceTooLarge,
    NetworkError,
    StationCombination,
    accessible_sets,
    brute_force_optimum,
    build_validity_expression,
    builtin_network,
    from_bitstring,
    is_valid,
    load_network,
    mask_of,
    shortest_route,
    to_bitstring,
    validity_table,
)


def constraint_valid(net, mask):
    """Constraint (1 - S_i) + sum_j S_j >= 1 with S_O = S_D = 1, written as arithmetic."""
    def s(node):
        return 1 if node in (ORIGIN, DEST) else mask >> (node - 1) & 1

    return all(
        (1 - s(i)) + sum(s(j) for j in path.accessible[i]) >= 1
        for path in net.paths
        for i in [ORIGIN, *path.nodes]
    )


def nx_graph(net):
    g = nx.Graph()
    for a, b, d in net.edges:
        g.add_edge(a, b, weight=d)
    return g


def enumerate_best_route(net, a, b):
    g = nx_graph(net)
    paths = list(nx.all_simple_paths(g, a, b))
    cost = {tuple(p): sum(g[u][v]["weight"] for u, v in zip(p, p[1:])) for p in paths}
    best = min(cost.values())
    return min(p for p, c in cost.items() if c == best), best


# -- loading ------------------------------------------------------------------

def test_illinois_instance(illinois):
    assert illinois.n == 7
    assert len(illinois.edges) == 10
    assert illinois.range_miles == 260
    assert len(illinois.trips) == 15
    lincoln = illinois.index("Lincoln")
    assert all(lincoln not in (t.origin, t.dest) for t in illinois.trips)
    assert all(t.origin < t.dest for t in illinois.trips)


def test_corridor_instance(corridor):
    assert corridor.n == 4
    assert [(t.origin, t.dest) for t in corridor.trips] == [(1, 4)]
    assert corridor.range_miles == 100


def _doc(**over):
    doc = {
        "range_miles": 100,
        "nodes": ["a", "b", "c"],
        "edges": [["a", "b", 10], ["b", "c", 20]],
        "trips": [{"origin": "a", "dest": "c"}],
    }
    doc.update(over)
    return doc


@pytest.mark.parametrize(
    "over",
    [
        {"edges": [["a", "b", 0], ["b", "c", 20]]},
        {"edges": [["a", "b", -3], ["b", "c", 20]]},
        {"edges": [["a", "zz", 5]]},
        {"edges": [["a", "a", 5], ["b", "c", 20]]},
        {"edges": [["a", "b", 5], ["b", "a", 6], ["b", "c", 20]]},
        {"trips": [{"origin": "a", "dest": "nowhere"}]},
        {"trips": [{"origin": "a", "dest": "a"}]},
        {"edges": [["a", "b", 10]]},  # c unreachable
        {"range_miles": 0},
        {"trips": [{"origin": "a", "dest": "c", "route": ["a", "c"]}]},
        {"trips": 7},
    ],
)
def test_load_rejects_bad_documents(over):
    with pytest.raises(NetworkError):
        load_network(_doc(**over))


def test_load_rejects_malformed_text():
    with pytest.raises(NetworkError):
        load_network("{not json")
    with pytest.raises(NetworkError):
        load_network(json.dumps({"nodes": []}))


def test_load_from_text_and_path(tmp_path):
    text = json.dumps(_doc())
    f = tmp_path / "net.json"
    f.write_text(text)
    assert load_network(text) == load_network(f) == load_network(str(f))


def test_explicit_route_is_used():
    doc = _doc(
        edges=[["a", "b", 10], ["b", "c", 20], ["a", "c", 5]],
        trips=[{"origin": "a", "dest": "c", "route": ["a", "b", "c"]}],
    )
    net = load_network(doc)
    assert net.paths[0].nodes == (1, 2, 3)
    assert shortest_route(net, 1, 3) == (1, 3)


def test_all_pairs_with_hub_exclusion():
    doc = _doc(trips="all_pairs", exclude_hubs=["b"])
    net = load_network(doc)
    assert [(t.origin, t.dest) for t in net.trips] == [(1, 3)]


def test_loading_is_deterministic():
    a, b = builtin_network("illinois"), builtin_network("illinois")
    assert a == b
    assert a.paths == b.paths


# -- routes --------------------------------------------------------------------

@pytest.mark.parametrize(
    "a,b,route,miles",
    [(6, 1, (6, 5, 2, 1), 220), (3, 7, (3, 7), 65)],
)
def test_illinois_routes(illinois, a, b, route, miles):
    assert shortest_route(illinois, a, b) == route
    assert enumerate_best_route(illinois, a, b) == (route, miles)


def test_corridor_route(corridor):
    assert shortest_route(corridor, 1, 4) == (1, 2, 3, 4)


def test_every_illinois_route_matches_enumeration(illinois):
    for trip, path in zip(illinois.trips, illinois.paths):
        route, miles = enumerate_best_route(illinois, trip.origin, trip.dest)
        assert path.nodes == route
        assert path.length == miles


def test_tie_break_is_lexicographic():
    doc = _doc(
        nodes=["s", "x", "y", "t"],
        edges=[["s", "y", 1], ["y", "t", 1], ["s", "x", 1], ["x", "t", 1]],
        trips=[{"origin": "s", "dest": "t"}],
    )
    net = load_network(doc)
    assert net.paths[0].nodes == (1, 2, 4)


# -- accessible sets -------------------------------------------------------------

def test_corridor_table(corridor):
    acc = corridor.paths[0].accessible
    assert acc == {
        ORIGIN: {1, 2},
        1: {2},
        2: {3, 4},
        3: {4, DEST},
        4: {DEST},
        DEST: set(),
    }


def test_illinois_origin_set(illinois):
    route = shortest_route(illinois, 6, 1)
    cum = [0, 77, 138, 220]
    acc = accessible_sets(route, cum, 260)
    # node 2 sits 138 miles out, beyond R/2 = 130; the origin node itself is at 0
    assert acc[ORIGIN] == {6, 5}
    assert acc[DEST] == frozenset()


def _oracle_sets(nodes, cum, R):
    total = cum[-1]
    out = {ORIGIN: {v for v, c in zip(nodes, cum) if c <= R / 2} | ({DEST} if total <= R / 2 else set())}
    for p, v in enumerate(nodes):
        s = set()
        for q in range(p + 1, len(nodes)):
            if cum[q] - cum[p] <= R:
                s.add(nodes[q])
        if total - cum[p] <= R / 2:
            s.add(DEST)
        out[v] = s
    out[DEST] = set()
    return out


@given(
    st.lists(st.integers(1, 120), min_size=1, max_size=7),
    st.integers(10, 400),
)
def test_accessible_sets_sound_and_complete(steps, R):
    nodes = tuple(range(1, len(steps) + 2))
    cum = [0]
    for d in steps:
        cum.append(cum[-1] + d)
    acc = accessible_sets(nodes, cum, R)
    assert acc == _oracle_sets(nodes, cum, R)
    pos = {v: p for p, v in enumerate(nodes)}
    for i, reach in acc.items():
        for j in reach:
            if j == DEST:
                start = 0 if i == ORIGIN else cum[pos[i]]
                assert cum[-1] - start <= R / 2
            elif i == ORIGIN:
                assert cum[pos[j]] <= R / 2
            else:
                assert pos[j] > pos[i] and cum[pos[j]] - cum[pos[i]] <= R


# -- validity ------------------------------------------------------------------------

def test_corridor_validity_examples(corridor):
    assert is_valid(mask_of([2, 4]), corridor)
    assert not is_valid(mask_of([2]), corridor)
    assert is_valid(StationCombination.from_nodes([1, 2, 3, 4], 4), corridor)


def test_corridor_validity_matches_constraint(corridor):
    for mask in range(16):
        assert is_valid(mask, corridor) == constraint_valid(corridor, mask)


def test_all_stations_valid_on_examples(corridor, illinois):
    assert is_valid((1 << corridor.n) - 1, corridor)
    assert is_valid((1 << illinois.n) - 1, illinois)


def test_is_valid_length_mismatch(corridor):
    with pytest.raises(ValueError):
        is_valid(StationCombination(0, 5), corridor)
    with pytest.raises(ValueError):
        is_valid(1 << 4, corridor)


def test_validity_table_agrees_with_scalar(corridor, illinois):
    for net in (corridor, illinois):
        table = validity_table(net)
        assert [bool(v) for v in table] == [constraint_valid(net, m) for m in range(1 << net.n)]


@pytest.mark.parametrize("name", ["corridor", "illinois"])
def test_monotone_under_adding_stations(name):
    net = builtin_network(name)
    for mask in range(1 << net.n):
        if not is_valid(mask, net):
            continue
        for k in range(net.n):
            assert is_valid(mask | 1 << k, net)


# -- brute force -----------------------------------------------------------------------

def test_corridor_optimum(corridor):
    res = brute_force_optimum(corridor)
    assert res.optimum == 2
    assert set(res.optimal) == {mask_of([2, 3]), mask_of([2, 4])}


def test_illinois_optimum(illinois):
    res = brute_force_optimum(illinois)
    assert res.optimum == 3
    assert {mask_of([2, 3, 5]), mask_of([1, 3, 5])} <= set(res.optimal)
    # independent enumeration over all 128 combinations
    masks = [m for m in range(128) if constraint_valid(illinois, m)]
    best = min(bin(m).count("1") for m in masks)
    assert set(res.optimal) == {m for m in masks if bin(m).count("1") == best}
    assert res.valid_count == len(masks)


def test_no_trip_network_optimum_is_empty_set():
    net = load_network(_doc(trips=[]))
    res = brute_force_optimum(net)
    assert res.optimum == 0 and res.optimal == (0,)


def test_infeasible_network():
    net = builtin_network("corridor")
    short = load_network({**json.loads((__import__("importlib.resources").resources.files("qcslp") / "data" / "corridor.json").read_text()), "range_miles": 30})
    res = brute_force_optimum(short)
    assert not res.feasible and math.isinf(res.optimum) and res.optimal == ()
    assert net.n == short.n


def test_brute_force_size_guard():
    names = [f"n{i}" for i in range(26)]
    edges = [[a, b, 1] for a, b in zip(names, names[1:])]
    net = load_network({"range_miles": 5, "nodes": names, "edges": edges, "trips": []})
    with pytest.raises(InstanceTooLarge):
        brute_force_optimum(net)


# -- bitstrings -------------------------------------------------------------------------

def test_bitstring_rendering_s1_leftmost():
    assert to_bitstring(mask_of([2, 3, 5]), 7) == "0110100"
    assert to_bitstring(mask_of([1, 3, 5]), 7) == "1010100"
    assert StationCombination.parse("0110101").nodes == (2, 3, 5, 7)
    for m in range(64):
        assert from_bitstring(to_bitstring(m, 6)) == m


# -- expression --------------------------------------------------------------------------

def test_corridor_expression_clause_count(corridor):
    expr = build_validity_expression(corridor)
    assert len(expr.children) == 6
    assert str(expr.children[0]) == "(S_O & S_D)"


def test_expression_matches_validity_exhaustively(corridor, illinois):
    for net in (corridor, illinois):
        expr = build_validity_expression(net)
        table = expr.evaluate_all(net.n)
        for mask in range(1 << net.n):
            assert expr.evaluate(mask) == is_valid(mask, net) == bool(table[mask])


def test_short_trip_satisfied_by_empty_set():
    net = load_network(_doc(edges=[["a", "b", 10], ["b", "c", 20]], trips=[{"origin": "a", "dest": "b"}]))
    assert DEST in net.paths[0].accessible[ORIGIN]
    assert build_validity_expression(net).evaluate(0)


@st.composite
def random_networks(draw):
    n = draw(st.integers(2, 6))
    names = [f"v{i}" for i in range(n)]
    edges = {}
    for i in range(1, n):
        j = draw(st.integers(0, i - 1))
        edges[(j, i)] = draw(st.integers(1, 120))
    for a, b in itertools.combinations(range(n), 2):
        if (a, b) not in edges and draw(st.booleans()):
            edges[(a, b)] = draw(st.integers(1, 120))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1]),
                          max_size=4))
    return load_network({
        "range_miles": draw(st.integers(20, 300)),
        "nodes": names,
        "edges": [[names[a], names[b], d] for (a, b), d in edges.items()],
        "trips": [{"origin": names[a], "dest": names[b]} for a, b in pairs],
    })


@settings(max_examples=60, deadline=None)
@given(random_networks())
def test_random_networks_expression_and_monotonicity(net):
    expr = build_validity_expression(net)
    table = validity_table(net)
    for mask in range(1 << net.n):
        v = constraint_valid(net, mask)
        assert expr.evaluate(mask) == v == bool(table[mask]) == is_valid(mask, net)
        if v:
            assert all(is_valid(mask | 1 << k, net) for k in range(net.n))
