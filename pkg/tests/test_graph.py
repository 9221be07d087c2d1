import itertools
import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from mstsim.errors import SimError
from mstsim.graph import (
    comp_from_parents, edge_key, format_components, format_graph, from_edges,
    generate_graph, is_spanning_tree, kruskal_oracle, orient_tree, parse_components,
    parse_graph, perturb_weights, prim_oracle, tree_weight, validate_graph,
)


def test_path_of_two():
    g = generate_graph("path", 2, seed=3)
    assert g.n == 2 and g.m == 1
    assert kruskal_oracle(g) == frozenset({edge_key(*g.nodes)})


def test_k3_shape():
    g = generate_graph("complete", 3, seed=5)
    assert g.m == 3
    assert all(g.degree(v) == 2 for v in g.nodes)
    assert validate_graph(g) == []


def test_determinism_and_validity():
    a = generate_graph("random-connected", 64, seed=7)
    b = generate_graph("random-connected", 64, seed=7)
    assert a == b
    assert validate_graph(a) == []
    assert max(a.nodes) <= 64 * 64


def test_zero_nodes_rejected():
    with pytest.raises(SimError) as err:
        generate_graph("path", 0)
    assert err.value.code == "invalid-parameter"


@pytest.mark.parametrize("kind", ["random-connected", "path", "star", "grid", "complete"])
@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_generators_valid(kind, n):
    g = generate_graph(kind, n, seed=n)
    assert g.n == n
    assert validate_graph(g) == []


def test_validate_reports():
    dup = from_edges([1, 1, 2], [(1, 2, 4)])
    assert "duplicate id" in validate_graph(dup)
    tie = from_edges([1, 2, 3], [(1, 2, 5), (2, 3, 5), (1, 3, 7)])
    assert "weight tie" in validate_graph(tie)


def test_k3_triangle_oracle():
    g = from_edges([1, 2, 3], [(1, 2, 1), (2, 3, 2), (1, 3, 3)])
    assert kruskal_oracle(g) == {(1, 2), (2, 3)}


def test_disconnected_oracle_error():
    g = from_edges([1, 2, 3, 4], [(1, 2, 1), (3, 4, 2)])
    with pytest.raises(SimError) as err:
        kruskal_oracle(g)
    assert err.value.code == "no-spanning-tree"


def test_k3_perturbation_order():
    g = from_edges([1, 2, 3], [(1, 2, 1), (2, 3, 1), (1, 3, 1)])
    gp = perturb_weights(g, [(1, 2), (2, 3)])
    order = sorted(gp.edges(), key=lambda e: e[2])
    assert [(a, b) for a, b, _ in order] == [(1, 2), (2, 3), (1, 3)]


def test_tree_edge_wins_tie():
    g = from_edges([4, 9, 2], [(4, 9, 5), (9, 2, 5), (4, 2, 1)])
    gp = perturb_weights(g, [(4, 9)])
    assert gp.weight(4, 9) < gp.weight(2, 9)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000), st.integers(1, 4))
def test_perturbation_matches_tuple_order(n, seed, wr):
    g = generate_graph("random-connected", n, seed, weight_range=wr)
    rng = random.Random(seed)
    marked = {edge_key(a, b) for a, b, _ in g.edges() if rng.random() < 0.5}
    gp = perturb_weights(g, marked)
    by_key = sorted(gp.edges(), key=lambda e: e[2])
    by_tuple = sorted(g.edges(), key=lambda e: (e[2], 0 if (e[0], e[1]) in marked else 1, e[0], e[1]))
    assert [e[:2] for e in by_key] == [e[:2] for e in by_tuple]
    assert validate_graph(gp) == []


def _all_spanning_trees(g):
    edges = [(a, b) for a, b, _ in g.edges()]
    for combo in itertools.combinations(edges, g.n - 1):
        h = nx.Graph(list(combo))
        h.add_nodes_from(g.nodes)
        if nx.is_tree(h):
            yield frozenset(combo)


def test_mst_preservation_under_perturbation():
    rng = random.Random(11)
    checked = 0
    for trial in range(100):
        n = rng.randint(3, 7)
        g = generate_graph("random-connected", n, trial, weight_range=3)
        trees = list(_all_spanning_trees(g))
        best = min(tree_weight(g, t) for t in trees)
        for t in rng.sample(trees, min(4, len(trees))):
            is_mst = tree_weight(g, t) == best
            assert (kruskal_oracle(perturb_weights(g, t)) == t) == is_mst
            checked += 1
    assert checked > 100


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(0, 10_000))
def test_kruskal_agrees_with_prim(n, seed):
    g = generate_graph("random-connected", n, seed)
    t = kruskal_oracle(g)
    assert t == prim_oracle(g)
    assert len(t) == n - 1
    nxg = nx.Graph()
    nxg.add_weighted_edges_from(g.edges())
    nxg.add_nodes_from(g.nodes)
    assert t == frozenset(edge_key(a, b) for a, b in nx.minimum_spanning_edges(nxg, data=False))


def test_file_round_trip():
    g = generate_graph("grid", 12, seed=2)
    assert parse_graph(format_graph(g)) == g
    par = orient_tree(g, kruskal_oracle(g), g.nodes[0])
    comp = comp_from_parents(g, par)
    assert parse_components(format_components(comp)) == comp
    assert is_spanning_tree(g, comp)


def test_parse_error_has_location():
    with pytest.raises(SimError) as err:
        parse_graph("2 1\nnode 1\nnode 2\nedge 1 1 2 x 3\n")
    assert err.value.code == "parse-error" and "line 4" in str(err.value)
