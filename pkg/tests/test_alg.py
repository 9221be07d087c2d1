import math

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from mstsim.alg import phase_of, run_alg, tree_edges
from mstsim.graph import edge_key, from_edges, generate_graph, kruskal_oracle, prim_oracle
from mstsim.labels import ceil_log2


def _nx_mst(g):
    G = nx.Graph()
    G.add_weighted_edges_from(g.edges())
    return frozenset(edge_key(a, b) for a, b in nx.minimum_spanning_edges(G, data=False))


@pytest.mark.parametrize("kind", ["random-connected", "path", "star", "grid", "complete"])
@pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 33, 64])
def test_matches_oracles(kind, n):
    g = generate_graph(kind, n, seed=n + 1)
    res = run_alg(g)
    got = tree_edges(res.hierarchy.parent)
    assert got == kruskal_oracle(g) == prim_oracle(g)
    if n > 1:
        assert got == _nx_mst(g)
    assert res.rounds <= 44 * n


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 24), st.integers(0, 10 ** 6))
def test_random_graphs_property(n, seed):
    g = generate_graph("random-connected", n, seed=seed)
    res = run_alg(g)
    assert tree_edges(res.hierarchy.parent) == kruskal_oracle(g)
    assert res.rounds <= 44 * n


def test_hierarchy_invariants():
    for seed in range(5):
        g = generate_graph("random-connected", 80, seed=seed)
        h = run_alg(g).hierarchy
        assert h.height <= math.ceil(math.log2(g.n))
        by_level: dict = {}
        for f in h.fragments:
            assert len(f.members) >= 2 ** f.level
            by_level.setdefault(f.level, []).append(f.members)
        for sets in by_level.values():
            seen = set()
            for s in sets:
                assert not (seen & s)
                seen |= s
        fams = [f.members for f in h.fragments]
        for a in fams:
            for b in fams:
                assert a <= b or b <= a or not (a & b)


def test_candidates_are_lightest_outgoing():
    g = generate_graph("random-connected", 40, seed=9)
    h = run_alg(g).hierarchy
    for f in h.fragments:
        if f.cand is None:
            continue
        out = [w for a, b, w in g.edges() if (a in f.members) != (b in f.members)]
        assert f.weight == min(out)


def test_phase_boundaries():
    assert phase_of(11) == 0 and phase_of(21) == 0 and phase_of(22) == 1 and phase_of(44) == 2


def test_single_edge():
    g = from_edges([4, 9], [(4, 9, 3)])
    res = run_alg(g)
    assert tree_edges(res.hierarchy.parent) == {edge_key(4, 9)}


def test_memory_grows_additively_per_doubling():
    peaks = {}
    for n in (32, 64, 128):
        peaks[n] = max(run_alg(generate_graph("random-connected", n, seed=s), measure=True).trace.peak_bits
                       for s in range(2))
    assert peaks[64] - peaks[32] <= 16 and peaks[128] - peaks[64] <= 16
    c = peaks[64] / ceil_log2(64)
    assert peaks[128] <= c * ceil_log2(128) + 16
