import pytest

from mstsim import bruteforce as bf
from mstsim.alg import run_alg
from mstsim.errors import SimError
from mstsim.graph import from_edges, generate_graph
from mstsim.labels import (LabelBundle, NodeView, check_labels, compute_agg, format_labels, induced_candidate,
                           labels_from_alg, mark_labels, parse_labels, verify_ediam, verify_eps, verify_numk,
                           verify_rs, verify_sp, views)


def _instance(kind, n, seed):
    g = generate_graph(kind, n, seed=seed)
    res = run_alg(g)
    return g, res


def _bare(roots, endp=None, parents=None, agg=None, pid=None, n=5, sp=(1, 0)):
    ell = len(roots) - 1
    return LabelBundle(roots, endp or "n" * (ell + 1), parents or "0" * (ell + 1),
                       agg or "0" * (ell + 1), sp, (n, 1), 0, pid)


@pytest.mark.parametrize("kind,n,seed", [(k, n, s) for k in ("random-connected", "path", "star", "grid")
                                         for n in (2, 7, 16, 33) for s in range(3)])
def test_marker_equivalence_and_completeness(kind, n, seed):
    g, res = _instance(kind, n, seed)
    central = mark_labels(g, res.hierarchy)
    local = labels_from_alg(g, res.states)
    assert central == local
    assert check_labels(g, local, res.hierarchy.parent) == {}


def test_completeness_on_100_random_instances():
    for seed in range(100):
        g, res = _instance("random-connected", 5 + seed % 40, seed)
        labels = mark_labels(g, res.hierarchy)
        assert check_labels(g, labels, res.hierarchy.parent) == {}, seed


def _path_views(n, lab_fn):
    ids = list(range(1, n + 1))
    g = from_edges(ids, [(i, i + 1, i) for i in range(1, n)])
    parent = {1: None, **{i: i - 1 for i in range(2, n + 1)}}
    labels = {v: lab_fn(v) for v in ids}
    return g, parent, labels


def test_sp_path_and_corrupted_distance():
    g, parent, labels = _path_views(3, lambda v: _bare("1" if v == 1 else "10", pid=v - 1 or None, sp=(1, v - 1)))
    for v, view in views(g, labels, parent).items():
        assert verify_sp(view) == []
    labels[2] = labels[2]._replace(sp=(1, 5))
    bad = {v: verify_sp(view) for v, view in views(g, labels, parent).items()}
    assert "SP:distance" in bad[2] and "SP:distance" in bad[3]


def _star(claimed):
    ids = [1, 2, 3, 4, 5]
    g = from_edges(ids, [(1, k, k) for k in range(2, 6)])
    parent = {1: None, 2: 1, 3: 1, 4: 1, 5: 1}
    labels = {v: LabelBundle("1", "n", "0", "0", (1, 0 if v == 1 else 1), (claimed, 5 if v == 1 else 1),
                             1, parent[v]) for v in ids}
    return g, parent, labels


def test_numk_star_examples():
    g, parent, labels = _star(5)
    assert all(verify_numk(vw) == [] for vw in views(g, labels, parent).values())
    g, parent, labels = _star(6)
    bad = {v: verify_numk(vw) for v, vw in views(g, labels, parent).items()}
    assert bad[1] == ["NUMK:root"] and all(not bad[v] for v in range(2, 6))


@pytest.mark.parametrize("x,ok", [(3, True), (2, False)])
def test_ediam_path_of_four(x, ok):
    g, parent, labels = _path_views(4, lambda v: _bare("1", pid=v - 1 or None, sp=(1, v - 1))._replace(ediam=x))
    bad = {v: verify_ediam(vw) for v, vw in views(g, labels, parent).items()}
    if ok:
        assert not any(bad.values())
    else:
        assert bad[4] == ["EDIAM:bound"] and not bad[1] and not bad[2] and not bad[3]


def _lone_view(roots, is_root, parent_roots=None):
    lab = _bare(roots, pid=None if is_root else 9, n=32)
    nb = [] if is_root else [(9, 1, _bare(parent_roots or "1" * len(roots), n=32))]
    return NodeView(1, lab, None if is_root else 9, nb)


def test_rs_examples():
    bad = verify_rs(_lone_view("01100", True))
    assert "RS0" in bad and "RS3" in bad
    assert "RS4" in verify_rs(_lone_view("11101", False))
    assert verify_rs(_lone_view("11110", False)) == []
    assert verify_rs(_lone_view("11111", True)) == []
    assert verify_rs(_lone_view("1*000", False)) == []


def test_eps_examples():
    # a leaf saying "down" has no child to point at
    lab = _bare("100", endp="dnn", parents="000", agg="100", pid=9)
    view = NodeView(1, lab, 9, [(9, 1, _bare("111", endp="nnn"))])
    bad = verify_eps(view)
    assert "EPS2:j=0" in bad and "EPS5" in bad
    # an 'up' at a level where v is not the top of its fragment
    lab = _bare("110", endp="nun", parents="000", agg="110", pid=9)
    assert "EPS3:j=1" not in verify_eps(NodeView(1, lab, 9, [(9, 1, _bare("111"))]))
    lab = _bare("100", endp="nun", parents="000", agg="010", pid=9)
    assert "EPS3:j=1" in verify_eps(NodeView(1, lab, 9, [(9, 1, _bare("111"))]))


def test_induced_candidate():
    child = _bare("110", parents="010", pid=1)
    me = NodeView(1, _bare("111", endp="ndn"), None, [(2, 1, child)])
    assert induced_candidate(me, 1) == (2, "down")
    assert induced_candidate(me, 0) is None
    up = NodeView(2, _bare("110", endp="unn", pid=1), 1, [(1, 1, me.lab)])
    assert induced_candidate(up, 0) == (1, "up")


def test_table_row_shapes():
    # top at levels 0..3 but not 4; root of the whole tree; absent at level 1
    for s, is_root in (("11110", False), ("11111", True), ("1*000", False)):
        assert verify_rs(_lone_view(s, is_root)) == []


def test_nesting_clause_is_needed():
    # star 1 -> {2,3,4,5}: without the nesting rule, {1,2,3,4} and {1,2,3,5} both pass
    parent = {1: None, 2: 1, 3: 1, 4: 1, 5: 1}
    roots = {1: "1111", 2: "1000", 3: "1000", 4: "10*0", 5: "1100"}
    frags = bf.decode_hierarchy(parent, roots)
    assert bf.is_hierarchy(parent, frags) == "not laminar"
    kids = bf.children_map(parent)
    labels = {v: bf._bare_label(5, roots[v], pid=parent[v]) for v in parent}
    assert "RS5:nest" in verify_rs(bf._view(4, parent, kids, labels))


def test_inside_clause_is_needed():
    # root 1 with children 2,3; the level-0 candidate of {1} would leave {1,2}
    parent = {1: None, 2: 1, 3: 1}
    roots = {1: "111", 2: "100", 3: "1*0"}
    lab = {1: ("ddn", "000"), 2: ("unn", "000"), 3: ("u*n", "110")}
    kids = bf.children_map(parent)
    agg = compute_agg([2, 3, 1], kids, roots, {v: e for v, (e, _) in lab.items()}, 2)
    labels = {v: bf._bare_label(3, roots[v], lab[v][0], lab[v][1], agg[v], parent[v]) for v in parent}
    assert "EPS4:inside j=0" in verify_eps(bf._view(3, parent, kids, labels))


def test_pruned_enumeration_drops_nothing():
    for n in (1, 2, 3):
        for parent in bf.rooted_shapes(n):
            for ell in (0, 1, 2):
                a = list(bf.rs_assignments(parent, ell))
                assert a == [r for r in bf.rs_assignments(parent, ell, prefilter=False) if r in a]
                assert len(a) == len(list(bf.rs_assignments(parent, ell, prefilter=False)))
    parent = {1: None, 2: 1, 3: 2}
    for roots in bf.rs_assignments(parent, 1):
        key = lambda ls: sorted(str(sorted((v, b.endp, b.parents, b.agg) for v, b in L.items())) for L in ls)
        assert key(bf.eps_assignments(parent, roots, 1)) == \
            key(bf.eps_assignments(parent, roots, 1, prefilter=False))


def test_exhaustive_up_to_four_nodes():
    rep = bf.exhaustive_check(4, 3)
    assert rep.failures == [] and rep.eps_legal > 0


def test_label_file_round_trip_and_errors():
    g, res = _instance("random-connected", 12, 3)
    labels = mark_labels(g, res.hierarchy)
    text = format_labels(labels, comp=res.hierarchy.parent)
    back = parse_labels(text, res.hierarchy.parent)
    assert back == labels
    with pytest.raises(SimError) as err:
        parse_labels("label 3 ROOTS=1 ENDP=n\n")
    assert err.value.code == "parse-error" and "line 1" in str(err.value)


def test_corrupted_roots_string_is_reported():
    g, res = _instance("random-connected", 20, 1)
    labels = mark_labels(g, res.hierarchy)
    v = next(x for x in g.nodes if res.hierarchy.parent[x] is not None)
    labels[v] = labels[v]._replace(roots="0" * len(labels[v].roots))
    bad = check_labels(g, labels, res.hierarchy.parent)
    assert v in bad and "RS3" in bad[v]
