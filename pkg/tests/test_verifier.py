import random

import pytest

from mstsim.graph import from_edges, generate_graph, kruskal_oracle, tree_weight
from mstsim.partitions import Info
from mstsim.sim import FaultEvent, Scheduler
from mstsim.verifier import (CORPUS_KINDS, build_instance, cycle_update, fault_region, log_sq,
                             make_corruption, measure_detection, non_minimal_tree, one_round_corruption,
                             one_round_setup, run_one_round, run_verifier, setup_registers)


def _arr(level, first=False, on=True):
    return (Info(1, level, 0), first, on, 0)


def _feed(levels, seq):
    mon, bad = (False, -1, 0), None
    for a in seq:
        mon, why = cycle_update(mon, levels, [a])
        bad = bad or why
    return bad


def test_cycle_set_accepts_full_cycles():
    seq = [_arr(0, True), _arr(2), _arr(5), _arr(0, True), _arr(2), _arr(5), _arr(0, True)]
    assert _feed((0, 2, 5), seq) is None


def test_cycle_set_missing_level():
    seq = [_arr(0, True), _arr(2), _arr(5), _arr(0, True), _arr(2), _arr(0, True)]
    assert _feed((0, 2, 5), seq) == "cycle-set:missing"


def test_cycle_set_skipped_level_breaks_order():
    seq = [_arr(0, True), _arr(2), _arr(5), _arr(0, True), _arr(5), _arr(0, True)]
    assert _feed((0, 2, 5), seq) == "cycle-set:order"


def test_cycle_set_repeated_level():
    seq = [_arr(0, True), _arr(2), _arr(2), _arr(5), _arr(0, True)]
    assert _feed((0, 2, 5), seq) == "cycle-set:order"


def test_cycle_set_ignores_flag_off_and_partial_first_cycle():
    seq = [_arr(5), _arr(0, True), _arr(1, on=False), _arr(2), _arr(5), _arr(0, True)]
    assert _feed((0, 2, 5), seq) is None


@pytest.mark.parametrize("mode", ["sync", "async"])
@pytest.mark.parametrize("kind,n", [("random-connected", 12), ("path", 10), ("star", 9),
                                    ("grid", 16), ("complete", 8)])
def test_no_false_alarms(mode, kind, n):
    g = generate_graph(kind, n, seed=n)
    tr = run_verifier(build_instance(g), Scheduler(mode, seed=1), horizon=100 * log_sq(n))
    assert tr.alarms() == []


def test_no_alarm_at_two_nodes():
    g = from_edges([1, 2], [(1, 2, 5)])
    assert run_verifier(build_instance(g), horizon=50).alarms() == []


@pytest.mark.parametrize("mode", ["sync", "async"])
@pytest.mark.parametrize("kind", CORPUS_KINDS)
def test_corpus_detected(mode, kind):
    hits = 0
    for seed in range(3):
        g = generate_graph("random-connected", 16, seed=seed)
        c = make_corruption(kind, g, seed, t0=5)
        assert c is not None
        tr = run_verifier(c.inst, Scheduler(mode, seed=seed), c.faults, horizon=60 * log_sq(16),
                          until=lambda t, st: any(s["al"] for s in st.values()))
        d = measure_detection(tr, g, c.nodes, c.time)
        hits += d.time is not None
    assert hits == 3


def test_non_tree_detected_within_one_round():
    g = generate_graph("random-connected", 20, seed=3)
    c = make_corruption("non-tree", g, 1, t0=4)
    tr = run_verifier(c.inst, faults=c.faults, horizon=30)
    d = measure_detection(tr, g, c.nodes, c.time)
    assert d.time is not None and d.time <= 1


def test_non_minimal_tree_is_spanning_and_heavier():
    g = generate_graph("random-connected", 30, seed=8)
    t = non_minimal_tree(g, random.Random(1))
    assert len(t) == g.n - 1
    assert tree_weight(g, t) > tree_weight(g, kruskal_oracle(g))


def test_non_minimal_caught_by_c2():
    g = generate_graph("random-connected", 24, seed=2)
    c = make_corruption("non-minimal", g, 0)
    tr = run_verifier(c.inst, horizon=40 * log_sq(24))
    assert {ch for _, _, ch in tr.alarms()} & {"C2", "C1"}


def _hand():
    # path 1-2-3 plus the heavy chord 1-3
    return from_edges([1, 2, 3], [(1, 2, 1), (2, 3, 2), (1, 3, 9)])


def test_one_round_clean_and_root_id():
    g = _hand()
    inst = build_instance(g)
    assert run_one_round(inst).alarms() == []
    regs = one_round_setup(inst)
    v, j = next((v, j) for v, lab in inst.labels.items() for j, c in enumerate(lab.roots) if c == "1")
    row = list(regs[v]["inf"])
    row[j] = row[j]._replace(root=99)
    tr = run_one_round(inst, [FaultEvent(1, v, "set-register", "inf", tuple(row))])
    assert tr.alarms() and tr.alarms()[0][0] <= 2


def test_one_round_candidate_weight_mismatch_is_c1():
    g = _hand()
    inst = build_instance(g)
    regs = one_round_setup(inst)
    lab = inst.labels[1]
    j = next(j for j, e in enumerate(lab.endp) if e in "ud")
    row = list(regs[1]["inf"])
    row[j] = row[j]._replace(weight=row[j].weight + 3)
    tr = run_one_round(inst, [FaultEvent(1, 1, "set-register", "inf", tuple(row))])
    assert "C1" in {c for _, _, c in tr.alarms()} or "parent-mismatch" in {c for _, _, c in tr.alarms()}


def test_one_round_parent_disagreement():
    g = generate_graph("path", 6, seed=0)
    inst = build_instance(g)
    regs = one_round_setup(inst)
    v = next(v for v in g.nodes if inst.parent[v] is not None and "0" in inst.labels[v].roots)
    j = inst.labels[v].roots.index("0")
    row = list(regs[v]["inf"])
    row[j] = row[j]._replace(root=row[j].root + 100)
    tr = run_one_round(inst, [FaultEvent(1, v, "set-register", "inf", tuple(row))])
    assert "parent-mismatch" in {c for _, _, c in tr.alarms()}


@pytest.mark.parametrize("kind", CORPUS_KINDS)
def test_one_round_detects_in_one_round(kind):
    g = generate_graph("random-connected", 20, seed=5)
    c = one_round_corruption(kind, g, 2, t0=1)
    if c is None:
        pytest.skip("kind has no 1-round register")
    tr = run_one_round(c.inst, c.faults, horizon=4)
    d = measure_detection(tr, g, c.nodes, c.time)
    assert d.time is not None and d.time <= 1


def test_alarm_sticks():
    g = generate_graph("random-connected", 12, seed=1)
    c = make_corruption("roots", g, 0, t0=2)
    tr = run_verifier(c.inst, faults=c.faults, horizon=60)
    alarmed = [v for _, v, _ in tr.alarms()]
    assert len(alarmed) == len(set(alarmed))
    assert all(tr.final[v]["al"] for v in alarmed)


def test_alarms_stay_in_the_fault_region():
    for seed in range(4):
        g = generate_graph("random-connected", 32, seed=seed)
        inst = build_instance(g)
        for kind in ("roots", "endp", "parents", "piece", "erase"):
            c = make_corruption(kind, g, seed, t0=5, inst=inst)
            tr = run_verifier(inst, faults=c.faults, horizon=30 * log_sq(32))
            region = fault_region(inst, c.nodes)
            assert {v for _, v, _ in tr.alarms()} <= region


def test_budget_violation_reported():
    g = generate_graph("random-connected", 10, seed=0)
    tr = run_verifier(build_instance(g), horizon=5, budget_bits=8)
    assert tr.of_kind("budget-violation")


def test_setup_registers_shape():
    g = generate_graph("random-connected", 10, seed=0)
    regs = setup_registers(build_instance(g))
    assert set(regs) == set(g.nodes)
    assert all(set(r) >= {"par", "lab", "T", "B", "al"} for r in regs.values())
