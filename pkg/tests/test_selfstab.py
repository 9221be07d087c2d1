import pytest

from mstsim.graph import generate_graph, kruskal_oracle
from mstsim.sim import FaultEvent, Scheduler, run
from mstsim.selfstab import StabProgram, hierarchy_from_labels, output_edges, post_fault, run_selfstab
from mstsim.verifier import build_instance


@pytest.mark.parametrize("mode", ["sync", "async"])
def test_clean_start_converges_without_resets(mode):
    g = generate_graph("random-connected", 10, seed=1)
    v = run_selfstab(g, Scheduler(mode, seed=2))
    assert v.converged and v.resets == 0
    assert v.convergence_time <= 44 * g.n


def test_hierarchy_round_trip_through_labels():
    g = generate_graph("random-connected", 20, seed=4)
    inst = build_instance(g)
    h = hierarchy_from_labels(g, inst.labels)
    assert h.parent == inst.h.parent
    assert sorted((f.level, f.members) for f in h.fragments) == \
        sorted((f.level, f.members) for f in inst.h.fragments)


@pytest.mark.parametrize("mode", ["sync", "async"])
def test_randomized_starts_converge(mode):
    g = generate_graph("random-connected", 8, seed=3)
    for seed in range(3):
        v = run_selfstab(g, Scheduler(mode, seed=seed), randomize_start=True, seed=seed)
        assert v.converged, seed
        final = v.trace.final
        assert output_edges(final) == kruskal_oracle(g)


@pytest.mark.parametrize("checker", ["trains", "one-round"])
def test_post_fault_detect_reset_reconverge(checker):
    g = generate_graph("random-connected", 12, seed=0)
    v = run_selfstab(g, faults=post_fault(g, 400, checker=checker), checker=checker)
    assert v.detection_times[0] is not None
    assert v.resets >= 1 and v.converged


def _stab_run(g, faults, horizon, sched=None):
    prog = StabProgram(g)
    ges = []
    tr = run(g, prog, sched or Scheduler("sync"), faults, horizon, trace_level="milestones",
             on_round=lambda t, st, ev: ges.append((t, {x: s["ge"] for x, s in st.items()})))
    return tr, ges


def test_reset_floods_a_path_within_diameter():
    g = generate_graph("path", 8, seed=0)
    v = g.nodes[3]
    lab_fault = FaultEvent(500, v, "set-register", "lab", None)
    tr, ges = _stab_run(g, [lab_fault], 530)
    resets = tr.of_kind("reset")
    assert resets
    t0 = resets[0][0]
    done = next(t for t, m in ges if t >= t0 and min(m.values()) >= 1)
    assert done - t0 <= 7


def test_two_alarms_merge_into_one_epoch():
    g = generate_graph("path", 10, seed=0)
    a, b = g.nodes[0], g.nodes[-1]
    faults = [FaultEvent(500, a, "set-register", "lab", None), FaultEvent(500, b, "set-register", "lab", None)]
    tr, ges = _stab_run(g, faults, 1400)
    # the faulty nodes and their neighbours all alarm, all of them into epoch 1
    assert {d for _, _, _, d in tr.of_kind("reset")} == {"epoch=1 cause=alarm"}
    assert set(tr.final[x]["ge"] for x in g.nodes) == {1}
    assert output_edges(tr.final) == kruskal_oracle(g)


def test_higher_epoch_during_construction_restarts_everyone():
    g = generate_graph("random-connected", 8, seed=5)
    tr, ges = _stab_run(g, [FaultEvent(40, g.nodes[2], "set-register", "ge", 3)], 900)
    ge = {s["ge"] for s in tr.final.values()}
    assert len(ge) == 1 and ge.pop() >= 3
    assert output_edges(tr.final) == kruskal_oracle(g)


def test_size_taken_from_the_construction():
    g = generate_graph("random-connected", 9, seed=2)
    v = run_selfstab(g)
    assert all(s["lab"].numk[0] == g.n for s in v.trace.final.values())
