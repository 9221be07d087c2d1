"""Detection-based restart: construct, mark, verify forever, reset on alarm.

Every node carries a global epoch ``ge`` and a mode:

``C``  construct: the construction runs under a pulse counter ``rd``.  A node
       computes round rd+1 once every neighbour has reached round rd; it reads a
       neighbour one round ahead through that neighbour's ``prev`` copy.  This
       keeps round semantics under both schedulers.
``M``  the construction finished here and at every neighbour; waiting for
       the marker output of this epoch.
``V``  verify: the verifier (or the 1-round checker) runs on the installed
       registers.

A node that alarms, or whose watchdog expires, moves to epoch ge+1 and mode C
with clean registers.  A node that sees a neighbour with a larger epoch adopts
it the same way, so concurrent resets merge into the largest epoch.

The marker's tree aggregates, the partitions and the piece placement are
computed by a harness service from the finished construction registers of the
epoch, then installed node by node.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .alg import AlgProgram, Fragment, Hierarchy
from .graph import WeightedGraph, edge_key, kruskal_oracle
from .labels import decode_candidates, decode_hierarchy, labels_from_alg
from .partitions import build_partitions
from .sim import FaultEvent, NodeCtx, Scheduler, Trace, run, scramble
from .verifier import (Instance, OneRoundChecker, VerifierProgram, build_instance, fragment_records,
                       setup_registers)


def hierarchy_from_labels(g: WeightedGraph, labels: dict) -> Hierarchy:
    parent = {v: lab.pid for v, lab in labels.items()}
    roots = {v: lab.roots for v, lab in labels.items()}
    cands = decode_candidates(parent, labels)
    frs = []
    for j, top, members in decode_hierarchy(parent, roots):
        c = cands.get((j, top))
        frs.append(Fragment(j, members, top, c, None if c is None else g.weight(*c)))
    root = next(v for v, p in parent.items() if p is None)
    return Hierarchy(frs, parent, root)


class StabProgram:
    """Register program of the restart harness.

    ``n_bound`` is the known upper bound on n used by the watchdogs;
    ``checker`` is "trains" (the composed verifier) or "one-round".
    """

    name = "selfstab"

    def __init__(self, g: WeightedGraph, mode: str = "sync", fairness: int | None = None,
                 n_bound: int | None = None, checker: str = "trains"):
        self.g = g
        self.N = n_bound or g.n
        self.checker = checker
        self.alg = AlgProgram()
        self.ver = VerifierProgram({}, mode, fairness, g.n)
        self.one = OneRoundChecker({})
        self.rd_cap = 44 * self.N + 64
        self.stall = 4 * (self.N + 4) * self.ver.act
        self.states: dict | None = None
        self._marks: dict = {}
        self._template: dict | None = None

    def bind(self, states: dict) -> None:
        self.states = states

    # -- register sets ------------------------------------------------------------------

    def _fresh(self, ctx, ge: int) -> dict:
        return {"ge": ge, "md": "C", "rd": 0, "cur": self.alg.init(ctx), "prev": None, "wd": 0}

    def init(self, ctx):
        return self._fresh(ctx, 0)

    def _reset(self, ctx, r, out, why: str) -> dict:
        # resets are counted by the harness, so they are recorded at every trace level
        out.emit("reset", f"epoch={r['ge'] + 1} cause={why}")
        return self._fresh(ctx, r["ge"] + 1)

    # -- marker service -----------------------------------------------------------------

    def _marker(self, ge: int):
        """Per-node verify registers for epoch ``ge``; "wait" until every node finished."""
        if ge in self._marks:
            return self._marks[ge]
        st = self.states
        if any(s.get("ge") != ge or s.get("md") != "M" for s in st.values()):
            return "wait"
        try:
            labels = labels_from_alg(self.g, {v: s["cur"] for v, s in st.items()})
            h = hierarchy_from_labels(self.g, labels)
            parts = build_partitions(self.g, h)
            labels = {v: lab._replace(toproot=parts.top_root[v], botroot=parts.bottom_root[v],
                                      jdelim=parts.jdelim[v]) for v, lab in labels.items()}
            inst = Instance(self.g, h, labels, parts)
            if self.checker == "one-round":
                recs = fragment_records(inst)
                mk = {v: {"par": h.parent[v], "lab": labels[v], "inf": recs[v], "al": False} for v in labels}
            else:
                mk = setup_registers(inst)
        except Exception:       # garbage construction registers: nothing to install
            mk = None
        self._marks[ge] = mk
        return mk

    # -- step ---------------------------------------------------------------------------

    def step(self, ctx, r, nbrs, t, out):
        ge = r["ge"]
        top = max((x["ge"] for x in nbrs), default=ge)
        if top > ge:
            return self._fresh(ctx, top)
        md = r["md"]
        if md == "V":
            return self._verify(ctx, r, nbrs, t, out)
        if md == "M":
            if any(x["ge"] == ge and x["md"] == "C" and not x["cur"]["done"] for x in nbrs):
                return self._reset(ctx, r, out, "mode")
            mk = self._marker(ge)
            if mk == "wait":
                if r["wd"] > self.stall:
                    return self._reset(ctx, r, out, "watchdog")
                return {**r, "wd": r["wd"] + 1}
            if mk is None:
                return self._reset(ctx, r, out, "marker")
            if out.on:
                out.emit("verify", f"epoch={ge}")
            return {"ge": ge, "md": "V", **mk[ctx.id]}
        return self._construct(ctx, r, nbrs, t, out)

    def _construct(self, ctx, r, nbrs, t, out):
        ge, rd, cur = r["ge"], r["rd"], r["cur"]
        if rd > self.rd_cap or r["wd"] > self.stall:
            return self._reset(ctx, r, out, "watchdog")
        views = []
        for x in nbrs:
            if x["ge"] != ge:
                return {**r, "wd": r["wd"] + 1}
            m = x["md"]
            if m == "V":
                return self._reset(ctx, r, out, "mode")
            if m == "M":
                views.append(x["cur"])
            elif x["rd"] == rd:
                views.append(x["cur"])
            elif x["rd"] == rd + 1 and x["prev"] is not None:
                views.append(x["prev"])
            else:
                return {**r, "wd": r["wd"] + 1}
        if cur["done"] and all(v["done"] for v in views):
            return {"ge": ge, "md": "M", "cur": cur, "wd": 0}
        try:
            new = self.alg.step(ctx, cur, views, rd + 1, out)
        except (TypeError, ValueError, IndexError, KeyError, AttributeError, ZeroDivisionError):
            return self._reset(ctx, r, out, "construct")
        return {**r, "rd": rd + 1, "prev": cur, "cur": new if new is not None else cur, "wd": 0}

    def _verify(self, ctx, r, nbrs, t, out):
        ge = r["ge"]
        for x in nbrs:
            if x["ge"] == ge and x["md"] == "C":
                return self._reset(ctx, r, out, "mode")
            if x["ge"] != ge or x["md"] != "V":
                # a neighbour still installing, or about to adopt this epoch
                if r.get("wd", 0) > self.stall:
                    return self._reset(ctx, r, out, "watchdog")
                return {**r, "wd": r.get("wd", 0) + 1}
        chk = self.one if self.checker == "one-round" else self.ver
        try:
            new = chk.step(ctx, r, nbrs, t, out)
        except (TypeError, ValueError, IndexError, KeyError, AttributeError):
            out.alarm("malformed")
            return self._reset(ctx, r, out, "alarm")
        if new is None:
            return None if r.get("wd", 0) == 0 else {**r, "wd": 0}
        if new["al"]:
            return self._reset(ctx, r, out, "alarm")
        new["wd"] = 0
        return new

    # -- adversarial starting states ------------------------------------------------------

    def randomize(self, ctx, regs, rng: random.Random) -> dict:
        """A random register set of a random mode, with values scrambled."""
        md = rng.choice("CMV")
        ge = rng.randrange(0, 8)
        if md == "V":
            if self._template is None:
                inst = build_instance(self.g)
                self._template = setup_registers(inst)
            base = scramble(self._template[ctx.id], rng)
            base["par"] = rng.choice(ctx.nbr_ids + [None])
            base["al"] = False
            return {"ge": ge, "md": "V", **base, "wd": 0}
        cur = scramble(self.alg.init(ctx), rng)
        cur["par"] = rng.choice(ctx.ports + [None])
        cur["pid"] = ctx.nbr_ids[ctx.ports.index(cur["par"])] if cur["par"] is not None else None
        cur["done"] = rng.random() < 0.3
        if md == "M":
            return {"ge": ge, "md": "M", "cur": cur, "wd": rng.randrange(0, 8)}
        return {"ge": ge, "md": "C", "rd": rng.randrange(0, 44 * self.N), "cur": cur,
                "prev": scramble(cur, rng), "wd": rng.randrange(0, 8)}


# -- runs -------------------------------------------------------------------------------

def output_edges(states: dict) -> frozenset | None:
    """The tree held in verify mode, or None when some node is not verifying."""
    if any(s.get("md") != "V" for s in states.values()):
        return None
    if len({s["ge"] for s in states.values()}) != 1:
        return None
    return frozenset(edge_key(v, s["par"]) for v, s in states.items() if s["par"] is not None)


@dataclass
class StabVerdict:
    converged: bool
    convergence_time: int | None     # from the last fault to the start of the final legal stretch
    resets: int
    detection_times: list = field(default_factory=list)
    peak_bits: int = 0
    trace: Trace | None = None

    def as_dict(self) -> dict:
        return {"converged": self.converged, "convergence_time": self.convergence_time,
                "resets": self.resets, "detection_times": self.detection_times,
                "detection_distances": [], "peak_bits": self.peak_bits}


def run_selfstab(g: WeightedGraph, sched: Scheduler | None = None, faults=(), horizon: int | None = None, *,
                 randomize_start: bool = False, seed: int = 0, checker: str = "trains",
                 n_bound: int | None = None, measure: bool = False, trace_level: str = "off",
                 settle: int | None = None) -> StabVerdict:
    """Run the restart harness and judge convergence and closure against the oracle tree.

    With ``settle`` the run stops once the output has been legal for that many
    time units after the last fault; otherwise it runs to the horizon.
    """
    sched = sched or Scheduler("sync")
    prog = StabProgram(g, sched.mode, sched.fairness, n_bound, checker)
    faults = sorted(faults, key=lambda f: f.time)
    last_fault = faults[-1].time if faults else 0
    # leave room for the settle window after the last fault
    horizon = horizon or last_fault + 120 * g.n + 400 + (settle or 0)
    initial = None
    if randomize_start:
        rng = random.Random(f"start:{seed}")
        initial = {v: prog.randomize(NodeCtx(g, v), None, rng) for v in g.nodes}
    want = kruskal_oracle(g)
    legal_since = [None]

    def on_round(t, states, events):
        ok = output_edges(states) == want
        if ok and legal_since[0] is None:
            legal_since[0] = t
        elif not ok:
            legal_since[0] = None

    def until(t, states):
        since = legal_since[0]
        return settle is not None and since is not None and t >= last_fault and t - since >= settle

    tr = run(g, prog, sched, faults, horizon, trace_level=trace_level, initial=initial, measure=measure,
             on_round=on_round, until=until)
    resets = sum(1 for e in tr.events if e[2] == "reset")
    det = []
    for f in faults:
        hit = next((t for t, v, k, d in tr.events if k == "alarm" and t >= f.time), None)
        det.append(None if hit is None else hit - f.time)
    since = legal_since[0]
    # a fault that never broke the output counts as converged at once
    conv = since is not None
    return StabVerdict(conv, max(0, since - last_fault) if conv else None, resets, det, tr.peak_bits, tr)


def post_fault(g: WeightedGraph, at: int, seed: int = 0, checker: str = "trains") -> list:
    """A single corrupted stored record, planted once the run is verifying."""
    inst = build_instance(g)
    rng = random.Random(f"post:{seed}")
    if checker == "one-round":
        recs = fragment_records(inst)
        v = rng.choice(sorted(g.nodes))
        row = list(recs[v])
        j = rng.choice([i for i, x in enumerate(row) if x is not None])
        row[j] = row[j]._replace(weight=row[j].weight + 1 + rng.randrange(5))
        return [FaultEvent(at, v, "set-register", "inf", tuple(row))]
    regs = setup_registers(inst)
    holders = [(v, k) for v in sorted(g.nodes) for k in ("T", "B") if regs[v][k]["perm"]]
    v, k = rng.choice(holders)
    pair = list(regs[v][k]["perm"])
    pair[0] = pair[0]._replace(weight=pair[0].weight + 1 + rng.randrange(5))
    return [FaultEvent(at, v, "set-register", f"{k}.perm", tuple(pair))]
