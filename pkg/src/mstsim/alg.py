"""Phase-clocked fragment merging that builds the MST in O(n) rounds with O(log n) bits.

Phase i occupies rounds [11*2^i, 22*2^i).  With P = 2^i the phase is split into
clock-driven stages:

    [11P, 15P)  size count of every fragment, wave limited to depth 2P-1
    [15P, 17P)  active roots flood their fragment
    [17P, 19P)  minimum outgoing edge convergecast
    [19P, 22P-1) root moves to the endpoint of the chosen edge
    22P-1       the endpoint hooks onto the other side

Besides building the tree, every node keeps two small pieces of bookkeeping
used later for labelling: one membership bit per phase and a record of the
phase in which its current parent edge was added.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import SimError
from .graph import WeightedGraph, comp_from_parents, edge_key
from .sim import Scheduler, Trace, run


def phase_of(t: int) -> int:
    """Phase index of round t (t >= 11)."""
    return (t // 11).bit_length() - 1


class Fragment(NamedTuple):
    level: int
    members: frozenset
    alg_root: int                    # root while the fragment was being processed
    cand: tuple[int, int] | None     # (endpoint inside, endpoint outside)
    weight: int | None


@dataclass
class Hierarchy:
    """The active fragments of one run, plus the final rooted tree."""

    fragments: list[Fragment]
    parent: dict                     # final tree as a parent map
    root: int

    height: int = field(init=False)
    by_level: dict = field(init=False, repr=False)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.height = max(f.level for f in self.fragments)
        self.by_level = {}
        self._index = {}
        for k, f in enumerate(self.fragments):
            self.by_level.setdefault(f.level, []).append(f)
            for v in f.members:
                self._index[(v, f.level)] = f

    def fragment_of(self, v: int, j: int) -> Fragment | None:
        return self._index.get((v, j))

    @property
    def tree(self) -> Fragment:
        return self.by_level[self.height][0]

    def top(self, f: Fragment) -> int:
        """Root of ``f`` with respect to the final tree."""
        for v in f.members:
            p = self.parent[v]
            if p is None or p not in f.members:
                return v
        raise SimError("invalid-hierarchy", "fragment without a root")

    def parent_fragment(self, f: Fragment) -> Fragment | None:
        v = next(iter(f.members))
        for j in range(f.level + 1, self.height + 1):
            g = self.fragment_of(v, j)
            if g is not None:
                return g
        return None

    def children(self, f: Fragment) -> list[Fragment]:
        return [g for g in self.fragments if g.level < f.level and self.parent_fragment(g) == f]


class AlgProgram:
    """Register-level node program; every node starts at round 0 with a clean state."""

    name = "alg"
    event_driven = True

    def init(self, ctx):
        return {
            "par": None, "pid": None, "lev": 0, "rid": ctx.id, "done": False,
            "sc": None, "fw": False, "tgt": None, "mem": 1, "ei": None,
        }

    def step(self, ctx, r, nbrs, t, out):
        if r["done"]:
            return None
        if t < 11:
            if t == 1:
                out.wake(11)
            return None
        i = (t // 11).bit_length() - 1
        P = 1 << i
        off = t - 11 * P
        me = ctx.id
        s = dict(r)
        par = s["par"]
        parent = nbrs[ctx.ports.index(par)] if par is not None else None

        if parent is not None and parent["done"]:
            s["done"] = True
            s["mem"] = 2 * s["mem"] + 1
            return s

        if off == 0:
            out.wake(t + 4 * P)
            s["sc"] = s["tgt"] = None
            s["fw"] = False
            if par is None:
                s["lev"], s["rid"], s["sc"] = i, me, (2 * P - 1,)
                if out.on:
                    out.emit("phase-start", str(i))
        elif off == 4 * P:
            out.wake(t + 2 * P)
            if par is None:
                ce = s["sc"]
                if ce and len(ce) == 2 and not ce[1] and ce[0] <= 2 * P - 1:
                    s["fw"] = True
                    if out.on:
                        out.emit("active", f"root={me} level={i} size={ce[0]}")
                else:
                    s["lev"] = i + 1
            s["sc"] = None
        elif off == 6 * P:
            out.wake(t + 2 * P)
        elif off == 8 * P:
            out.wake(t + 3 * P - 1)
        elif off == 11 * P - 1:
            out.wake(t + 1)

        # size count: wave down with a hop budget (1-tuple), capped sum back up (2-tuple)
        if off < 4 * P:
            sc = s["sc"]
            if sc is None and parent is not None:
                psc = parent["sc"]
                if psc and len(psc) == 1 and psc[0] > 0:
                    sc = s["sc"] = (psc[0] - 1,)
                    s["rid"], s["lev"] = parent["rid"], parent["lev"]
            if sc is not None and len(sc) == 1:
                kids = [x["sc"] for x in nbrs if x["pid"] == me]
                if sc[0] == 0:
                    s["sc"] = (1, bool(kids))
                elif all(x and len(x) == 2 for x in kids):
                    s["sc"] = (min(2 * P, 1 + sum(x[0] for x in kids)), any(x[1] for x in kids))
        # flood of the active fragments
        if 4 * P <= off < 6 * P and not s["fw"] and parent is not None and parent["fw"]:
            s["fw"] = True
        # minimum outgoing edge, echoed to the root
        if off >= 6 * P and s["fw"] and s["sc"] is None:
            kids = [(k, x) for k, x in enumerate(nbrs) if x["pid"] == me]
            if all(x["sc"] is not None for _, x in kids):
                best = False
                rid = s["rid"]
                for k, x in enumerate(nbrs):
                    if x["rid"] != rid and (best is False or ctx.weights[k] < best[0]):
                        best = (ctx.weights[k], ctx.ports[k], True)
                for k, x in kids:
                    fe = x["sc"]
                    if fe is not False and (best is False or fe[0] < best[0]):
                        best = (fe[0], ctx.ports[k], False)
                s["sc"] = best
                if par is None and best is False:
                    s["done"] = True
                    s["mem"] = 2 * s["mem"] + 1
                    if out.on:
                        out.emit("terminate", f"round={t}")
                    return s
        # move the root to the endpoint of the chosen edge
        if off == 8 * P and par is None and s["sc"]:
            self._advance(ctx, s, out, i)
        elif off > 8 * P:
            if parent is not None and parent["tgt"] == me:
                s["par"] = s["pid"] = None
                self._advance(ctx, s, out, i)
            elif s["tgt"] is not None and not s["sc"][2]:
                # the token went to a child; point to it once it is the root
                k = ctx.index_of[s["tgt"]]
                x = nbrs[k]
                if x["par"] is None:
                    h, a, b = x["ei"]
                    s["par"], s["pid"], s["ei"], s["tgt"] = ctx.ports[k], s["tgt"], (h, b, a), None
        # hook; tgt at an endpoint names the node across the chosen edge
        if off == 11 * P - 1:
            if s["par"] is None and s["tgt"] is not None and s["sc"] and s["sc"][2]:
                x = s["tgt"]
                k = ctx.index_of[x]
                mutual = nbrs[k]["tgt"] == me
                if not (mutual and x < me):
                    s["par"], s["pid"], s["ei"] = ctx.ports[k], x, (i, True, mutual)
                    if out.on:
                        out.emit("hook", f"{me}→{x}")
            s["mem"] = 2 * s["mem"] + (1 if s["fw"] else 0)
        return s

    @staticmethod
    def _advance(ctx, s, out, i):
        w, port, local = s["sc"]
        k = ctx.ports.index(port)
        s["tgt"] = ctx.nbr_ids[k]
        if local and out.on:
            out.emit("candidate", f"F=<{s['rid']},{i}> edge=<{ctx.id},{ctx.nbr_ids[k]},{w}>")


@dataclass
class AlgResult:
    comp: dict
    hierarchy: Hierarchy
    rounds: int
    states: dict
    trace: Trace


def run_alg(g: WeightedGraph, *, measure: bool = False, trace_level: str = "off",
            horizon: int | None = None) -> AlgResult:
    """Run the construction and record its active fragments."""
    n = g.n
    horizon = horizon or 44 * max(n, 1) + 64
    frags: list[list] = []          # [level, members, alg_root, cand]
    current: dict = {}
    nbr = {v: g.neighbors(v) for v in g.nodes}

    def on_round(t, states, events):
        if t < 11:
            return
        i = phase_of(t)
        P = 1 << i
        off = t - 11 * P
        if off == 4 * P:
            kids: dict = {v: [] for v in states}
            for v, s in states.items():
                if s["pid"] is not None:
                    kids[s["pid"]].append(v)
            current.clear()
            for v, s in states.items():
                if s["par"] is None and s["fw"]:
                    members, stack = {v}, [v]
                    while stack:
                        x = stack.pop()
                        for c in kids[x]:
                            members.add(c)
                            stack.append(c)
                    rec = [i, frozenset(members), v, None]
                    frags.append(rec)
                    current[v] = rec
        elif off == 11 * P - 1:
            for rec in current.values():
                for v in rec[1]:
                    st = states[v]
                    if st["tgt"] is not None and st["sc"] and st["sc"][2]:
                        rec[3] = (v, st["tgt"])
            current.clear()

    def until(t, states):
        return all(s["done"] for s in states.values())

    tr = run(g, AlgProgram(), Scheduler("sync"), horizon=horizon, trace_level=trace_level,
             measure=measure, on_round=on_round, until=until)
    states = tr.final
    if not all(s["done"] for s in states.values()):
        raise SimError("precondition-violation", f"construction did not finish within {horizon} rounds")
    parent = {v: s["pid"] for v, s in states.items()}
    root = next(v for v, p in parent.items() if p is None)
    fragments = [Fragment(lv, mem, ar, cand, None if cand is None else g.weight(*cand))
                 for lv, mem, ar, cand in frags]
    h = Hierarchy(fragments, parent, root)
    return AlgResult(comp_from_parents(g, parent), h, tr.time, states, tr)


def tree_edges(parent: dict) -> frozenset:
    return frozenset(edge_key(v, p) for v, p in parent.items() if p is not None)
