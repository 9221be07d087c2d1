"""Level-by-level wave and echo inside every fragment of the hierarchy.

Levels are processed in increasing order.  A node takes part in the wave of
its level-j fragment only after every wave it belongs to at lower levels has
finished, so the wave of a fragment starts after the waves of all fragments
below it.  Each wave runs three sweeps over the fragment's tree edges: the
root's start signal goes down, the combined value comes back up, and the
root's result goes down again.  Every member records the result.

The instruction used here collects, per fragment, its size, whether one of its
child fragments is top, and the weight of its chosen edge; from those every
node works out the class and color of each of its fragments and the record
``(root id, level, weight)`` of each.
"""
from __future__ import annotations

from dataclasses import dataclass

from .graph import WeightedGraph
from .partitions import Info, threshold
from .sim import Scheduler, run

IDLE, WAVE, ECHO, DONE = 0, 1, 2, 3


class ClassifyWave:
    """Register program; ``labels`` supplies ROOTS/EndP/PARENTS and the parent echo."""

    name = "multi-wave"
    event_driven = True

    def __init__(self, labels, n: int):
        self.labels = labels
        self.lim = threshold(n)

    def init(self, ctx):
        lab = self.labels[ctx.id]
        return {"roots": lab.roots, "endp": lab.endp, "par": lab.parents, "pid": lab.pid,
                "lv": 0, "st": IDLE, "val": None, "dn": None, "res": ()}

    def _leaf(self, ctx, r, nbrs, j):
        # (size, some child fragment is top, weight of the chosen edge if chosen here)
        below = next((i for i in range(j - 1, -1, -1) if r["roots"][i] != "*"), None)
        top_child = below is not None and r["res"][below][0] >= self.lim
        w = None
        e = r["endp"][j]
        if e == "u":
            w = ctx.weights[ctx.index_of[r["pid"]]]
        elif e == "d":
            for k, x in enumerate(nbrs):
                if x["pid"] == ctx.id and x["par"][j] == "1":
                    w = ctx.weights[k]
        return 1, top_child, w

    @staticmethod
    def _combine(vals):
        size = sum(v[0] for v in vals)
        top = any(v[1] for v in vals)
        ws = [v[2] for v in vals if v[2] is not None]
        return size, top, (min(ws) if ws else None)

    def step(self, ctx, r, nbrs, t, out):
        ell = len(r["roots"]) - 1
        j = r["lv"]
        if j > ell:
            return None
        s = dict(r)
        me = ctx.id
        c = r["roots"][j]
        kids = [x for x in nbrs if x["pid"] == me and x["roots"][j] == "0"]
        parent = nbrs[ctx.index_of[r["pid"]]] if r["pid"] is not None else None
        if c == "*":
            s["res"] = r["res"] + (None,)
            s["lv"] = j + 1
            return s
        if r["st"] == IDLE:
            if c == "1" or (parent is not None and parent["lv"] == j and parent["st"] >= WAVE):
                s["st"] = WAVE
            return s if s != r else None
        if r["st"] == WAVE:
            if all(x["lv"] == j and x["st"] == ECHO for x in kids):
                val = self._combine([self._leaf(ctx, r, nbrs, j)] + [x["val"] for x in kids])
                s["val"] = val
                if c == "1":
                    s["st"], s["dn"] = DONE, (me,) + val
                    if out.on:
                        out.emit("wave", f"F=<{me},{j}> size={val[0]}")
                else:
                    s["st"] = ECHO
            return s if s != r else None
        if r["st"] == ECHO:
            if parent["lv"] == j and parent["st"] == DONE:
                s["st"], s["dn"] = DONE, parent["dn"]
                return s
            return None
        # DONE: move on once the fragment children copied the result
        if all(x["lv"] > j or x["st"] == DONE for x in kids):
            s["res"] = r["res"] + (r["dn"][1:],)
            s["lv"], s["st"], s["val"] = j + 1, IDLE, None
            return s
        return None


@dataclass
class WaveResult:
    rounds: int
    sizes: dict          # (level, top node) -> size
    classes: dict        # (level, top node) -> (is top, color)
    infos: dict          # node -> [Info per level it belongs to]


def classify_distributed(g: WeightedGraph, labels, horizon: int | None = None,
                         trace_level: str = "off") -> WaveResult:
    """Run the waves and read back sizes, classes and records from the registers."""
    n = g.n
    prog = ClassifyWave(labels, n)
    horizon = horizon or 40 * n + 40
    tr = run(g, prog, Scheduler("sync"), horizon=horizon, trace_level=trace_level,
             until=lambda t, st: all(s["lv"] > len(s["roots"]) - 1 for s in st.values()))
    lim = threshold(n)
    sizes, classes, infos = {}, {}, {}
    tops: dict = {}
    for v, s in tr.final.items():
        ell = len(s["roots"]) - 1
        recs = []
        for j in range(ell + 1):
            res = s["res"][j] if j < len(s["res"]) else None
            if res is None:
                continue
            # the fragment's top is the nearest ancestor whose ROOTS entry is '1'
            top = _top_of(v, j, labels)
            sizes[(j, top)] = res[0]
            tops[(j, top)] = (res[0] >= lim, res[1])
            recs.append(Info(top, j, res[2] if res[2] is not None else 0))
        infos[v] = recs
    for v, s in tr.final.items():
        r = s["roots"]
        for j, res in enumerate(s["res"]):
            if res is None:
                continue
            key = (j, _top_of(v, j, labels))
            is_top, top_child = tops[key]
            if is_top:
                col = "large" if top_child else "red"
            else:
                up = next((i for i in range(j + 1, len(r)) if r[i] != "*"), None)
                pkey = (up, _top_of(v, up, labels)) if up is not None else None
                if pkey is not None and tops[pkey][0]:
                    col = "blue" if tops[pkey][1] else "green"
                else:
                    col = "none"
            classes[key] = (is_top, col)
    return WaveResult(tr.time, sizes, classes, infos)


def _top_of(v, j, labels):
    while labels[v].roots[j] != "1":
        v = labels[v].pid
    return v
