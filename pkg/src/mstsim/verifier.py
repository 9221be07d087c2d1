"""The composed verifier: label checks, train delivery checks, and the
comparison of fragment records across every edge.

A node raises a sticky alarm when any of these fails:

* the 1-round label clauses (distances, counts, ROOTS/EndP/PARENTS/AGG,
  part-root fields)
* its cycle sets: on each train, in each cycle, the records marked as its own
  must arrive at strictly increasing levels and cover exactly the levels it
  expects from that train; a cycle must also complete within a timeout
* the part root must store a pair when it expects records
* at an event E(v,u,j): agreement with the parent's record, the root-id of a
  fragment top, and the two candidate checks C1 / C2

The module also builds verifier inputs from a run of the construction, the
corruption corpus used for soundness runs, detection measurements, and a
1-round checker that stores every record at every node.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .alg import Hierarchy, run_alg
from .graph import WeightedGraph, edge_key, from_edges, kruskal_oracle, orient_tree
from .labels import NodeView, ceil_log2, check_node, mark_labels
from .partitions import Partitions, build_partitions, info_of
from .sim import FaultEvent, Scheduler, Trace, run, scramble
from .trains import (bottom_flag, new_train, next_level, shows, top_flag, train_levels,
                     train_step)

WAIT_C = 4             # sync comparison window per level, in units of log n
TIMEOUT_C = 16         # cycle timeout; sync c*L^2, async c*L^3 scaled by fairness

TRAIN_KEYS = (("T", "toproot"), ("B", "botroot"))


def _log_len(lab) -> int:
    try:
        n = int(lab.numk[0])
    except (TypeError, ValueError, IndexError):
        n = 2
    return ceil_log2(max(2, min(n, 1 << 20))) + 1


def _after(levels, lst):
    return next((x for x in levels if x > lst), None)


def cycle_update(mon: tuple, levels: tuple, arrivals) -> tuple[tuple, str | None]:
    """Feed broadcast arrivals to a cycle-set monitor (started, last level, age).

    Levels flagged as v's own must arrive strictly increasing inside a cycle and
    cover ``levels`` by the time the next cycle opens.  The first, partial cycle
    is not judged.
    """
    started, lst, age = mon
    bad = None
    for info, first, on, _ in arrivals:
        if first:
            if started and _after(levels, lst) is not None:
                bad = bad or "cycle-set:missing"
            started, lst, age = True, -1, 0
        if on and started:
            if info.level != _after(levels, lst):
                bad = bad or "cycle-set:order"
            else:
                lst = info.level
    return (started, lst, age), bad


class VerifierProgram:
    """Register program of the composed verifier.

    ``setup`` maps a node to its starting registers (see :func:`setup_registers`).
    ``probe(kind, t, node, data)`` is a harness hook for measurements; it is
    called for every event E (kind "E", data (u, j)) and every broadcast
    arrival (kind "arrive", data (train, record, flag)).
    """

    name = "verifier"

    def __init__(self, setup: dict, mode: str = "sync", fairness: int | None = None,
                 n_nodes: int | None = None, probe=None):
        self.setup = setup
        self.mode = mode
        self.probe = probe
        n = n_nodes or len(setup)
        k = fairness if fairness is not None else 2 * n - 1
        # activations of one node within one ideal time unit, at most
        self.act = 1 if mode == "sync" else 2 * (max(n, (k + 1) // 2) - n + 1)
        self._memo: dict = {}

    def init(self, ctx):
        return dict(self.setup[ctx.id])

    # -- structural clauses, a pure function of the labels in view -----------------

    def _structural(self, ctx, r, nbrs):
        key = (ctx.id, r["par"], r["lab"], tuple(x["lab"] for x in nbrs))
        hit = self._memo.get(key)
        if hit is None:
            view = NodeView(ctx.id, r["lab"], r["par"],
                            [(u, w, x["lab"]) for u, w, x in zip(ctx.nbr_ids, ctx.weights, nbrs)])
            try:
                bad = check_node(view, with_parts=True)
            except (TypeError, ValueError, IndexError, AttributeError):
                bad = ["malformed"]
            hit = bad[0] if bad else ""
            if len(self._memo) > 200_000:
                self._memo.clear()
            self._memo[key] = hit
        return hit or None

    # -- comparison ---------------------------------------------------------------

    def _is_cand(self, ctx, r, nbrs, idx, j) -> bool:
        e = r["lab"].endp[j]
        if e == "u":
            return ctx.nbr_ids[idx] == r["par"]
        if e == "d":
            x = nbrs[idx]
            return x["par"] == ctx.id and x["lab"].parents[j] == "1"
        return False

    def _event(self, ctx, r, nbrs, idx, ask, sh, t):
        """Checks run at E(v,u,j); ``sh`` is u's level-j record or None when u has none."""
        if self.probe is not None:
            self.probe("E", t, ctx.id, (ctx.nbr_ids[idx], ask.level))
        lab = r["lab"]
        j = ask.level
        u = ctx.nbr_ids[idx]
        same = sh is not None and sh.root == ask.root
        if u == r["par"]:
            inside = lab.roots[j] == "0"
            if inside != same or (same and sh != ask):
                return "parent-mismatch"
        if j < len(lab.roots) - 1:
            w = ctx.weights[idx]
            if self._is_cand(ctx, r, nbrs, idx, j):
                if same or ask.weight != w:
                    return "C1"
            elif not same and ask.weight > w:
                return "C2"
        return None

    def _load(self, ctx, r, rec):
        lab = r["lab"]
        j = rec.level
        if lab.roots[j] == "1" and rec.root != ctx.id:
            return "root-id"
        if j == len(lab.roots) - 1 and rec.weight != 0:
            return "C1"
        return None

    def _compare(self, ctx, r, nbrs, s, t, out):
        lab = r["lab"]
        levels = tuple(j for j, c in enumerate(lab.roots) if c != "*")
        ask, cur = r["ask"], r["cur"]
        bad = None
        if ask is None or ask.level not in levels or not isinstance(cur, int) or cur < 0:
            rec = next((x for x in (shows(r, j) for j in levels) if x is not None), None)
            s["ask"], s["cur"], s["keep"] = rec, 0, None
            return self._load(ctx, r, rec) if rec is not None else None
        j = ask.level
        if self.mode == "sync":
            if cur < WAIT_C * _log_len(lab):
                for idx, x in enumerate(nbrs):
                    xr = x["lab"].roots
                    sh = None if len(xr) <= j or xr[j] == "*" else shows(x, j)
                    if sh is not None or len(xr) <= j or xr[j] == "*":
                        bad = bad or self._event(ctx, r, nbrs, idx, ask, sh, t)
                s["cur"] = cur + 1
                return bad
        elif cur < ctx.deg:
            x = nbrs[cur]
            xr = x["lab"].roots
            absent = len(xr) <= j or xr[j] == "*"
            sh = None if absent else shows(x, j)
            if absent or sh is not None:
                bad = self._event(ctx, r, nbrs, cur, ask, sh, t)
                s["cur"], s["keep"] = cur + 1, None
            else:
                want = (ctx.nbr_ids[cur], j)
                if r["keep"] != want:
                    s["keep"] = want
                    if out.full:
                        out.emit("keep-filed", f"v={ctx.id} server={want[0]} j={j}")
            return bad
        s["keep"] = None
        rec = shows(r, next_level(levels, j))
        if rec is not None:
            s["ask"], s["cur"] = rec, 0
            return self._load(ctx, r, rec)
        return None

    def _holding(self, me, bc, nbrs) -> bool:
        if bc is None or not bc[2]:
            return False
        want = (me, bc[0].level)
        return any(x["keep"] == want for x in nbrs)

    # -- trains and cycle sets ------------------------------------------------------

    def _trains(self, ctx, r, nbrs, s, t, out):
        me, lab, par = ctx.id, r["lab"], r["par"]
        pidx = ctx.index_of.get(par) if par is not None else None
        L = _log_len(lab)
        budget = TIMEOUT_C * L * L if self.mode == "sync" else TIMEOUT_C * L ** 3 * self.act
        bad = None
        for key, field_ in TRAIN_KEYS:
            proot = getattr(lab, field_)
            is_root = proot == me
            X = r[key]
            levels = train_levels(lab, key)
            if is_root and levels and X["perm"] is None:
                bad = bad or "cycle-set:root-empty"
            mon = r["m" + key]
            if is_root or pidx is not None:
                P = None if is_root else nbrs[pidx][key]
                kids = [(u, x[key]) for u, x in zip(ctx.nbr_ids, nbrs)
                        if x["par"] == me and getattr(x["lab"], field_) == proot]
                if key == "T":
                    flag = top_flag(lab)
                else:
                    flag = bottom_flag(me, lab)
                hold = self.mode == "async" and self._holding(me, X["bc"], nbrs)
                try:
                    newX, arrivals, flushed = train_step(me, is_root, X, P, kids, flag, hold, out)
                except (TypeError, ValueError, IndexError, AttributeError, KeyError):
                    # garbage in the transient fields: start over from the stored pair
                    newX, arrivals, flushed = new_train(X.get("perm")), [], True
                s[key] = newX
                if flushed:
                    mon = (False,) + tuple(mon[1:])
                for rec in arrivals:
                    if self.probe is not None:
                        self.probe("arrive", t, me, (key, rec[0], rec[2]))
                mon, why = cycle_update(mon, levels, arrivals)
                bad = bad or why
            started, lst, age = mon
            if levels:
                age = min(age + 1, budget + 1)
                if age > budget:
                    bad = bad or "cycle-set:timeout"
            s["m" + key] = (started, lst, age)
        return bad

    def step(self, ctx, r, nbrs, t, out):
        s = dict(r)
        bad = self._structural(ctx, r, nbrs)
        if bad is None:
            bad = self._compare(ctx, r, nbrs, s, t, out)
        else:
            s["ask"], s["keep"] = None, None
        bad = self._trains(ctx, r, nbrs, s, t, out) or bad
        if bad is not None and not r["al"]:
            s["al"] = True
            out.alarm(bad)
        return s


# -- inputs ---------------------------------------------------------------------------

@dataclass
class Instance:
    g: WeightedGraph
    h: Hierarchy
    labels: dict
    parts: Partitions

    @property
    def parent(self) -> dict:
        return self.h.parent


def build_instance(g: WeightedGraph, tree=None) -> Instance:
    """Labels and stored pieces for the construction's tree, or for ``tree`` (an edge set)."""
    if tree is None:
        h = run_alg(g).hierarchy
    else:
        tg = from_edges(g.nodes, [(a, b, g.weight(a, b)) for a, b in tree])
        h = run_alg(tg).hierarchy
    parts = build_partitions(g, h)
    return Instance(g, h, mark_labels(g, h, parts), parts)


def setup_registers(inst: Instance) -> dict:
    out = {}
    for v in inst.g.nodes:
        out[v] = {"par": inst.parent[v], "lab": inst.labels[v],
                  "T": new_train(inst.parts.top_pieces[v]), "B": new_train(inst.parts.bottom_pieces[v]),
                  "ask": None, "cur": 0, "keep": None,
                  "mT": (False, -1, 0), "mB": (False, -1, 0), "al": False}
    return out


def run_verifier(inst: Instance, sched: Scheduler | None = None, faults=(), horizon: int = 1000, *,
                 setup: dict | None = None, probe=None, trace_level: str = "off",
                 measure: bool = False, budget_bits: int | None = None, until=None) -> Trace:
    sched = sched or Scheduler("sync")
    prog = VerifierProgram(setup or setup_registers(inst), sched.mode, sched.fairness, inst.g.n, probe)
    return run(inst.g, prog, sched, faults, horizon, trace_level=trace_level, measure=measure,
               budget_bits=budget_bits, until=until)


def log_sq(n: int) -> int:
    return max(1, ceil_log2(n)) ** 2


# -- corruption corpus -----------------------------------------------------------------

@dataclass
class Corruption:
    kind: str
    inst: Instance
    faults: list = field(default_factory=list)
    nodes: tuple = ()             # nodes where the corruption was planted

    @property
    def time(self) -> int:
        return max((f.time for f in self.faults), default=0)


CORPUS_KINDS = ("non-minimal", "non-tree", "roots", "endp", "parents", "piece", "erase",
                "part-root", "scramble")


def non_minimal_tree(g: WeightedGraph, rng: random.Random):
    """Swap one MST edge for a heavier non-tree edge that reconnects the two sides."""
    mst = set(kruskal_oracle(g))
    order = sorted(mst)
    rng.shuffle(order)
    for e in order:
        rest = mst - {e}
        side = set(orient_tree(g, rest, e[0]))
        cross = [edge_key(a, b) for a, b, _ in g.edges() if (a in side) != (b in side)]
        cross = [c for c in cross if c != e]
        if cross:
            return frozenset(rest | {rng.choice(cross)})
    return None


def _flip_symbol(s: str, alpha: str, rng: random.Random, only=None) -> str:
    idx = [i for i, c in enumerate(s) if c != "*"] if only is None else only
    i = rng.choice(idx)
    return s[:i] + rng.choice([c for c in alpha if c != s[i]]) + s[i + 1:]


def make_corruption(kind: str, g: WeightedGraph, seed: int, t0: int = 0, inst: Instance | None = None):
    """One corpus member; ``None`` when the graph offers no place for this kind."""
    rng = random.Random(f"corrupt:{kind}:{seed}")
    if kind == "non-minimal":
        tree = non_minimal_tree(g, rng)
        if tree is None:
            return None
        return Corruption(kind, build_instance(g, tree))
    inst = inst or build_instance(g)
    regs = setup_registers(inst)
    nodes = sorted(g.nodes)
    if kind == "non-tree":
        r = inst.h.root
        kids = [v for v in nodes if inst.parent[v] == r]
        if not kids:
            return None
        v = rng.choice(kids)
        return Corruption(kind, inst, [FaultEvent(t0, r, "set-register", "par", v)], (r,))
    if kind in ("roots", "endp", "parents"):
        v = rng.choice(nodes)
        lab = regs[v]["lab"]
        if kind == "roots":
            new = lab._replace(roots=_flip_symbol(lab.roots, "01*", rng, list(range(len(lab.roots)))))
        elif kind == "endp":
            new = lab._replace(endp=_flip_symbol(lab.endp, "udn", rng))
        else:
            new = lab._replace(parents=_flip_symbol(lab.parents, "01", rng, list(range(len(lab.parents)))))
        return Corruption(kind, inst, [FaultEvent(t0, v, "set-register", "lab", new)], (v,))
    holders = [(v, k) for v in nodes for k in ("T", "B") if regs[v][k]["perm"]]
    if kind == "piece":
        v, k = rng.choice(holders)
        pair = list(regs[v][k]["perm"])
        i = rng.randrange(len(pair))
        f = rng.choice(("root", "level", "weight"))
        old = pair[i]
        if f == "root":
            pair[i] = old._replace(root=rng.choice([x for x in nodes if x != old.root] or [old.root + 1]))
        elif f == "level":
            pair[i] = old._replace(level=rng.choice([x for x in range(len(regs[v]["lab"].roots) + 1)
                                                     if x != old.level]))
        else:
            pair[i] = old._replace(weight=old.weight + rng.choice((-1, 1)) * rng.randint(1, 5))
        return Corruption(kind, inst, [FaultEvent(t0, v, "set-register", f"{k}.perm", tuple(pair))],
                          (v,))
    if kind == "erase":
        v, k = rng.choice(holders)
        return Corruption(kind, inst, [FaultEvent(t0, v, "set-register", f"{k}.perm", None)], (v,))
    if kind == "part-root":
        v = rng.choice(nodes)
        lab = regs[v]["lab"]
        fld = rng.choice(("toproot", "botroot"))
        other = rng.choice([x for x in nodes if x != getattr(lab, fld)])
        return Corruption(kind, inst, [FaultEvent(t0, v, "set-register", "lab", lab._replace(**{fld: other}))],
                          (v,))
    if kind == "scramble":
        v, k = rng.choice(holders)
        while True:
            new = scramble(regs[v][k], rng)
            if new["perm"] != regs[v][k]["perm"]:
                break
        return Corruption(kind, inst, [FaultEvent(t0, v, "set-register", k, new)], (v,))
    raise ValueError(kind)


# -- measurement ---------------------------------------------------------------------

def alarm_events(trace: Trace) -> list:
    """(time, node, check) for alarms and register-budget violations, in time order."""
    out = [(t, v, d) for t, v, k, d in trace.events if k in ("alarm", "budget-violation")]
    return sorted(out)


def hops_from(g: WeightedGraph, sources) -> dict:
    dist = {v: 0 for v in sources}
    q = deque(sources)
    while q:
        x = q.popleft()
        for u in g.neighbors(x):
            if u not in dist:
                dist[u] = dist[x] + 1
                q.append(u)
    return dist


@dataclass
class Detection:
    time: int | None              # first alarm minus last fault, None if no alarm
    distance: int | None          # max over faulty nodes of hops to the nearest alarm
    alarmed: list                 # nodes that alarmed
    checks: dict                  # check -> count


def measure_detection(trace: Trace, g: WeightedGraph, fault_nodes, fault_time: int = 0,
                      window: int | None = None) -> Detection:
    alarms = [(t, v, c) for t, v, c in alarm_events(trace) if t >= fault_time]
    if not alarms:
        return Detection(None, None, [], {})
    first = alarms[0][0]
    if window is not None:
        alarms = [a for a in alarms if a[0] <= first + window]
    nodes = sorted({v for _, v, _ in alarms})
    checks: dict = {}
    for _, _, c in alarms:
        checks[c] = checks.get(c, 0) + 1
    dist = None
    if fault_nodes:
        near = hops_from(g, nodes)
        dist = max(near.get(x, g.n) for x in fault_nodes)
    return Detection(first - fault_time, dist, nodes, checks)


def fault_region(inst: Instance, fault_nodes) -> set:
    """Parts holding a fault node, then every part reached by one more edge."""
    parts = inst.parts
    core = set()
    for x in fault_nodes:
        core |= parts.part_of("Top", x) | parts.part_of("Bottom", x)
    region = set(core)
    for y in {u for x in core for u in inst.g.neighbors(x)} | core:
        region |= parts.part_of("Top", y) | parts.part_of("Bottom", y)
    return region


def compare_completion(inst: Instance, sched: Scheduler | None = None, t0: int = 50,
                       horizon: int | None = None) -> dict:
    """Per node: time after ``t0`` until E(v,u,j) has happened for every neighbour u and level j of v.

    Nodes that do not finish within the horizon map to None.
    """
    g = inst.g
    need = {v: {(u, j) for u in g.neighbors(v) for j, c in enumerate(inst.labels[v].roots) if c != "*"}
            for v in g.nodes}
    left = {v: set(x) for v, x in need.items()}
    done: dict = {v: None for v in g.nodes}

    def probe(kind, t, v, data):
        if kind == "E" and t >= t0 and done[v] is None:
            left[v].discard(data)
            if not left[v]:
                done[v] = t - t0

    L = ceil_log2(g.n) + 1
    horizon = horizon or t0 + 64 * L ** 3
    run_verifier(inst, sched, (), horizon, probe=probe,
                 until=lambda t, st: all(x is not None for x in done.values()))
    return done


def train_delivery(inst: Instance, sched: Scheduler | None = None, horizon: int = 400) -> list:
    """Latency of every complete train cycle, per part.

    A cycle starts when the part root broadcasts its first record and ends
    when the last part node holds the cycle's last record.  Returns
    (train, part root, part size, start, latency) rows.
    """
    seen: dict = {}

    def probe(kind, t, v, data):
        if kind == "arrive":
            seen.setdefault((data[0], v), []).append(t)

    firsts: dict = {}

    class _Marked(VerifierProgram):
        def _trains(self, ctx, r, nbrs, s, t, out):
            bad = super()._trains(ctx, r, nbrs, s, t, out)
            for key, _ in TRAIN_KEYS:
                bc = s[key]["bc"]
                if bc is not None and bc != r[key]["bc"] and bc[1]:
                    firsts.setdefault((key, ctx.id), []).append(t)
            return bad

    sched = sched or Scheduler("sync")
    prog = _Marked(setup_registers(inst), sched.mode, sched.fairness, inst.g.n, probe)
    run(inst.g, prog, sched, (), horizon, trace_level="off")
    rows = []
    for key, parts in (("T", inst.parts.top_parts), ("B", inst.parts.bottom_parts)):
        root_of = inst.parts.top_root if key == "T" else inst.parts.bottom_root
        for part in parts:
            root = root_of[next(iter(part))]
            starts = firsts.get((key, root), [])
            for k in range(len(starts) - 1):
                ends = []
                for v in part:
                    fv = firsts.get((key, v), [])
                    if len(fv) <= k + 1:
                        break
                    ends.append(max(t for t in seen[(key, v)] if t < fv[k + 1]))
                else:
                    rows.append((key, root, len(part), starts[k], max(ends) - starts[k]))
    return rows


# -- 1-round checker with every record at every node -------------------------------------

class OneRoundChecker:
    """Each node stores the records of all its fragments and checks every edge each round."""

    name = "one-round-checker"

    def __init__(self, setup: dict):
        self.setup = setup
        self._memo: dict = {}

    def init(self, ctx):
        return dict(self.setup[ctx.id])

    _structural = VerifierProgram._structural

    def _bad(self, ctx, r, nbrs):
        hit = self._structural(ctx, r, nbrs)
        if hit:
            return hit
        lab, inf, me = r["lab"], r["inf"], ctx.id
        ell = len(lab.roots) - 1
        if len(inf) != ell + 1:
            return "shape"
        for j in range(ell + 1):
            a = inf[j]
            if (a is None) != (lab.roots[j] == "*"):
                return "shape"
            if a is None:
                continue
            if a.level != j:
                return "level"
            if lab.roots[j] == "1" and a.root != me:
                return "root-id"
            if j == ell and a.weight != 0:
                return "C1"
            e = lab.endp[j]
            for idx, x in enumerate(nbrs):
                u = ctx.nbr_ids[idx]
                xi = x["inf"]
                b = xi[j] if len(xi) > j else None
                same = b is not None and b.root == a.root
                if u == r["par"]:
                    if (lab.roots[j] == "0") != same or (same and b != a):
                        return "parent-mismatch"
                if j < ell:
                    cand = (e == "u" and u == r["par"]) or \
                           (e == "d" and x["par"] == me and x["lab"].parents[j] == "1")
                    if cand:
                        if same or a.weight != ctx.weights[idx]:
                            return "C1"
                    elif not same and a.weight > ctx.weights[idx]:
                        return "C2"
        return None

    def step(self, ctx, r, nbrs, t, out):
        if r["al"]:
            return None
        try:
            bad = self._bad(ctx, r, nbrs)
        except (TypeError, ValueError, IndexError, AttributeError):
            bad = "malformed"
        if bad is None:
            return None
        out.alarm(bad)
        return {**r, "al": True}


def fragment_records(inst: Instance) -> dict:
    h, cls = inst.h, inst.parts.classes
    out = {}
    for v in inst.g.nodes:
        recs = []
        for j in range(h.height + 1):
            f = h.fragment_of(v, j)
            recs.append(None if f is None else info_of(h, cls, (j, h.top(f))))
        out[v] = tuple(recs)
    return out


def one_round_setup(inst: Instance) -> dict:
    recs = fragment_records(inst)
    return {v: {"par": inst.parent[v], "lab": inst.labels[v], "inf": recs[v], "al": False}
            for v in inst.g.nodes}


def one_round_corruption(kind: str, g: WeightedGraph, seed: int, t0: int = 0, inst: Instance | None = None):
    """The corpus mapped onto the 1-round checker's registers."""
    if kind in ("non-minimal", "non-tree", "roots", "endp", "parents"):
        return make_corruption(kind, g, seed, t0, inst)
    rng = random.Random(f"corrupt1:{kind}:{seed}")
    inst = inst or build_instance(g)
    regs = one_round_setup(inst)
    v = rng.choice(sorted(g.nodes))
    recs = list(regs[v]["inf"])
    j = rng.choice([i for i, x in enumerate(recs) if x is not None])
    if kind in ("piece", "scramble"):
        recs[j] = recs[j]._replace(weight=recs[j].weight + rng.randint(1, 5))
    elif kind == "erase":
        recs[j] = None
    else:
        return None
    return Corruption(kind, inst, [FaultEvent(t0, v, "set-register", "inf", tuple(recs))], (v,))


def run_one_round(inst: Instance, faults=(), horizon: int = 4, *, setup=None, measure: bool = False,
                  trace_level: str = "off") -> Trace:
    prog = OneRoundChecker(setup or one_round_setup(inst))
    return run(inst.g, prog, Scheduler("sync"), faults, horizon, trace_level=trace_level, measure=measure)


__all__ = ["VerifierProgram", "Instance", "build_instance", "setup_registers", "run_verifier",
           "Corruption", "CORPUS_KINDS", "make_corruption", "non_minimal_tree", "alarm_events",
           "measure_detection", "Detection", "fault_region", "OneRoundChecker", "one_round_setup",
           "one_round_corruption", "run_one_round", "fragment_records", "log_sq", "train_delivery",
           "compare_completion"]
