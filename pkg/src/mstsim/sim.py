"""Shared-register network simulator with synchronous and asynchronous schedulers.

A node program is an object with ``init(ctx)`` and ``step(ctx, regs, nbrs, t, out)``.
``regs`` is the node's register dict, ``nbrs`` the neighbours' register dicts in
port order.  ``step`` returns a new dict (registers are never mutated in place)
or ``None`` when nothing changes.
"""
from __future__ import annotations

import hashlib
import heapq
import os
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .errors import SimError
from .graph import WeightedGraph

TRACE_LEVELS = ("full", "milestones", "off")


def trace_level_from_env(default: str = "milestones") -> str:
    lvl = os.environ.get("MSTSIM_TRACE", default)
    if lvl not in TRACE_LEVELS:
        raise SimError("invalid-parameter", f"MSTSIM_TRACE={lvl!r}")
    return lvl


# -- bit accounting -----------------------------------------------------------

def bit_size(x: Any) -> int:
    """Bits needed to store a register value.

    ints cost their binary length, flags and empty slots one bit, symbol
    strings two bits per symbol, containers the sum of their parts.
    """
    t = type(x)
    if t is bool or x is None:
        return 1
    if t is int:
        return max(1, x.bit_length() + (x < 0))
    if t is str:
        return max(1, 2 * len(x))
    if t is dict:
        return sum(bit_size(v) for v in x.values())
    if isinstance(x, (tuple, list, frozenset)):
        return sum(bit_size(v) for v in x)
    if isinstance(x, int):
        return max(1, int(x).bit_length())
    raise TypeError(f"no bit accounting for {t.__name__}")


# -- configuration ------------------------------------------------------------

@dataclass
class Scheduler:
    mode: str = "sync"              # "sync" or "async"
    seed: int = 0
    fairness: int | None = None     # async window bound k; default 2n-1
    adversary: str | None = None    # None or "greedy-delay"
    starve: int | None = None       # node starved by the greedy-delay adversary
    full_steps: bool = False        # sync: step every node every round

    def __post_init__(self):
        if self.mode not in ("sync", "async"):
            raise SimError("invalid-parameter", f"scheduler mode {self.mode!r}")
        if self.adversary not in (None, "greedy-delay"):
            raise SimError("invalid-parameter", f"adversary {self.adversary!r}")


@dataclass(frozen=True)
class FaultEvent:
    time: int
    node: int
    kind: str                      # randomize-registers | set-register | flip-bits
    register: str | None = None
    value: Any = None
    count: int = 1

    def __post_init__(self):
        if self.kind not in ("randomize-registers", "set-register", "flip-bits"):
            raise SimError("invalid-fault", f"unknown fault kind {self.kind!r}")


class NodeCtx:
    """Static per-node knowledge: own id and the port table."""

    __slots__ = ("id", "ports", "nbr_ids", "weights", "deg", "index_of")

    def __init__(self, g: WeightedGraph, v: int):
        self.id = v
        lst = g.adj[v]
        self.ports = [p for p, _, _ in lst]
        self.nbr_ids = [u for _, u, _ in lst]
        self.weights = [w for _, _, w in lst]
        self.deg = len(lst)
        self.index_of = {u: i for i, u in enumerate(self.nbr_ids)}


# -- trace --------------------------------------------------------------------

@dataclass
class Trace:
    events: list = field(default_factory=list)     # (time, node, kind, detail)
    final: dict = field(default_factory=dict)
    time: int = 0                                   # rounds or ideal time units
    steps: int = 0
    peak_bits: int = 0
    peak_by_node: dict = field(default_factory=dict)
    peak_reg: dict = field(default_factory=dict)    # register name -> peak bits
    stopped: str = "horizon"

    def lines(self) -> list[str]:
        return [f"t={t} node={v} event={k} detail={d}" for t, v, k, d in self.events]

    def digest(self) -> str:
        h = hashlib.sha256()
        for line in self.lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()

    def of_kind(self, kind: str) -> list:
        return [e for e in self.events if e[2] == kind]

    def alarms(self) -> list[tuple[int, int, str]]:
        return [(t, v, d) for t, v, k, d in self.events if k == "alarm"]


def measure_memory(trace: Trace) -> int:
    return trace.peak_bits


class Out:
    """Per-run event sink handed to node steps."""

    __slots__ = ("on", "full", "events", "node", "t", "wakes", "alarmed")

    def __init__(self, level: str):
        self.on = level != "off"
        self.full = level == "full"
        self.events: list = []
        self.node = 0
        self.t = 0
        self.wakes: list = []
        self.alarmed: list = []

    def emit(self, kind: str, detail: str = "") -> None:
        self.events.append((self.t, self.node, kind, detail))

    def alarm(self, check: str) -> None:
        self.events.append((self.t, self.node, "alarm", check))
        self.alarmed.append((self.t, self.node, check))

    def wake(self, at: int) -> None:
        self.wakes.append((at, self.node))


# -- faults -------------------------------------------------------------------

_ALPHABETS = ("01*", "udn*", "012")


def _other_symbol(ch: str, rng: random.Random) -> str:
    for alpha in _ALPHABETS:
        if ch in alpha:
            return rng.choice([c for c in alpha if c != ch])
    return ch


def scramble(value: Any, rng: random.Random) -> Any:
    """A random value shaped like ``value``."""
    if value is None:
        return None
    if isinstance(value, bool):
        return rng.random() < 0.5
    if isinstance(value, int):
        return rng.randrange(0, 1 << (max(1, value.bit_length()) + 1))
    if isinstance(value, str):
        alpha = next((a for a in _ALPHABETS if value and all(c in a for c in value)), "01*")
        return "".join(rng.choice(alpha) for _ in value)
    if isinstance(value, tuple):
        parts = [scramble(x, rng) for x in value]
        return type(value)(*parts) if hasattr(value, "_fields") else tuple(parts)
    if isinstance(value, dict):
        return {k: scramble(x, rng) for k, x in value.items()}
    return value


def _leaves(value: Any, path=()):
    if isinstance(value, (bool, int, str)) and value is not None:
        yield path, value
    elif isinstance(value, tuple):
        for i, x in enumerate(value):
            yield from _leaves(x, path + (i,))


def _replace_at(value: Any, path, new):
    if not path:
        return new
    i = path[0]
    parts = list(value)
    parts[i] = _replace_at(parts[i], path[1:], new)
    return type(value)(*parts) if hasattr(value, "_fields") else tuple(parts)


def flip_bits(regs: dict, count: int, rng: random.Random) -> dict:
    regs = dict(regs)
    for _ in range(count):
        leaves = [(k, p, x) for k in sorted(regs) for p, x in _leaves(regs[k])]
        if not leaves:
            break
        k, p, x = rng.choice(leaves)
        if isinstance(x, bool):
            new = not x
        elif isinstance(x, int):
            new = x ^ (1 << rng.randrange(max(1, x.bit_length()) + 1))
        else:
            if not x:
                continue
            j = rng.randrange(len(x))
            new = x[:j] + _other_symbol(x[j], rng) + x[j + 1:]
        regs[k] = _replace_at(regs[k], p, new)
    return regs


def _set_register(regs: dict, name: str, value: Any) -> dict:
    head, _, rest = name.partition(".")
    if head not in regs:
        raise SimError("invalid-fault", f"unknown register {name!r}")
    regs = dict(regs)
    if not rest:
        regs[head] = value
        return regs
    cur = regs[head]
    if isinstance(cur, dict) and rest in cur:
        regs[head] = {**cur, rest: value}
    elif hasattr(cur, "_fields") and rest in cur._fields:
        regs[head] = cur._replace(**{rest: value})
    elif isinstance(cur, tuple) and rest.isdigit() and int(rest) < len(cur):
        regs[head] = _replace_at(cur, (int(rest),), value)
    else:
        raise SimError("invalid-fault", f"unknown register {name!r}")
    return regs


def inject(program, ctx: NodeCtx, regs: dict, fault: FaultEvent, rng: random.Random) -> dict:
    """Apply one fault to a node's registers."""
    if fault.kind == "set-register":
        return _set_register(regs, fault.register, fault.value)
    if fault.kind == "flip-bits":
        return flip_bits(regs, fault.count, rng)
    if fault.register is not None:
        if fault.register not in regs:
            raise SimError("invalid-fault", f"unknown register {fault.register!r}")
        return {**regs, fault.register: scramble(regs[fault.register], rng)}
    custom = getattr(program, "randomize", None)
    if custom is not None:
        return custom(ctx, regs, rng)
    return scramble(regs, rng)


# -- the run loop -------------------------------------------------------------

def run(g: WeightedGraph, program, sched: Scheduler | None = None,
        faults: Iterable[FaultEvent] = (), horizon: int = 1000, *,
        trace_level: str | None = None, initial: dict | None = None,
        measure: bool = False, budget_bits: int | None = None,
        until: Callable[[int, dict], bool] | None = None,
        on_round: Callable[[int, dict, list], None] | None = None,
        fault_seed: int = 0) -> Trace:
    """Execute ``program`` on every node of ``g`` up to ``horizon``.

    The horizon counts rounds (sync) or ideal time units (async).  ``until``
    is evaluated after every round / time unit and stops the run when true.
    """
    if horizon < 1:
        raise SimError("invalid-parameter", "horizon must be >= 1")
    sched = sched or Scheduler()
    level = trace_level or trace_level_from_env()
    ctxs = {v: NodeCtx(g, v) for v in g.nodes}
    states = dict(initial) if initial is not None else {v: program.init(ctxs[v]) for v in g.nodes}
    pending = sorted(faults, key=lambda f: (f.time, f.node))
    for f in pending:
        if f.node not in ctxs:
            raise SimError("invalid-fault", f"unknown node {f.node}")
    r = _Runner(g, program, sched, ctxs, states, pending, level, measure, budget_bits, fault_seed)
    bind = getattr(program, "bind", None)
    if bind is not None:
        # harness-level services may read the live register table
        bind(r.states)
    if sched.mode == "sync":
        r.run_sync(horizon, until, on_round)
    else:
        r.run_async(horizon, until, on_round)
    tr = r.trace
    tr.final = r.states
    return tr


class _Runner:
    def __init__(self, g, program, sched, ctxs, states, faults, level, measure, budget, fault_seed):
        self.g = g
        self.program = program
        self.sched = sched
        self.ctxs = ctxs
        self.states = states
        self.faults = faults
        self.fi = 0
        self.out = Out(level)
        self.trace = Trace(events=self.out.events)
        self.measure = measure or budget is not None
        self.budget = budget
        self.over_budget: set = set()
        self.fault_rng = random.Random(f"faults:{fault_seed}:{sched.seed}")
        self.order = sorted(g.nodes)
        self.nbr_ids = {v: ctxs[v].nbr_ids for v in self.order}
        if self.measure:
            for v in self.order:
                self._account(v, states[v])

    def _account(self, v, regs):
        b = bit_size(regs)
        tr = self.trace
        if b > tr.peak_by_node.get(v, -1):
            tr.peak_by_node[v] = b
            if b > tr.peak_bits:
                tr.peak_bits = b
        pr = tr.peak_reg
        for k, x in regs.items():
            s = bit_size(x)
            if s > pr.get(k, 0):
                pr[k] = s
        if self.budget is not None and b > self.budget and v not in self.over_budget:
            self.over_budget.add(v)
            self.out.events.append((self.out.t, v, "budget-violation", f"bits={b}"))

    def _write(self, v, old, new):
        if self.out.full:
            changed = sorted(k for k in set(old) | set(new) if old.get(k, None) != new.get(k, None))
            detail = ",".join(f"{k}={new.get(k)!r}" for k in changed)
            self.out.events.append((self.out.t, v, "write", detail))
        if self.measure:
            self._account(v, new)

    def _apply_faults(self, now) -> list[int]:
        touched = []
        while self.fi < len(self.faults) and self.faults[self.fi].time <= now:
            f = self.faults[self.fi]
            self.fi += 1
            old = self.states[f.node]
            new = inject(self.program, self.ctxs[f.node], old, f, self.fault_rng)
            self.states[f.node] = new
            detail = f.kind if f.register is None else f"{f.kind}:{f.register}"
            self.out.events.append((now, f.node, "fault", detail))
            self._write(f.node, old, new)
            touched.append(f.node)
        return touched

    def run_sync(self, horizon, until, on_round):
        prog, states, out, ctxs = self.program, self.states, self.out, self.ctxs
        event_driven = getattr(prog, "event_driven", False) and not self.sched.full_steps
        active = set(self.order)
        wake_heap: list = []
        t = 0
        for t in range(1, horizon + 1):
            out.t = t
            for v in self._apply_faults(t):
                active.add(v)
                active.update(self.nbr_ids[v])
            if event_driven:
                while wake_heap and wake_heap[0][0] <= t:
                    active.add(heapq.heappop(wake_heap)[1])
                todo = sorted(active)
                if not todo and not wake_heap:
                    self.trace.stopped = "quiescent"
                    t -= 1
                    break
                if not todo:
                    continue
            else:
                todo = self.order
            n_ev = len(out.events)
            changed = []
            for v in todo:
                out.node = v
                regs = states[v]
                new = prog.step(ctxs[v], regs, [states[u] for u in self.nbr_ids[v]], t, out)
                if new is not None and new is not regs and new != regs:
                    changed.append((v, regs, new))
            self.trace.steps += len(todo)
            if out.wakes:
                for item in out.wakes:
                    heapq.heappush(wake_heap, item)
                out.wakes.clear()
            active = set()
            for v, old, new in changed:
                states[v] = new
                self._write(v, old, new)
                active.add(v)
                active.update(self.nbr_ids[v])
            if on_round is not None:
                on_round(t, states, out.events[n_ev:])
            if until is not None and until(t, states):
                self.trace.stopped = "until"
                break
        self.trace.time = t

    def _sweeps(self):
        """Yield activation sweeps; every sweep contains every node."""
        n = len(self.order)
        k = self.sched.fairness if self.sched.fairness is not None else 2 * n - 1
        if k < n:
            raise SimError("invalid-parameter", f"fairness k={k} below n={n}")
        length = max(n, (k + 1) // 2)
        rng = random.Random(f"sched:{self.sched.seed}")
        if k < 2 * n - 1:
            # windows shorter than two sweeps need a repeated fixed order
            fixed = self.order[:]
            rng.shuffle(fixed)
            while True:
                yield fixed
        starve = self.sched.starve if self.sched.starve is not None else self.order[0]
        others = [v for v in self.order if v != starve]
        s = 0
        while True:
            if self.sched.adversary == "greedy-delay":
                body = others[:]
                rng.shuffle(body)
                body += [rng.choice(others) for _ in range(length - n)] if others else []
                yield ([starve] + body) if s % 2 else (body + [starve])
            else:
                body = self.order[:]
                body += [rng.choice(self.order) for _ in range(length - n)]
                rng.shuffle(body)
                yield body
            s += 1

    def run_async(self, horizon, until, on_round):
        prog, states, out, ctxs = self.program, self.states, self.out, self.ctxs
        n = len(self.order)
        unit = 1
        seen: set = set()
        out.t = unit
        self._apply_faults(unit)
        n_ev = 0
        done = False
        for sweep in self._sweeps():
            for v in sweep:
                out.node = v
                regs = states[v]
                new = prog.step(ctxs[v], regs, [states[u] for u in self.nbr_ids[v]], unit, out)
                self.trace.steps += 1
                if new is not None and new is not regs and new != regs:
                    states[v] = new
                    self._write(v, regs, new)
                out.wakes.clear()
                seen.add(v)
                if len(seen) == n:
                    seen = set()
                    if on_round is not None:
                        on_round(unit, states, out.events[n_ev:])
                        n_ev = len(out.events)
                    if until is not None and until(unit, states):
                        self.trace.stopped = "until"
                        done = True
                        break
                    if unit >= horizon:
                        done = True
                        break
                    unit += 1
                    out.t = unit
                    self._apply_faults(unit)
            if done:
                break
        self.trace.time = unit
