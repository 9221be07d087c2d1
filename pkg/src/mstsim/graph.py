"""Weighted port-numbered graphs, generators, weight perturbation and MST oracles."""
from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import SimError

Edge = tuple[int, int]  # (smaller id, larger id)


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with node ids and per-node port maps.

    ``adj[v]`` is a tuple of ``(port, neighbour, weight)`` sorted by port.
    ``ids`` keeps the node declaration order (and any duplicates, so that
    validation can report them).
    """

    ids: tuple[int, ...]
    adj: Mapping[int, tuple[tuple[int, int, int], ...]]
    _port_of: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        table = {}
        for v, lst in self.adj.items():
            for p, u, w in lst:
                table[(v, u)] = (p, w)
        object.__setattr__(self, "_port_of", table)

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.ids)))

    @property
    def n(self) -> int:
        return len(set(self.ids))

    @property
    def m(self) -> int:
        return sum(len(lst) for lst in self.adj.values()) // 2

    def edges(self) -> list[tuple[int, int, int]]:
        out = []
        for v, lst in self.adj.items():
            for _, u, w in lst:
                if v < u:
                    out.append((v, u, w))
        out.sort()
        return out

    def weight(self, u: int, v: int) -> int:
        return self._port_of[(u, v)][1]

    def _scan(self, v, port):
        for item in self.adj[v]:
            if item[0] == port:
                return item
        raise SimError("invalid-parameter", f"node {v} has no port {port}")

    def port(self, u: int, v: int) -> int:
        """Port at ``u`` leading to ``v``."""
        return self._port_of[(u, v)][0]

    def neighbor(self, v: int, port: int) -> int:
        lst = self.adj[v]
        if 0 < port <= len(lst) and lst[port - 1][0] == port:
            return lst[port - 1][1]
        return self._scan(v, port)[1]

    def neighbors(self, v: int) -> list[int]:
        return [u for _, u, _ in self.adj[v]]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._port_of

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    @property
    def max_degree(self) -> int:
        return max((len(lst) for lst in self.adj.values()), default=0)

    def with_weights(self, new_w: Mapping[Edge, int]) -> "WeightedGraph":
        adj = {v: tuple((p, u, new_w[edge_key(v, u)]) for p, u, _ in lst)
               for v, lst in self.adj.items()}
        return WeightedGraph(self.ids, adj)


def from_edges(ids: Iterable[int], edges: Iterable[tuple[int, int, int]]) -> WeightedGraph:
    """Build a graph assigning ports 1..deg in the order edges are listed."""
    ids = tuple(ids)
    adj: dict[int, list] = {v: [] for v in ids}
    for u, v, w in edges:
        adj[u].append((len(adj[u]) + 1, v, w))
        adj[v].append((len(adj[v]) + 1, u, w))
    return WeightedGraph(ids, {v: tuple(lst) for v, lst in adj.items()})


# -- generators ---------------------------------------------------------------

GRAPH_KINDS = ("random-connected", "path", "star", "grid", "complete")


def _shape(kind: str, n: int, rng: random.Random) -> list[tuple[int, int]]:
    """Edges over indices 0..n-1 for the requested shape."""
    if kind == "path":
        return [(i, i + 1) for i in range(n - 1)]
    if kind == "star":
        return [(0, i) for i in range(1, n)]
    if kind == "complete":
        return list(itertools.combinations(range(n), 2))
    if kind == "grid":
        cols = max(1, int(round(n ** 0.5)))
        pairs = []
        for i in range(n):
            r, c = divmod(i, cols)
            if c + 1 < cols and i + 1 < n:
                pairs.append((i, i + 1))
            if i + cols < n:
                pairs.append((i, i + cols))
        return pairs
    if kind in ("random-connected", "random"):
        pairs = [(rng.randrange(i), i) for i in range(1, n)]
        present = set(pairs)
        possible = n * (n - 1) // 2
        extra = min(n, possible - len(pairs))
        while extra > 0:
            a, b = rng.sample(range(n), 2)
            e = (min(a, b), max(a, b))
            if e not in present:
                present.add(e)
                pairs.append(e)
                extra -= 1
        rng.shuffle(pairs)
        return pairs
    raise SimError("invalid-parameter", f"unknown graph kind {kind!r}")


def generate_graph(kind: str, n: int, seed: int = 0, weight_range: int | None = None) -> WeightedGraph:
    """Random instance of the given shape.

    Ids come from [1, n^2] without replacement.  Weights are distinct draws
    from [1, n^3] unless ``weight_range`` is given, in which case they are
    drawn with replacement from [1, weight_range] (useful to plant ties).
    """
    if n < 1:
        raise SimError("invalid-parameter", "n must be >= 1")
    rng = random.Random(f"{kind}:{n}:{seed}")
    ids = rng.sample(range(1, n * n + 1), n) if n > 1 else [1]
    pairs = _shape(kind, n, rng)
    if weight_range is None:
        weights = rng.sample(range(1, max(n ** 3, len(pairs)) + 1), len(pairs))
    else:
        weights = [rng.randint(1, weight_range) for _ in pairs]
    return from_edges(ids, [(ids[a], ids[b], w) for (a, b), w in zip(pairs, weights)])


def parse_graph_spec(text: str) -> WeightedGraph:
    """Parse ``kind:n=64:seed=7`` (``random`` is short for random-connected)."""
    head, *opts = text.split(":")
    kw = {}
    for o in opts:
        k, _, v = o.partition("=")
        if not v:
            raise SimError("parse-error", f"bad option {o!r} in {text!r}")
        kw[k] = int(v)
    kind = "random-connected" if head == "random" else head
    if kind not in GRAPH_KINDS or "n" not in kw:
        raise SimError("parse-error", f"bad graph spec {text!r}")
    return generate_graph(kind, kw["n"], kw.get("seed", 0), kw.get("wrange"))


# -- validation ---------------------------------------------------------------

def validate_graph(g: WeightedGraph) -> list[str]:
    """Empty list when the graph is well formed, else the violations found."""
    bad = []
    if len(set(g.ids)) != len(g.ids):
        bad.append("duplicate id")
    for v, lst in g.adj.items():
        ports = [p for p, _, _ in lst]
        if len(set(ports)) != len(ports) or any(p < 1 for p in ports):
            bad.append(f"port: node {v}")
        for p, u, w in lst:
            back = [x for x in g.adj.get(u, ()) if x[1] == v]
            if len(back) != 1 or back[0][2] != w:
                bad.append(f"asymmetric: edge {v}-{u}")
    ws = [w for _, _, w in g.edges()]
    if len(set(ws)) != len(ws):
        bad.append("weight tie")
    if g.adj and not is_connected(g):
        bad.append("disconnected")
    return bad


def is_connected(g: WeightedGraph) -> bool:
    nodes = list(g.adj)
    if not nodes:
        return True
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        v = stack.pop()
        for u in g.neighbors(v):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(nodes)


# -- component maps -----------------------------------------------------------

ComponentMap = dict  # node id -> parent port, or None for "root"


def comp_from_parents(g: WeightedGraph, parent: Mapping[int, int | None]) -> ComponentMap:
    return {v: (None if parent[v] is None else g.port(v, parent[v])) for v in g.nodes}


def parents_from_comp(g: WeightedGraph, comp: Mapping[int, int | None]) -> dict[int, int | None]:
    return {v: (None if comp[v] is None else g.neighbor(v, comp[v])) for v in g.nodes}


def comp_edges(g: WeightedGraph, comp: Mapping[int, int | None]) -> frozenset[Edge]:
    """Edges of H(G): an edge is in iff at least one endpoint links to the other."""
    return frozenset(edge_key(v, g.neighbor(v, p)) for v, p in comp.items() if p is not None)


def is_spanning_tree(g: WeightedGraph, comp: Mapping[int, int | None]) -> bool:
    par = parents_from_comp(g, comp)
    roots = [v for v in par if par[v] is None]
    if len(roots) != 1:
        return False
    for v in par:
        seen = set()
        x = v
        while par[x] is not None:
            if x in seen:
                return False
            seen.add(x)
            x = par[x]
    return True


def orient_tree(g: WeightedGraph, edges: Iterable[Edge], root: int) -> dict[int, int | None]:
    """Parent map of the tree with the given edge set, rooted at ``root``."""
    nb: dict[int, list[int]] = {v: [] for v in g.nodes}
    for a, b in edges:
        nb[a].append(b)
        nb[b].append(a)
    parent = {root: None}
    stack = [root]
    while stack:
        v = stack.pop()
        for u in nb[v]:
            if u not in parent:
                parent[u] = v
                stack.append(u)
    return parent


# -- weight perturbation ------------------------------------------------------

def perturb_weights(g: WeightedGraph, tree: Mapping[int, int | None] | Iterable[Edge]) -> WeightedGraph:
    """Break ties by packing (w, 1-Y, id_min, id_max) into one integer key.

    ``tree`` is either a component map or an edge set; Y marks its edges.
    """
    if isinstance(tree, Mapping):
        marked = comp_edges(g, tree)
    else:
        marked = frozenset(edge_key(a, b) for a, b in tree)
    base = max(g.nodes) + 1
    new_w = {}
    for u, v, w in g.edges():
        y = 1 if (u, v) in marked else 0
        new_w[(u, v)] = ((w * 2 + (1 - y)) * base + u) * base + v
    return g.with_weights(new_w)


# -- oracles ------------------------------------------------------------------

class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def kruskal_oracle(g: WeightedGraph) -> frozenset[Edge]:
    if not is_connected(g):
        raise SimError("no-spanning-tree", "graph is disconnected")
    uf = _UnionFind(g.nodes)
    out = set()
    for u, v, w in sorted(g.edges(), key=lambda e: (e[2], e[0], e[1])):
        if uf.union(u, v):
            out.add((u, v))
    return frozenset(out)


def prim_oracle(g: WeightedGraph) -> frozenset[Edge]:
    if not is_connected(g):
        raise SimError("no-spanning-tree", "graph is disconnected")
    start = g.nodes[0]
    seen = {start}
    heap = [(w, start, u) for _, u, w in g.adj[start]]
    heapq.heapify(heap)
    out = set()
    while heap and len(seen) < g.n:
        w, a, b = heapq.heappop(heap)
        if b in seen:
            continue
        seen.add(b)
        out.add(edge_key(a, b))
        for _, u, wu in g.adj[b]:
            if u not in seen:
                heapq.heappush(heap, (wu, b, u))
    return frozenset(out)


def tree_weight(g: WeightedGraph, edges: Iterable[Edge]) -> int:
    return sum(g.weight(a, b) for a, b in edges)


# -- file formats -------------------------------------------------------------

def format_graph(g: WeightedGraph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"node {v}" for v in g.ids]
    for v in g.ids:
        for p, u, w in g.adj[v]:
            if v < u:
                lines.append(f"edge {v} {p} {u} {g.port(u, v)} {w}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> WeightedGraph:
    """Parse the line format; raises SimError('parse-error') with a line number."""
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, t) for i, t in lines if t and not t[0].startswith("#")]
    if not lines:
        raise SimError("parse-error", "empty graph file")
    ln, head = lines[0]
    try:
        n, m = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise SimError("parse-error", f"line {ln}: expected header 'n m'") from None
    ids: list[int] = []
    raw: dict[int, list] = {}
    count = 0
    for ln, tok in lines[1:]:
        try:
            if tok[0] == "node" and len(tok) == 2:
                v = int(tok[1])
                ids.append(v)
                raw.setdefault(v, [])
            elif tok[0] == "edge" and len(tok) == 6:
                a, pa, b, pb, w = map(int, tok[1:])
                if a not in raw or b not in raw:
                    raise SimError("parse-error", f"line {ln}: edge references unknown node")
                raw[a].append((pa, b, w))
                raw[b].append((pb, a, w))
                count += 1
            elif tok[0] == "comp":
                continue
            else:
                raise SimError("parse-error", f"line {ln}: unrecognised line")
        except ValueError:
            raise SimError("parse-error", f"line {ln}: bad integer") from None
    if len(set(ids)) != n or count != m:
        raise SimError("parse-error", f"header says {n} nodes/{m} edges, found {len(set(ids))}/{count}")
    return WeightedGraph(tuple(ids), {v: tuple(sorted(lst)) for v, lst in raw.items()})


def format_components(comp: Mapping[int, int | None]) -> str:
    return "".join(f"comp {v} {'root' if p is None else p}\n" for v, p in sorted(comp.items()))


def parse_components(text: str) -> ComponentMap:
    comp = {}
    for ln, line in enumerate(text.splitlines(), 1):
        tok = line.split()
        if not tok or tok[0] != "comp":
            continue
        if len(tok) != 3:
            raise SimError("parse-error", f"line {ln}: expected 'comp <id> <port|root>'")
        try:
            comp[int(tok[1])] = None if tok[2] == "root" else int(tok[2])
        except ValueError:
            raise SimError("parse-error", f"line {ln}: bad integer") from None
    return comp
