"""Top and Bottom partitions of the tree and where fragment records are stored.

A fragment is *top* when it has at least log2(n) nodes.  Top fragments form an
upward-closed subtree of the hierarchy; its leaves are *red*, its internal
fragments *large*, the non-top children of large fragments *blue* and the
children of red fragments *green*.  Red and blue fragments cover every node
exactly once.

* Top parts: every red fragment absorbs touching blue siblings (processed
  bottom-up, smallest root id first), then each resulting part is cut into
  connected pieces of at least ceil(log2 n) nodes.
* Bottom parts: the blue fragments and the green fragments.

Each part keeps the records ``Info = (root id, level, weight of chosen edge)``
of the fragments it serves, paired two per node in DFS preorder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import SimError
from .labels import ceil_log2


class Info(NamedTuple):
    root: int
    level: int
    weight: int


FKey = tuple  # (level, top node)


def threshold(n: int) -> float:
    return math.log2(n) if n > 1 else 0.0


def part_size_floor(n: int) -> int:
    return max(1, ceil_log2(n))


@dataclass
class Classes:
    top: dict                      # FKey -> bool
    color: dict                    # FKey -> red | blue | large | green | none
    members: dict                  # FKey -> frozenset
    parent: dict                   # FKey -> FKey | None
    children: dict                 # FKey -> [FKey]

    def of_color(self, c: str) -> list:
        return sorted((k for k, col in self.color.items() if col == c), key=lambda k: (k[0], k[1]))


def fragment_tree(h) -> tuple[dict, dict, dict]:
    """Members, parent and children of every fragment, keyed by (level, top node)."""
    members = {}
    for f in h.fragments:
        members[(f.level, h.top(f))] = f.members
    parent: dict = {}
    index = {}
    for k in sorted(members, key=lambda k: k[0]):
        for v in members[k]:
            index.setdefault(v, []).append(k)
    for k in members:
        up = [x for x in index[next(iter(members[k]))] if x[0] > k[0] and members[k] <= members[x]]
        parent[k] = min(up, key=lambda x: x[0]) if up else None
    children: dict = {k: [] for k in members}
    for k, p in parent.items():
        if p is not None:
            children[p].append(k)
    for k in children:
        children[k].sort()
    return members, parent, children


def classify_fragments(h, n: int) -> Classes:
    members, parent, children = fragment_tree(h)
    lim = threshold(n)
    top = {k: len(m) >= lim for k, m in members.items()}
    color = {}
    for k in members:
        if top[k]:
            color[k] = "large" if any(top[c] for c in children[k]) else "red"
        else:
            p = parent[k]
            if p is not None and top[p]:
                color[k] = "blue" if any(top[c] for c in children[p]) else "green"
            else:
                color[k] = "none"
    return Classes(top, color, members, parent, children)


# -- Top -----------------------------------------------------------------------

def _part_root(part, tparent):
    for v in part:
        p = tparent[v]
        if p is None or p not in part:
            return v
    raise SimError("invalid-hierarchy", "part without a root")


def build_pp(h, cls: Classes) -> list[frozenset]:
    """Red fragments absorb the blue ones; each part keeps exactly one red fragment."""
    tparent = h.parent
    parts = {k: set(cls.members[k]) for k in cls.of_color("red")}
    owner = {}
    for k, m in parts.items():
        for v in m:
            owner[v] = k
    for big in sorted((k for k, c in cls.color.items() if c == "large"), key=lambda k: (k[0], k[1])):
        todo = [c for c in cls.children[big] if cls.color[c] == "blue"]
        while todo:
            progress = False
            for b in sorted(todo, key=lambda k: k[1]):
                bm = cls.members[b]
                near = set()
                for v in bm:
                    for x in ([tparent[v]] if tparent[v] is not None else []):
                        if x not in bm and x in owner and x in cls.members[big]:
                            near.add(owner[x])
                for x, p in tparent.items():
                    if p in bm and x not in bm and x in owner and x in cls.members[big]:
                        near.add(owner[x])
                if not near:
                    continue
                tgt = min(near, key=lambda k: _part_root(parts[k], tparent))
                parts[tgt] |= bm
                for v in bm:
                    owner[v] = tgt
                todo.remove(b)
                progress = True
                break
            if not progress:
                raise SimError("structural-impossibility", f"blue fragments under {big} touch no part")
    return [frozenset(m) for m in parts.values()]


def split_top(part: frozenset, tparent: dict, k: int) -> list[frozenset]:
    """Cut a part into connected pieces of at least k nodes, bottom-up.

    A node closes a piece as soon as it and its still-unassigned descendants
    number at least k.  Leftover nodes at the top join the piece of the
    adjacent closed child with the smallest root id.
    """
    root = _part_root(part, tparent)
    kids = {v: [] for v in part}
    for v in part:
        if v != root:
            kids[tparent[v]].append(v)
    order, stack = [], [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(kids[v])
    rem: dict = {}
    cut_at: dict = {}              # piece root -> nodes
    for v in reversed(order):
        nodes = [v]
        for c in kids[v]:
            if c not in cut_at:
                nodes += rem[c]
        if len(nodes) >= k and v != root:
            cut_at[v] = nodes
        else:
            rem[v] = nodes
    if root not in cut_at:
        left = rem[root]
        if len(left) >= k or not cut_at:
            cut_at[root] = left
        else:
            lset = set(left)
            adj = sorted(c for c in cut_at if tparent[c] in lset)
            cut_at[adj[0]] = left + cut_at.pop(adj[0])
    return [frozenset(m) for m in cut_at.values()]


# -- Bottom --------------------------------------------------------------------

def build_bottom(h, cls: Classes) -> list[frozenset]:
    parts = [cls.members[k] for k in cls.of_color("blue")]
    parts += [cls.members[k] for k in cls.of_color("green")]
    for k in cls.of_color("red"):
        if len(cls.members[k]) == 1:
            parts.append(cls.members[k])       # only when singletons already count as top
    return parts


# -- storage -------------------------------------------------------------------

def info_of(h, cls: Classes, key) -> Info:
    j, top = key
    f = h.fragment_of(top, j)
    return Info(top, j, 0 if f.weight is None else f.weight)


def dfs_preorder(part: frozenset, tparent: dict, g) -> list:
    """Preorder of a part's nodes, children visited in port order."""
    root = _part_root(part, tparent)
    out, stack = [], [root]
    while stack:
        v = stack.pop()
        out.append(v)
        kids = [u for _, u, _ in g.adj[v] if u in part and tparent.get(u) == v]
        stack.extend(reversed(kids))
    return out


def place_pieces(infos: list[Info], order: list) -> dict:
    """Pair records (sorted by level, then root id) and give pair i to the i-th node."""
    infos = sorted(infos, key=lambda x: (x.level, x.root))
    pairs = [tuple(infos[i:i + 2]) for i in range(0, len(infos), 2)]
    if len(pairs) > len(order):
        raise SimError("capacity-violation", f"{len(infos)} records for {len(order)} nodes")
    return {v: (pairs[i] if i < len(pairs) else None) for i, v in enumerate(order)}


@dataclass
class Partitions:
    n: int
    top_parts: list
    bottom_parts: list
    top_root: dict                   # node -> root of its Top part
    bottom_root: dict
    jdelim: dict                     # node -> first level whose fragment is top
    top_pieces: dict                 # node -> pair of Info or None
    bottom_pieces: dict
    top_infos: dict = field(default_factory=dict)      # part root -> [Info]
    bottom_infos: dict = field(default_factory=dict)
    classes: Classes | None = None
    red_of: dict = field(default_factory=dict)          # Top part root -> red FKey

    def part_of(self, kind: str, v: int) -> frozenset:
        parts = self.top_parts if kind == "Top" else self.bottom_parts
        return next(p for p in parts if v in p)


def build_partitions(g, h, events: list | None = None) -> Partitions:
    n = g.n
    cls = classify_fragments(h, n)
    tparent = h.parent
    k = part_size_floor(n)
    pp = build_pp(h, cls)
    red_in = {}
    for part in pp:
        red_in[part] = next(r for r in cls.of_color("red") if cls.members[r] <= part)
    top_parts, red_of = [], {}
    for part in pp:
        for piece in split_top(part, tparent, k):
            top_parts.append(piece)
            red_of[_part_root(piece, tparent)] = red_in[part]
    bottom_parts = build_bottom(h, cls)

    top_root = {}
    for p in top_parts:
        r = _part_root(p, tparent)
        for v in p:
            top_root[v] = r
    bottom_root = {}
    for p in bottom_parts:
        r = _part_root(p, tparent)
        for v in p:
            bottom_root[v] = r

    top_infos, bottom_infos = {}, {}
    top_pieces, bottom_pieces = {}, {}
    for p in top_parts:
        r = _part_root(p, tparent)
        red = red_of[r]
        anc, x = [], red
        while x is not None:
            # a split piece may miss the red fragment; a copy nobody reads is never checked
            if cls.members[x] & p:
                anc.append(info_of(h, cls, x))
            x = cls.parent[x]
        top_infos[r] = sorted(anc, key=lambda i: (i.level, i.root))
        top_pieces.update(place_pieces(anc, dfs_preorder(p, tparent, g)))
    for p in bottom_parts:
        r = _part_root(p, tparent)
        inside = [info_of(h, cls, key) for key, m in cls.members.items() if m <= p and not cls.top[key]]
        bottom_infos[r] = sorted(inside, key=lambda i: (i.level, i.root))
        bottom_pieces.update(place_pieces(inside, dfs_preorder(p, tparent, g)))

    ell = h.height
    jdelim = {}
    for v in g.nodes:
        jdelim[v] = next((j for j in range(ell + 1)
                          if h.fragment_of(v, j) is not None and cls.top[(j, h.top(h.fragment_of(v, j)))]),
                         ell + 1)

    if events is not None:
        for key in sorted(cls.members):
            events.append(("classify", f"F=<{key[1]},{key[0]}> class={'top' if cls.top[key] else 'bottom'} "
                                       f"color={cls.color[key]}"))
        for kind, parts in (("Top", top_parts), ("Bottom", bottom_parts)):
            for p in parts:
                events.append(("part", f"kind={kind} root={_part_root(p, tparent)} size={len(p)} "
                                       f"diam={part_diameter(p, tparent)}"))
        for kind, pieces in (("Top", top_pieces), ("Bottom", bottom_pieces)):
            for v in sorted(pieces):
                for idx, inf in enumerate(pieces[v] or ()):
                    events.append(("store", f"node={v} piece={kind}:{idx} info={inf.root},{inf.level},{inf.weight}"))
    return Partitions(n, top_parts, bottom_parts, top_root, bottom_root, jdelim, top_pieces, bottom_pieces,
                      top_infos, bottom_infos, cls, red_of)


# -- measurements --------------------------------------------------------------

def part_diameter(part, tparent) -> int:
    adj = {v: [] for v in part}
    for v in part:
        p = tparent[v]
        if p in part:
            adj[v].append(p)
            adj[p].append(v)

    def far(src):
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for x in frontier:
                for y in adj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        nxt.append(y)
            frontier = nxt
        v = max(dist, key=dist.get)
        return v, dist[v]

    a, _ = far(next(iter(part)))
    return far(a)[1]


def is_subtree(part, tparent) -> bool:
    return sum(1 for v in part if tparent[v] is None or tparent[v] not in part) == 1


def top_levels_hit(part, cls: Classes) -> dict:
    """level -> number of top fragments of that level meeting the part."""
    hit: dict = {}
    for key, m in cls.members.items():
        if cls.top[key] and m & part:
            hit[key[0]] = hit.get(key[0], 0) + 1
    return hit


def bottom_fragments_in(part, cls: Classes) -> int:
    return sum(1 for key, m in cls.members.items() if not cls.top[key] and m & part)


def coverage_gaps(h, parts: Partitions) -> list:
    """(v, j) pairs whose fragment record is in neither of v's parts."""
    cls = parts.classes
    gaps = []
    for v in h.parent:
        have = set(parts.top_infos[parts.top_root[v]]) | set(parts.bottom_infos[parts.bottom_root[v]])
        for j in range(h.height + 1):
            f = h.fragment_of(v, j)
            if f is not None and info_of(h, cls, (j, h.top(f))) not in have:
                gaps.append((v, j))
    return gaps
