"""Per-node labels describing the fragment hierarchy, and their 1-round checks.

Each node v carries, for every level j in 0..height:

* ``roots[j]``   '1' v is the top node of its level-j fragment, '0' member but
                 not top, '*' no level-j fragment contains v
* ``endp[j]``    'u'/'d' v is the endpoint of the fragment's chosen edge and the
                 other endpoint is its parent/child, 'n' not an endpoint, '*'
* ``parents[j]`` '1' iff the edge to v's parent is the chosen edge of the
                 parent's level-j fragment
* ``agg[j]``     number of endpoints (capped at 2) in v's subtree inside its
                 level-j fragment

plus a distance-to-root field, a subtree count, a height bound and the
partition fields used by the trains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

from .errors import SimError
from .graph import WeightedGraph, parents_from_comp


class LabelBundle(NamedTuple):
    roots: str
    endp: str
    parents: str
    agg: str
    sp: tuple            # (root id, distance to root)
    numk: tuple          # (claimed n, subtree size)
    ediam: int           # height bound
    pid: int | None      # echo of the parent's id
    toproot: int | None = None
    botroot: int | None = None
    jdelim: int = 0      # levels >= jdelim are served by the Top train


def ceil_log2(n: int) -> int:
    return max(0, math.ceil(math.log2(n))) if n > 0 else 0


def children_map(parent: Mapping[int, int | None]) -> dict[int, list[int]]:
    kids: dict = {v: [] for v in parent}
    for v, p in parent.items():
        if p is not None:
            kids[p].append(v)
    return kids


def _postorder(parent, root):
    kids = children_map(parent)
    order, stack = [], [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(kids[v])
    order.reverse()
    return order, kids


def mark_labels(g: WeightedGraph, h, parts=None) -> dict[int, LabelBundle]:
    """Centralized marker: labels for the tree and hierarchy of a correct run."""
    parent, root = h.parent, h.root
    ell = h.height
    order, kids = _postorder(parent, root)
    top_of = {}
    for f in h.fragments:
        top_of[(f.level, f.members)] = h.top(f)
    roots, endp, pars = {}, {}, {}
    for v in g.nodes:
        r, e, p = [], [], []
        for j in range(ell + 1):
            f = h.fragment_of(v, j)
            if f is None:
                r.append("*")
                e.append("*")
            else:
                r.append("1" if top_of[(j, f.members)] == v else "0")
                if f.cand is not None and f.cand[0] == v:
                    e.append("u" if parent[v] == f.cand[1] else "d")
                else:
                    e.append("n")
            pf = h.fragment_of(parent[v], j) if parent[v] is not None else None
            p.append("1" if pf is not None and pf.cand == (parent[v], v) else "0")
        roots[v], endp[v], pars[v] = "".join(r), "".join(e), "".join(p)
    agg = compute_agg(order, kids, roots, endp, ell)
    depth = {root: 0}
    for v in reversed(order):
        if parent[v] is not None:
            depth[v] = depth[parent[v]] + 1
    size = {}
    for v in order:
        size[v] = 1 + sum(size[c] for c in kids[v])
    height = max(depth.values())
    n = g.n
    out = {}
    for v in g.nodes:
        lab = LabelBundle(roots[v], endp[v], pars[v], agg[v], (root, depth[v]), (n, size[v]),
                          height, parent[v])
        if parts is not None:
            lab = lab._replace(toproot=parts.top_root[v], botroot=parts.bottom_root[v],
                               jdelim=parts.jdelim[v])
        out[v] = lab
    return out


def compute_agg(order, kids, roots, endp, ell) -> dict[int, str]:
    """Capped endpoint counts, children before parents."""
    agg = {}
    for v in order:
        s = []
        for j in range(ell + 1):
            if roots[v][j] == "*":
                s.append("*")
                continue
            c = 1 if endp[v][j] in "ud" else 0
            for u in kids[v]:
                if roots[u][j] == "0":
                    c += int(agg[u][j])
            s.append(str(min(2, c)))
        agg[v] = "".join(s)
    return agg


# -- local checks -------------------------------------------------------------

@dataclass
class NodeView:
    """What a node sees in one round: its label, its parent link, its neighbours."""

    id: int
    lab: LabelBundle
    parent: int | None                    # parent id according to the component register
    nbrs: list                            # (neighbour id, edge weight, neighbour label)

    def parent_lab(self) -> LabelBundle | None:
        for u, _, lab in self.nbrs:
            if u == self.parent:
                return lab
        return None

    def children(self) -> list[tuple[int, LabelBundle]]:
        return [(u, lab) for u, _, lab in self.nbrs if lab is not None and lab.pid == self.id and u != self.parent]


def verify_sp(view: NodeView) -> list[str]:
    bad = []
    lab = view.lab
    rid, d = lab.sp
    for u, _, nl in view.nbrs:
        if nl.sp[0] != rid:
            bad.append("SP:root-id")
            break
    is_root = view.parent is None
    if (d == 0) != (rid == view.id) or (d == 0) != is_root:
        bad.append("SP:zero")
    if lab.pid != view.parent:
        bad.append("SP:echo")
    if not is_root:
        pl = view.parent_lab()
        if pl is None or d != pl.sp[1] + 1:
            bad.append("SP:distance")
    return bad


def verify_numk(view: NodeView) -> list[str]:
    lab = view.lab
    claimed, mine = lab.numk
    bad = []
    if any(nl.numk[0] != claimed for _, _, nl in view.nbrs):
        bad.append("NUMK:agree")
    if mine != 1 + sum(cl.numk[1] for _, cl in view.children()):
        bad.append("NUMK:count")
    if view.parent is None and mine != claimed:
        bad.append("NUMK:root")
    return bad


def verify_ediam(view: NodeView) -> list[str]:
    x = view.lab.ediam
    bad = []
    if any(nl.ediam != x for _, _, nl in view.nbrs):
        bad.append("EDIAM:agree")
    if x < view.lab.sp[1]:
        bad.append("EDIAM:bound")
    return bad


def _rs0_ok(s: str) -> bool:
    seen_zero = False
    for c in s:
        if c == "0":
            seen_zero = True
        elif c == "1" and seen_zero:
            return False
    return True


def verify_rs(view: NodeView) -> list[str]:
    lab = view.lab
    s = lab.roots
    ell = len(s) - 1
    bad = []
    if not _rs0_ok(s):
        bad.append("RS0")
    n = lab.numk[0]
    if ell < 0 or any(len(x) != ell + 1 for x in (lab.endp, lab.parents, lab.agg)) \
            or ell > ceil_log2(max(n, 1)) \
            or any(len(nl.roots) != ell + 1 for u, _, nl in view.nbrs if u == view.parent or nl.pid == view.id):
        bad.append("RS1")
        return bad
    is_root = view.parent is None
    if is_root and ("0" in s or s[ell] != "1"):
        bad.append("RS2")
    if s[0] != "1":
        bad.append("RS3")
    if not is_root and s[ell] != "0":
        bad.append("RS4")
    if not is_root:
        pl = view.parent_lab()
        if pl is not None and any(s[j] == "0" and pl.roots[j] == "*" for j in range(ell + 1)):
            bad.append("RS5")
        elif pl is not None and "0" in s:
            # once inside the parent's fragment, v sits in exactly the parent's higher fragments
            z = s.index("0")
            if any((s[i] == "*") != (pl.roots[i] == "*") for i in range(z + 1, ell + 1)):
                bad.append("RS5:nest")
    return bad


def verify_eps(view: NodeView) -> list[str]:
    """Candidate-function clauses; assumes the RS clauses passed."""
    lab = view.lab
    r, e, p, a = lab.roots, lab.endp, lab.parents, lab.agg
    ell = len(r) - 1
    bad = []
    is_root = view.parent is None
    kids = view.children()
    pl = view.parent_lab()
    if any((r[j] == "*") != (e[j] == "*") or (r[j] == "*") != (a[j] == "*") for j in range(ell + 1)) \
            or any(c not in "udn*" for c in e) or any(c not in "01" for c in p) \
            or any(c not in "012*" for c in a) or (is_root and ("1" in p or "u" in e)):
        bad.append("EPS:shape")
        return bad
    for j in range(ell + 1):
        if p[j] == "1" and (pl is None or pl.endp[j] != "d"):
            bad.append(f"EPS0:j={j}")
        if r[j] != "*":
            c = 1 if e[j] in "ud" else 0
            for _, kl in kids:
                if len(kl.roots) == ell + 1 and kl.roots[j] == "0":
                    c += 2 if kl.agg[j] == "*" else int(kl.agg[j])
            if a[j] != str(min(2, c)):
                bad.append(f"EPS1:agg j={j}")
            elif r[j] == "1" and a[j] != ("1" if j < ell else "0"):
                bad.append(f"EPS1:F=<{view.id},{j}>")
        if e[j] == "d" and sum(1 for _, kl in kids if kl.parents[j:j + 1] == "1") != 1:
            bad.append(f"EPS2:j={j}")
        if e[j] == "u" and j < ell and (r[j] != "1" or "1" in r[j + 1:]):
            bad.append(f"EPS3:j={j}")
        if p[j] == "1" and (r[j] == "0" or "1" in r[j + 1:]):
            bad.append(f"EPS4:j={j}")
        elif p[j] == "1" and pl is not None and len(pl.roots) == ell + 1:
            # the edge must lie inside the next fragment above the parent's level-j one
            up = next((i for i in range(j + 1, ell + 1) if pl.roots[i] != "*"), None)
            if up is not None and r[up] == "*":
                bad.append(f"EPS4:inside j={j}")
    if not is_root and "1" not in p and "u" not in e:
        bad.append("EPS5")
    return bad


def verify_part(view: NodeView) -> list[str]:
    """Each node names the part root of both partitions; parts are subtrees."""
    lab = view.lab
    bad = []
    if lab.toproot is None or lab.botroot is None:
        return ["PART:missing"]
    if not 0 <= lab.jdelim <= len(lab.roots):
        bad.append("PART:jdelim")
    if view.parent is None:
        if lab.toproot != view.id or lab.botroot != view.id:
            bad.append("PART:tree-root")
    else:
        pl = view.parent_lab()
        if pl is not None:
            if lab.toproot != view.id and lab.toproot != pl.toproot:
                bad.append("PART:top")
            if lab.botroot != view.id and lab.botroot != pl.botroot:
                bad.append("PART:bottom")
    return bad


def check_node(view: NodeView, with_parts: bool = True) -> list[str]:
    bad = verify_sp(view) + verify_numk(view) + verify_ediam(view)
    rs = verify_rs(view)
    bad += rs
    if not rs:
        bad += verify_eps(view)
    if with_parts:
        bad += verify_part(view)
    return bad


def views(g: WeightedGraph, labels: Mapping[int, LabelBundle], parent: Mapping[int, int | None]) -> dict[int, NodeView]:
    return {v: NodeView(v, labels[v], parent[v], [(u, w, labels[u]) for _, u, w in g.adj[v]])
            for v in g.nodes}


def check_labels(g: WeightedGraph, labels, parent, with_parts: bool = False) -> dict[int, list[str]]:
    """Every violated clause per node (empty dict when all nodes accept)."""
    out = {}
    for v, view in views(g, labels, parent).items():
        bad = check_node(view, with_parts)
        if bad:
            out[v] = bad
    return out


def induced_candidate(view: NodeView, j: int) -> tuple[int, str] | None:
    """The tree edge chosen by v's level-j fragment if v is its endpoint: (other end, 'up'|'down')."""
    e = view.lab.endp[j]
    if e == "u":
        return view.parent, "up"
    if e == "d":
        hits = [u for u, kl in view.children() if kl.parents[j] == "1"]
        return (hits[0], "down") if len(hits) == 1 else None
    return None


# -- decoding -----------------------------------------------------------------

def decode_hierarchy(parent: Mapping[int, int | None], roots: Mapping[int, str]) -> list[tuple[int, int, frozenset]]:
    """Fragments (level, top node, members) described by ROOTS strings."""
    kids = children_map(parent)
    ell = len(next(iter(roots.values()))) - 1
    out = []
    for j in range(ell + 1):
        for v in parent:
            if roots[v][j] != "1":
                continue
            members, stack = {v}, [v]
            while stack:
                x = stack.pop()
                for c in kids[x]:
                    if roots[c][j] == "0":
                        members.add(c)
                        stack.append(c)
            out.append((j, v, frozenset(members)))
    return out


def decode_candidates(parent, labels) -> dict[tuple[int, int], tuple[int, int]]:
    """(level, top node) -> chosen edge as (endpoint inside, endpoint outside)."""
    kids = children_map(parent)
    roots = {v: lab.roots for v, lab in labels.items()}
    out = {}
    for j, top, members in decode_hierarchy(parent, roots):
        for v in members:
            e = labels[v].endp[j]
            if e == "u":
                out[(j, top)] = (v, parent[v])
            elif e == "d":
                hits = [c for c in kids[v] if labels[c].parents[j] == "1"]
                if hits:
                    out[(j, top)] = (v, hits[0])
    return out


# -- file format --------------------------------------------------------------

def _fmt_opt(x):
    return "-" if x is None else str(x)


def format_labels(labels: Mapping[int, LabelBundle], comp: Mapping[int, int | None] | None = None) -> str:
    lines = []
    if comp is not None:
        lines += [f"comp {v} {'root' if p is None else p}" for v, p in sorted(comp.items())]
    for v in sorted(labels):
        b = labels[v]
        lines.append(
            f"label {v} ROOTS={b.roots} ENDP={b.endp} PARENTS={b.parents} AGG={b.agg} "
            f"SP={b.sp[0]},{b.sp[1]} NUMK={b.numk[0]},{b.numk[1]} EDIAM={b.ediam} "
            f"TOPROOT={_fmt_opt(b.toproot)} BOTROOT={_fmt_opt(b.botroot)} JDELIM={b.jdelim}")
    return "\n".join(lines) + "\n"


def parse_labels(text: str, parent_ids: Mapping[int, int | None] | None = None) -> dict[int, LabelBundle]:
    """Parse label lines.  The parent-id echo is filled from ``parent_ids`` when given."""
    out = {}
    for ln, line in enumerate(text.splitlines(), 1):
        tok = line.split()
        if not tok or tok[0] != "label":
            continue
        try:
            v = int(tok[1])
            f = dict(t.split("=", 1) for t in tok[2:])
            sp = tuple(int(x) for x in f["SP"].split(","))
            nk = tuple(int(x) for x in f["NUMK"].split(","))
            opt = lambda k: None if f.get(k, "-") == "-" else int(f[k])
            out[v] = LabelBundle(f["ROOTS"], f["ENDP"], f["PARENTS"], f["AGG"], sp, nk,
                                 int(f["EDIAM"]), None if parent_ids is None else parent_ids.get(v),
                                 opt("TOPROOT"), opt("BOTROOT"), int(f.get("JDELIM", 0)))
        except (KeyError, ValueError, IndexError) as exc:
            raise SimError("parse-error", f"line {ln}: bad label ({exc})") from None
        if len(sp) != 2 or len(nk) != 2:
            raise SimError("parse-error", f"line {ln}: SP and NUMK take two values")
    return out


def labels_from_alg(g: WeightedGraph, states: Mapping[int, dict]) -> dict[int, LabelBundle]:
    """Labels derived from the bookkeeping each node kept while building the tree.

    ROOTS, EndP and PARENTS come from a node's own membership bits and parent-edge
    record plus its children's records; the remaining fields are tree
    aggregates (distances, counts, endpoint sums).
    """
    parent = {v: s["pid"] for v, s in states.items()}
    root = next(v for v, p in parent.items() if p is None)
    order, kids = _postorder(parent, root)
    mem = {v: bin(s["mem"])[3:] for v, s in states.items()}
    ell = len(mem[root]) - 1
    roots, endp, pars = {}, {}, {}
    for v in g.nodes:
        ei = states[v]["ei"] if parent[v] is not None else None
        r, e, p = [], [], []
        for j in range(ell + 1):
            if mem[v][j] == "0":
                r.append("*")
                e.append("*")
            else:
                r.append("0" if ei is not None and ei[0] < j else "1")
                if ei is not None and ei[0] == j and ei[1]:
                    e.append("u")
                elif any(states[c]["ei"][0] == j and states[c]["ei"][2] for c in kids[v]):
                    e.append("d")
                else:
                    e.append("n")
            p.append("1" if ei is not None and ei[0] == j and ei[2] else "0")
        roots[v], endp[v], pars[v] = "".join(r), "".join(e), "".join(p)
    agg = compute_agg(order, kids, roots, endp, ell)
    depth = {root: 0}
    for v in reversed(order):
        if parent[v] is not None:
            depth[v] = depth[parent[v]] + 1
    size = {}
    for v in order:
        size[v] = 1 + sum(size[c] for c in kids[v])
    height = max(depth.values())
    return {v: LabelBundle(roots[v], endp[v], pars[v], agg[v], (root, depth[v]), (g.n, size[v]),
                           height, parent[v]) for v in g.nodes}
