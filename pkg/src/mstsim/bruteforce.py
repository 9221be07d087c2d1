"""Exhaustive search over label assignments on small rooted trees.

For every rooted tree shape with up to five nodes and every height bound, this
walks all ROOTS assignments accepted by the hierarchy checks and all
EndP/PARENTS assignments accepted by the candidate checks, then confirms that
the decoded structure really is a hierarchy with a candidate function.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .labels import (LabelBundle, NodeView, ceil_log2, children_map, compute_agg, decode_candidates,
                     decode_hierarchy, verify_eps, verify_rs)


def _canon(parent, v, kids):
    return "(" + "".join(sorted(_canon(parent, c, kids) for c in kids[v])) + ")"


def rooted_shapes(n: int) -> list[dict[int, int | None]]:
    """One parent map per rooted unlabelled tree on nodes 1..n (root 1)."""
    seen, out = set(), []
    for par in itertools.product(*[range(1, i) for i in range(2, n + 1)]):
        parent = {1: None}
        parent.update({i: p for i, p in zip(range(2, n + 1), par)})
        key = _canon(parent, 1, children_map(parent))
        if key not in seen:
            seen.add(key)
            out.append(parent)
    return out


def _root_strings(ell: int, is_root: bool) -> list[str]:
    out = []
    for s in itertools.product("01*", repeat=ell + 1):
        s = "".join(s)
        if s[0] != "1":
            continue
        if is_root and ("0" in s or s[ell] != "1"):
            continue
        if not is_root and s[ell] != "0":
            continue
        if "0" in s and "1" in s[s.index("0"):]:
            continue
        out.append(s)
    return out


def _bare_label(n, roots, endp="", parents="", agg="", pid=None):
    ell = len(roots) - 1
    return LabelBundle(roots, endp or "n" * (ell + 1), parents or "0" * (ell + 1),
                       agg or "0" * (ell + 1), (1, 0), (n, 1), 0, pid)


def _view(v, parent, kids, labels):
    nb = []
    if parent[v] is not None:
        nb.append((parent[v], 1, labels[parent[v]]))
    nb += [(c, 1, labels[c]) for c in kids[v]]
    return NodeView(v, labels[v], parent[v], nb)


def rs_assignments(parent, ell, prefilter=True):
    """ROOTS assignments accepted by every node's hierarchy check."""
    n = len(parent)
    kids = children_map(parent)
    nodes = sorted(parent)
    if prefilter:
        opts = [_root_strings(ell, parent[v] is None) for v in nodes]
    else:
        opts = [["".join(s) for s in itertools.product("01*", repeat=ell + 1)]] * n
    for combo in itertools.product(*opts):
        roots = dict(zip(nodes, combo))
        labels = {v: _bare_label(n, roots[v], pid=parent[v]) for v in nodes}
        if all(not verify_rs(_view(v, parent, kids, labels)) for v in nodes):
            yield roots


def _endp_options(r: str, is_root: bool):
    ell = len(r) - 1
    per = []
    for j, c in enumerate(r):
        if c == "*":
            per.append("*")
        elif is_root or j == ell:
            # nothing may count towards the whole tree
            per.append("nd" if j < ell else "n")
        elif j < ell and (c != "1" or "1" in r[j + 1:]):
            per.append("nd")
        else:
            per.append("udn")
    return ["".join(x) for x in itertools.product(*per)]


def _parents_options(r: str, is_root: bool):
    ell = len(r) - 1
    if is_root:
        return ["0" * (ell + 1)]
    per = ["01" if (j < ell and r[j] != "0" and "1" not in r[j + 1:]) else "0" for j in range(ell + 1)]
    return ["".join(x) for x in itertools.product(*per)]


def eps_assignments(parent, roots, ell, prefilter=True):
    """Label maps whose EndP/PARENTS/AGG strings pass every node's candidate check.

    Nodes are assigned children-first; each node's own clauses are checked as
    soon as its subtree is assigned, the clause tying it to its parent once the
    parent is assigned.  AGG is derived from the counts below, since any other
    value fails its own clause.  The final answer always goes through
    ``verify_eps``; ``prefilter=False`` drops every shortcut except that.
    """
    n = len(parent)
    kids = children_map(parent)
    order = []
    stack = [next(v for v in parent if parent[v] is None)]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(kids[v])
    order.reverse()
    if prefilter:
        opts = {v: [(e, p) for e in _endp_options(roots[v], parent[v] is None)
                    for p in _parents_options(roots[v], parent[v] is None)
                    if parent[v] is None or "1" in p or "u" in e]
                for v in order}
    else:
        every = [("".join(e), "".join(p)) for e in itertools.product("udn*", repeat=ell + 1)
                 for p in itertools.product("01", repeat=ell + 1)]
        opts = {v: every for v in order}
    endp, pars, agg = {}, {}, {}

    def local_ok(v):
        e, p, r = endp[v], pars[v], roots[v]
        a = []
        for j in range(ell + 1):
            if r[j] == "*":
                a.append("*")
                continue
            c = 1 if e[j] in "ud" else 0
            c += sum(int(agg[k][j]) for k in kids[v] if roots[k][j] == "0")
            if not prefilter:
                a.append(str(min(2, c)))
                continue
            if c >= 2:
                return False   # two endpoints below one fragment top can never be undone
            if r[j] == "1" and c != (1 if j < ell else 0):
                return False
            a.append(str(c))
            hits = sum(1 for k in kids[v] if pars[k][j] == "1")
            if e[j] == "d" and hits != 1:
                return False
            if e[j] != "d" and hits:
                return False   # a child's PARENTS=1 needs this node to point down
        agg[v] = "".join(a)
        return True

    def rec(i):
        if i == len(order):
            yield dict(endp), dict(pars), dict(agg)
            return
        v = order[i]
        for e, p in opts[v]:
            endp[v], pars[v] = e, p
            if local_ok(v):
                yield from rec(i + 1)
        endp.pop(v, None)
        pars.pop(v, None)
        agg.pop(v, None)

    for e, p, a in rec(0):
        labels = {v: _bare_label(n, roots[v], e[v], p[v], a[v], parent[v]) for v in order}
        if all(not verify_eps(_view(v, parent, kids, labels)) for v in order):
            yield labels


def is_hierarchy(parent, frags) -> str | None:
    """None when the decoded fragments form a laminar family with T and singletons."""
    nodes = frozenset(parent)
    sets = [m for _, _, m in frags]
    if nodes not in sets:
        return "tree missing"
    for v in nodes:
        if frozenset({v}) not in sets:
            return f"singleton {v} missing"
    kids = children_map(parent)
    for j, top, m in frags:
        if any(parent[x] not in m for x in m if x != top):
            return "fragment not connected below its top"
        if parent[top] is not None and parent[top] in m:
            return "top is not highest"
    for (_, _, a), (_, _, b) in itertools.combinations(frags, 2):
        if a & b and not (a <= b or b <= a):
            return "not laminar"
    return None


def is_candidate_function(parent, frags, chi) -> str | None:
    ell = max(j for j, _, _ in frags)
    tree_edges = {frozenset((v, p)) for v, p in parent.items() if p is not None}
    for j, top, m in frags:
        if j == ell:
            continue
        e = chi.get((j, top))
        if e is None:
            return f"no candidate for <{top},{j}>"
        if frozenset(e) not in tree_edges:
            return "candidate not a tree edge"
    for j, top, m in frags:
        inside = {frozenset((v, parent[v])) for v in m if parent[v] in m}
        strict = {frozenset(chi[(k, t)]) for k, t, mm in frags if mm < m and (k, t) in chi and k != ell}
        if inside != strict:
            return f"edges of <{top},{j}> differ from candidates below it"
    return None


@dataclass
class SearchReport:
    shapes: int = 0
    rs_legal: int = 0
    eps_legal: int = 0
    failures: list = field(default_factory=list)


def exhaustive_check(max_n: int = 5, max_ell: int = 3) -> SearchReport:
    rep = SearchReport()
    for n in range(1, max_n + 1):
        for parent in rooted_shapes(n):
            rep.shapes += 1
            for ell in range(0, min(max_ell, ceil_log2(n)) + 1):
                for roots in rs_assignments(parent, ell):
                    rep.rs_legal += 1
                    frags = decode_hierarchy(parent, roots)
                    why = is_hierarchy(parent, frags)
                    if why:
                        rep.failures.append(("RS", parent, roots, why))
                        continue
                    for labels in eps_assignments(parent, roots, ell):
                        rep.eps_legal += 1
                        why = is_candidate_function(parent, frags, decode_candidates(parent, labels))
                        if why:
                            rep.failures.append(("EPS", parent, roots, why))
    return rep
