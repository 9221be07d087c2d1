"""Trains: per-part convergecast of stored pieces to the part root, broadcast
of every piece back down the part, and the neighbour comparison built on top.

Each node keeps one train register per partition ("T" for Top, "B" for
Bottom).  The part root runs cycles.  A cycle walks the part's tree in DFS
order (children by ascending port).  Every node with a stored pair posts it to
its parent and then relays the pairs of its children one at a time.  Pieces
are stored in DFS preorder, so the first vacant node ends the walk below its
parent.  The root hands every record of every pair to the broadcast, which
moves one record at a time down the whole part with an alternating sequence
bit.

Train register fields:

``perm``  stored pair of records, or None
``ep``    cycle epoch (mod ``EPOCHS``); a node adopts its parent's when served
``st``    True while serving a job of the current epoch
``srv``   id of the part child being served, or None
``out``   posted pair with an alternating bit, waiting for the parent to copy
``inc``   last pair copied from a child; ``full`` while not forwarded yet
``fin``   (epoch, vacant) of the last finished job
``bc``    broadcast buffer (record, cycle-first marker, flag, sequence bit)
``half``  root only: next record of ``out`` to broadcast
``newc``  root only: the next broadcast record opens a cycle
"""
from __future__ import annotations

from typing import Callable

EPOCHS = 16


def new_train(perm) -> dict:
    return {"perm": perm, "ep": 0, "st": False, "srv": None, "out": None, "inc": None,
            "full": False, "fin": None, "bc": None, "half": 0, "newc": False}


def _bit(car) -> int:
    return car[1] if car is not None else 0


def _next_kid(kids, cur):
    ids = [k for k, _ in kids]
    if cur not in ids:
        return None
    i = ids.index(cur) + 1
    return ids[i] if i < len(ids) else None


def _serve(s: dict, kids: list) -> None:
    """Copy the served child's posted pair and move on when it reports done."""
    srv = s["srv"]
    if srv is None:
        return
    c = next((x for k, x in kids if k == srv), None)
    if c is None:
        # the cursor names no part child
        s["srv"] = None
        return
    if c["st"]:
        co = c["out"]
        if not s["full"] and c["ep"] == s["ep"] and co is not None and co != s["inc"]:
            s["inc"], s["full"] = co, True
    else:
        fin = c["fin"]
        if fin is not None and fin[0] == s["ep"]:
            s["srv"] = None if fin[1] else _next_kid(kids, srv)


def train_step(me: int, is_root: bool, X: dict, P: dict | None, kids: list,
               flag_of: Callable, hold: bool, out) -> tuple[dict, list, bool]:
    """One step of one train at one node.

    ``P`` is the parent's train register (None at the part root), ``kids`` the
    part children as (id, register) in port order, ``flag_of(record, parent
    flag)`` the membership rule, ``hold`` keeps the broadcast buffer in place.
    Returns the new register, the broadcast records that arrived, and whether
    an epoch flush discarded state.
    """
    s = dict(X)
    arrivals = []
    flushed = False
    if is_root:
        s["st"] = True
        if s["out"] is None and not s["full"] and s["srv"] is None:
            ep = (s["ep"] + 1) % EPOCHS
            perm = s["perm"]
            s.update(ep=ep, newc=True, half=0, out=(perm, 0) if perm else None,
                     srv=kids[0][0] if kids else None)
            if out.on:
                out.emit("cycle-start", f"part={me}")
    else:
        if not s["st"]:
            fin = s["fin"]
            if P["srv"] == me and (fin is None or fin[0] != P["ep"]):
                ep = s["ep"] = P["ep"]
                perm = s["perm"]
                if perm is None:
                    s["fin"] = (ep, True)
                else:
                    s.update(st=True, out=(perm, 1 - _bit(P["inc"])), full=False,
                             srv=kids[0][0] if kids else None)
        elif P["srv"] != me or P["ep"] != s["ep"]:
            s.update(st=False, out=None, full=False, srv=None, fin=None)
            flushed = True
            if out.on:
                out.emit("epoch-flush", f"node={me}")
        if s["st"]:
            if s["out"] is not None and P["inc"] == s["out"]:
                s["out"] = None
            if s["full"] and s["out"] is None:
                s["out"] = (s["inc"][0], 1 - _bit(P["inc"]))
                s["full"] = False
    if s["st"]:
        _serve(s, kids)
        if not is_root and s["srv"] is None and not s["full"] and s["out"] is None:
            s["st"], s["fin"] = False, (s["ep"], False)

    # broadcast: a new record moves in once every part child holds the current one
    bc = s["bc"]
    acked = bc is None or all(c["bc"] is not None and c["bc"][3] == bc[3] for _, c in kids)
    if acked and not hold:
        if is_root:
            car = s["out"]
            if car is not None:
                pair, h = car[0], s["half"]
                if h < len(pair):
                    info = pair[h]
                    s["bc"] = (info, s["newc"], flag_of(info, None), 1 - bc[3] if bc else 1)
                    s["newc"] = False
                    arrivals.append(s["bc"])
                    h += 1
                if h >= len(pair):
                    s["out"], s["half"] = None, 0
                else:
                    s["half"] = h
        else:
            pb = P["bc"]
            if pb is not None and (bc is None or pb[3] != bc[3]):
                s["bc"] = (pb[0], pb[1], flag_of(pb[0], pb[2]), pb[3])
                arrivals.append(s["bc"])
    if is_root and s["full"] and s["out"] is None:
        s["out"], s["full"] = (s["inc"][0], 0), False
        s["half"] = 0
    if out.full:
        for rec in arrivals:
            out.emit("piece-at", f"node={me} info={tuple(rec[0])} flag={'on' if rec[2] else 'off'}")
    return s, arrivals, flushed


# -- membership flags ------------------------------------------------------------

def _level_ok(roots: str, j) -> bool:
    return isinstance(j, int) and 0 <= j < len(roots)


def top_flag(lab) -> Callable:
    """Top parts hold one top fragment per level: membership is the level alone."""
    roots, jd = lab.roots, lab.jdelim

    def flag(info, _pf):
        j = info.level
        return _level_ok(roots, j) and j >= jd and roots[j] != "*"
    return flag


def bottom_flag(me: int, lab) -> Callable:
    """Switched on at the fragment's top, kept on while the path stays inside it."""
    roots = lab.roots

    def flag(info, pf):
        j = info.level
        if not _level_ok(roots, j):
            return False
        if info.root == me and roots[j] == "1":
            return True
        return bool(pf) and roots[j] == "0"
    return flag


def train_levels(lab, key: str) -> tuple:
    """Levels whose record v must see on train ``key`` in every cycle."""
    roots, jd = lab.roots, lab.jdelim
    rng = range(jd, len(roots)) if key == "T" else range(min(jd, len(roots)))
    return tuple(j for j in rng if roots[j] != "*")


# -- comparison ------------------------------------------------------------------

def shows(x: dict, j: int):
    """The level-j record a neighbour currently exposes, from either broadcast buffer."""
    for key in ("T", "B"):
        bc = x[key]["bc"]
        if bc is not None and bc[2] and bc[0].level == j:
            return bc[0]
    return None


def next_level(levels: tuple, j: int):
    """The level after j in the cyclic order of ``levels``."""
    for x in levels:
        if x > j:
            return x
    return levels[0] if levels else None



class TrainProgram:
    """One train on its own, every record flagged on; used by benches and tests.

    ``setup`` maps a node to (parent id, part root id, stored pair).  ``probe``
    is called as probe(t, node, record, first) for every broadcast arrival.
    """

    name = "train"

    def __init__(self, setup: dict, probe=None, hold=None):
        self.setup = setup
        self.probe = probe
        self.hold = hold or (lambda t, v: False)

    def init(self, ctx):
        par, root, perm = self.setup[ctx.id]
        return {"par": par, "root": root, "T": new_train(perm)}

    def step(self, ctx, r, nbrs, t, out):
        me = ctx.id
        is_root = r["root"] == me
        P = None if is_root else nbrs[ctx.index_of[r["par"]]]["T"]
        kids = [(u, x["T"]) for u, x in zip(ctx.nbr_ids, nbrs) if x["par"] == me and x["root"] == r["root"]]
        s, arrivals, _ = train_step(me, is_root, r["T"], P, kids, lambda info, pf: True, self.hold(t, me), out)
        if self.probe is not None:
            for info, first, _, _ in arrivals:
                self.probe(t, me, info, first)
        return {**r, "T": s}
