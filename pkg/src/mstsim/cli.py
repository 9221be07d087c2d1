"""Command-line front end: ``run``, ``campaign`` and ``check-labels``.

Exit codes: 0 when the run's verdict passes, 1 when it fails, 2 on bad input.
"""
from __future__ import annotations

import argparse
import ast
import csv
import json
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .alg import run_alg, tree_edges
from .errors import SimError
from .graph import (WeightedGraph, format_components, format_graph, generate_graph, kruskal_oracle,
                    parents_from_comp, parse_components, parse_graph, parse_graph_spec, validate_graph)
from .labels import ceil_log2, check_labels, format_labels, mark_labels, parse_labels
from .partitions import build_partitions
from .sim import FaultEvent, Scheduler, trace_level_from_env
from .selfstab import post_fault, run_selfstab
from .verifier import (CORPUS_KINDS, Instance, build_instance, compare_completion, fault_region,
                       make_corruption, measure_detection, run_verifier, train_delivery)

MODES = ("construct", "verify-only", "selfstab", "trains-bench")
TEMPLATES = ("construct", "memory", "detection", "compare", "trains", "selfstab")


# -- inputs ------------------------------------------------------------------------

def load_graph(arg: str) -> WeightedGraph:
    """A generator spec such as ``random:n=64:seed=7`` or a graph file."""
    p = Path(arg)
    if p.is_file():
        g = parse_graph(p.read_text())
    else:
        g = parse_graph_spec(arg)
    bad = validate_graph(g)
    if bad:
        raise SimError("parse-error", f"{arg}: {bad[0]}")
    return g


def parse_faults(text: str) -> list[FaultEvent]:
    """One fault per line: ``t=<time> node=<id> kind=<kind> [register=<name>] [count=<k>] [value=<literal>]``.

    ``value=`` takes the rest of the line as a Python literal.
    """
    out = []
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, raw = line.partition("value=")
        kw = {}
        for tok in head.split():
            k, eq, v = tok.partition("=")
            if not eq:
                raise SimError("parse-error", f"line {ln}: expected key=value, got {tok!r}")
            kw[k] = v
        try:
            value = ast.literal_eval(raw.strip()) if sep else None
            out.append(FaultEvent(int(kw["t"]), int(kw["node"]), kw["kind"], kw.get("register"), value,
                                  int(kw.get("count", 1))))
        except (KeyError, ValueError, SyntaxError) as exc:
            raise SimError("parse-error", f"line {ln}: bad fault ({exc})") from None
        except SimError as exc:
            raise SimError("parse-error", f"line {ln}: {exc}") from None
    return out


def _labels_instance(g: WeightedGraph, text: str) -> Instance:
    """Pieces for the tree named in a label file, with the file's labels in place of the marker's."""
    comp = parse_components(text)
    if set(comp) != set(g.nodes):
        raise SimError("parse-error", "label file needs one 'comp' line per node")
    try:
        parent = parents_from_comp(g, comp)
    except (KeyError, ValueError) as exc:
        raise SimError("parse-error", f"comp line names no port: {exc}") from None
    labels = parse_labels(text, parent)
    if set(labels) != set(g.nodes):
        raise SimError("parse-error", "label file needs one 'label' line per node")
    tree = frozenset(tree_edges(parent)) if list(parent.values()).count(None) == 1 else None
    inst = build_instance(g, tree if tree is not None and len(tree) == g.n - 1 else None)
    inst.labels = labels
    inst.h.parent.update(parent)
    return inst


# -- outputs -----------------------------------------------------------------------

def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _write_csv(out: Path | None, name: str, rows: list[dict]) -> None:
    if out is None or not rows:
        return
    out.mkdir(parents=True, exist_ok=True)
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    with open(out / name, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)


def _alarm_lines(trace) -> list[str]:
    return [f"alarm node={v} t={t} check={c}" for t, v, c in trace.alarms()]


def _budget(g: WeightedGraph, c: int | None) -> int | None:
    return None if c is None else c * max(1, ceil_log2(g.n))


# -- run ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    g = load_graph(args.graph)
    sched = Scheduler(args.scheduler, seed=args.seed, fairness=args.fairness)
    faults = parse_faults(Path(args.faults).read_text()) if args.faults else []
    out = Path(args.out) if args.out else None
    level = trace_level_from_env()
    budget = _budget(g, args.budget_bits)
    if args.mode == "construct":
        ok, metrics, trace = _run_construct(g, out, budget, level)
    elif args.mode == "verify-only":
        ok, metrics, trace = _run_verify(g, args, sched, faults, out, level, budget)
    elif args.mode == "selfstab":
        ok, metrics, trace = _run_selfstab(g, args, sched, faults, out, level)
    else:
        ok, metrics, trace = _run_trains(g, args, sched, out)
    if trace is not None and level != "off":
        _write(out, "trace.txt", "".join(line + "\n" for line in trace.lines()))
    print(json.dumps(metrics, sort_keys=True))
    return 0 if ok else 1


def _run_construct(g, out, budget, level):
    res = run_alg(g, measure=True, trace_level=level)
    got = tree_edges(res.hierarchy.parent)
    match = got == kruskal_oracle(g)
    row = {"n": g.n, "m": g.m, "rounds": res.rounds, "round_bound": 44 * g.n, "height": res.hierarchy.height,
           "peak_bits": res.trace.peak_bits, "oracle_match": match}
    _write_csv(out, "metrics.csv", [row])
    _write(out, "graph.txt", format_graph(g))
    _write(out, "tree.txt", format_components(res.comp))
    parts = build_partitions(g, res.hierarchy)
    _write(out, "labels.txt", format_labels(mark_labels(g, res.hierarchy, parts), res.comp))
    ok = match and res.rounds <= 44 * g.n and (budget is None or res.trace.peak_bits <= budget)
    return ok, row, res.trace


def _run_verify(g, args, sched, faults, out, level, budget):
    inst = _labels_instance(g, Path(args.labels).read_text()) if args.labels else build_instance(g)
    horizon = args.horizon or 100 * max(1, ceil_log2(g.n)) ** 2
    tr = run_verifier(inst, sched, faults, horizon, trace_level=level, measure=True, budget_bits=budget)
    lines = _alarm_lines(tr)
    for line in lines:
        print(line)
    _write(out, "alarms.txt", "".join(x + "\n" for x in lines))
    t0 = max((f.time for f in faults), default=0)
    fnodes = sorted({f.node for f in faults})
    d = measure_detection(tr, g, fnodes, t0)
    metrics = {"n": g.n, "horizon": horizon, "detection_time": d.time, "detection_distance": d.distance,
               "alarms_by_check": d.checks, "alarmed_nodes": d.alarmed, "peak_bits": tr.peak_bits,
               "budget_violations": len(tr.of_kind("budget-violation"))}
    if faults:
        metrics["outside_region"] = sorted(set(d.alarmed) - fault_region(inst, fnodes))
    _write(out, "metrics.json", json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    # with faults the verdict asks for detection; without, for silence
    ok = (d.time is not None) if faults else not tr.alarms()
    return ok and not metrics["budget_violations"], metrics, tr


def _run_selfstab(g, args, sched, faults, out, level):
    v = run_selfstab(g, sched, faults, args.horizon, randomize_start=args.randomize, seed=args.seed,
                     checker=args.checker, measure=True, trace_level=level)
    d = v.as_dict()
    d["detection_distances"] = [measure_detection(v.trace, g, [f.node], f.time).distance for f in faults]
    _write(out, "verdict.json", json.dumps(d, indent=2, sort_keys=True) + "\n")
    return v.converged, d, v.trace


def _run_trains(g, args, sched, out):
    inst = build_instance(g)
    rows = train_delivery(inst, sched, args.horizon or 16 * (ceil_log2(g.n) + 1))
    _write_csv(out, "trains.csv", [dict(zip(("train", "part_root", "size", "start", "latency"), r)) for r in rows])
    roots = {(k, r) for k, r, *_ in rows}
    want = {("T", inst.parts.top_root[next(iter(p))]) for p in inst.parts.top_parts} | \
           {("B", inst.parts.bottom_root[next(iter(p))]) for p in inst.parts.bottom_parts}
    worst = max((r[4] for r in rows), default=None)
    metrics = {"n": g.n, "parts": len(want), "cycles": len(rows), "max_latency": worst,
               "latency_per_log_n": None if worst is None else round(worst / max(1, ceil_log2(g.n)), 3),
               "parts_without_cycle": len(want - roots)}
    _write(out, "metrics.json", json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    return not (want - roots), metrics, None


# -- campaign ----------------------------------------------------------------------

def _sub_run(template: str, n: int, seed: int, mode: str) -> dict:
    g = generate_graph("random-connected", n, seed=seed)
    row = {"template": template, "n": n, "seed": seed, "scheduler": mode}
    sched = Scheduler(mode, seed=seed)
    if template == "construct":
        res = run_alg(g)
        row.update(value=res.rounds, ok=tree_edges(res.hierarchy.parent) == kruskal_oracle(g)
                   and res.rounds <= 44 * n)
    elif template == "memory":
        alg = run_alg(g, measure=True).trace.peak_bits
        ver = run_verifier(build_instance(g), sched, horizon=60, measure=True).peak_bits
        row.update(value=ver, alg_bits=alg, ok=True)
    elif template == "detection":
        kind = CORPUS_KINDS[seed % len(CORPUS_KINDS)]
        c = make_corruption(kind, g, seed, t0=20)
        if c is None:
            row.update(kind=kind, value=None, ok=True)
            return row
        L = ceil_log2(n) + 1
        tr = run_verifier(c.inst, sched, c.faults, c.time + 64 * L ** 3,
                          until=lambda t, st: any(s["al"] for s in st.values()))
        d = measure_detection(tr, g, c.nodes, c.time)
        row.update(kind=kind, value=d.time, ok=d.time is not None)
    elif template == "compare":
        done = compare_completion(build_instance(g), sched)
        worst = None if None in done.values() else max(done.values())
        row.update(value=worst, ok=worst is not None)
    elif template == "trains":
        rows = train_delivery(build_instance(g), sched, 16 * (ceil_log2(n) + 1))
        row.update(value=max((r[4] for r in rows), default=None), ok=bool(rows))
    else:
        v = run_selfstab(g, sched, post_fault(g, 40 * n, seed), randomize_start=True, seed=seed)
        row.update(value=v.convergence_time, resets=v.resets, ok=v.converged)
    return row


def _scale(template: str, n: int) -> float:
    lg = max(1, ceil_log2(n))
    return {"construct": n, "memory": lg, "trains": lg, "selfstab": n}.get(template, lg * lg)


def summarize(rows: list[dict]) -> list[dict]:
    """Median per (scheduler, n), the fitted constant median/scale, and the ratio to the previous n."""
    out = []
    for mode in sorted({r["scheduler"] for r in rows}):
        prev = None
        for n in sorted({r["n"] for r in rows if r["scheduler"] == mode}):
            vals = [r["value"] for r in rows if r["n"] == n and r["scheduler"] == mode and r["value"] is not None]
            med = statistics.median(vals) if vals else None
            tmpl = rows[0]["template"]
            row = {"template": tmpl, "scheduler": mode, "n": n, "runs": len(vals), "median": med,
                   "max": max(vals) if vals else None,
                   "fitted_c": None if med is None else round(med / _scale(tmpl, n), 4),
                   "ratio": None if prev in (None, 0) or med is None else round(med / prev, 4)}
            out.append(row)
            prev = med
    return out


def cmd_campaign(args) -> int:
    if not args.n:
        print("error: empty sweep (give at least one --n)", file=sys.stderr)
        return 2
    if args.seeds < 1:
        print("error: --seeds must be >= 1", file=sys.stderr)
        return 2
    jobs = [(args.template, n, s, m) for m in args.schedulers for n in args.n for s in range(args.seeds)]
    out = Path(args.out) if args.out else None
    rows, failed = [], 0
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            futs = [ex.submit(_sub_run, *j) for j in jobs]
            results = []
            for j, f in zip(jobs, futs):
                try:
                    results.append(f.result())
                except Exception as exc:      # keep the partial table; the exit code reports it
                    results.append({"template": j[0], "n": j[1], "seed": j[2], "scheduler": j[3],
                                    "value": None, "ok": False, "error": str(exc)})
    else:
        results = []
        for j in jobs:
            try:
                results.append(_sub_run(*j))
            except Exception as exc:
                results.append({"template": j[0], "n": j[1], "seed": j[2], "scheduler": j[3],
                                "value": None, "ok": False, "error": str(exc)})
    for r in results:
        rows.append(r)
        failed += not r["ok"]
    summary = summarize(rows)
    _write_csv(out, "runs.csv", rows)
    _write_csv(out, "summary.csv", summary)
    w = csv.DictWriter(sys.stdout, fieldnames=list(summary[0]))
    w.writeheader()
    w.writerows(summary)
    if failed:
        print(f"{failed} sub-run(s) failed", file=sys.stderr)
    return 1 if failed else 0


# -- check-labels ------------------------------------------------------------------

def cmd_check_labels(args) -> int:
    g = load_graph(args.graph)
    text = Path(args.labels).read_text()
    comp = parse_components(text)
    if set(comp) != set(g.nodes):
        raise SimError("parse-error", "label file needs one 'comp' line per node")
    parent = parents_from_comp(g, comp)
    labels = parse_labels(text, parent)
    if set(labels) != set(g.nodes):
        raise SimError("parse-error", "label file needs one 'label' line per node")
    parts = any(lab.toproot is not None for lab in labels.values())
    bad = check_labels(g, labels, parent, with_parts=parts)
    count = sum(len(v) for v in bad.values())
    for v in sorted(bad):
        for clause in bad[v]:
            print(f"node={v} clause={clause}")
    print(f"{count} violations")
    return 1 if count else 0


# -- entry ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mstsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="execute one scenario")
    run.add_argument("--mode", choices=MODES, default="construct")
    run.add_argument("--graph", default="random:n=32:seed=0", help="generator spec or graph file")
    run.add_argument("--labels", help="label file (verify-only)")
    run.add_argument("--scheduler", choices=("sync", "async"), default="sync")
    run.add_argument("--fairness", type=int, help="async window bound k (default 2n-1)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--faults", help="fault schedule file")
    run.add_argument("--horizon", type=int)
    run.add_argument("--out", help="directory for metrics and traces")
    run.add_argument("--budget-bits", type=int, help="per-node budget constant c: c*log2(n) bits")
    run.add_argument("--checker", choices=("trains", "one-round"), default="trains", help="selfstab verifier")
    run.add_argument("--randomize", action="store_true", help="selfstab: start from random registers")

    camp = sub.add_parser("campaign", help="sweep n x seeds and aggregate")
    camp.add_argument("--template", choices=TEMPLATES, default="detection")
    camp.add_argument("--n", type=int, nargs="*", default=[])
    camp.add_argument("--seeds", type=int, default=5)
    camp.add_argument("--schedulers", nargs="+", choices=("sync", "async"), default=["sync"])
    camp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    camp.add_argument("--out")

    chk = sub.add_parser("check-labels", help="run the structural label checks centrally")
    chk.add_argument("--graph", required=True)
    chk.add_argument("--labels", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            return cmd_run(args)
        if args.cmd == "campaign":
            return cmd_campaign(args)
        return cmd_check_labels(args)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if exc.code in ("parse-error", "invalid-parameter", "invalid-fault") else 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
