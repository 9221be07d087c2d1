"""Run a small campaign for every template and print the summary tables.

    python3 scripts/sweep.py --out runs/ --seeds 3
"""
import argparse
import sys

from mstsim.cli import TEMPLATES, main


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--templates", nargs="+", choices=TEMPLATES, default=list(TEMPLATES))
    ap.add_argument("--schedulers", nargs="+", choices=("sync", "async"), default=["sync", "async"])
    ap.add_argument("--out", default="runs")
    return ap.parse_args(argv)


def sweep(args) -> int:
    worst = 0
    for t in args.templates:
        print(f"# {t}", flush=True)
        rc = main(["campaign", "--template", t, "--n", *map(str, args.n), "--seeds", str(args.seeds),
                   "--schedulers", *args.schedulers, "--out", f"{args.out}/{t}"])
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(sweep(parse_args()))
