"""
Command-line entry point.

    rrbeam run fig_convergence --trials 50 --out conv.csv
    rrbeam sweep-rank fig_rank --ranks 1..8
    rrbeam grid-search fig_convergence --grid grid.json
    rrbeam complexity --M 32 --D 4
    rrbeam list-scenarios

Exit codes: 0 success, 2 configuration error, 3 divergence limit exceeded.
"""
import argparse
import json
import logging
import sys
from dataclasses import replace

from .complexity import COMPLEXITY, complexity_counts
from .runner import grid_search, run_scenario, sweep_rank, write_sweep_csv
from .scenario import ConfigError, bundled_names, load_scenario

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


def parse_ranks(text):
    """``"1..8"`` or ``"1,2,4"`` (or a mix) -> sorted unique list."""
    out = set()
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.update(range(int(lo), int(hi) + 1))
        elif part:
            out.add(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no ranks in {text!r}")
    return sorted(out)


def _common(p):
    p.add_argument("scenario", help="bundled scenario name or path to a JSON file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--trials", type=int, help="override the number of trials")
    p.add_argument("--snapshots", type=int, help="override the number of snapshots")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--avg-domain", choices=["db", "linear"], default="db")


def build_parser():
    ap = argparse.ArgumentParser(prog="rrbeam", description="Robust reduced-rank LCMV beamforming experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte Carlo SINR traces for a scenario")
    _common(p)
    p.add_argument("--manifest", help="write a JSON run manifest here")

    p = sub.add_parser("sweep-rank", help="final SINR of the fixed-rank RJIO algorithms against D")
    _common(p)
    p.add_argument("--ranks", type=parse_ranks, default=parse_ranks("1..8"))

    p = sub.add_parser("grid-search", help="exhaustive hyperparameter search")
    _common(p)
    p.add_argument("--grid", required=True, help="JSON file: {algorithm: {param: [values]}}")

    p = sub.add_parser("complexity", help="per-snapshot additions and multiplications")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--D", type=int, default=1)

    sub.add_parser("list-scenarios", help="names of the bundled scenarios")
    return ap


def _scenario(args):
    sc = load_scenario(args.scenario)
    kw = {}
    if args.seed is not None:
        kw["master_seed"] = args.seed
    if args.trials is not None:
        kw["num_trials"] = args.trials
    if args.snapshots is not None:
        kw["num_snapshots"] = args.snapshots
        kw["change_events"] = tuple(ev for ev in sc.change_events if ev.snapshot <= args.snapshots)
    return replace(sc, **kw) if kw else sc


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-scenarios":
            for name in bundled_names():
                sc = load_scenario(name)
                print(f"{name}\t{sc.description}")
            return EXIT_OK

        if args.command == "complexity":
            print("algorithm,additions,multiplications")
            for name in COMPLEXITY:
                adds, mults = complexity_counts(name, args.M, args.D)
                print(f"{name},{adds},{mults}")
            return EXIT_OK

        sc = _scenario(args)
        run_kw = {"workers": args.workers, "avg_domain": args.avg_domain}

        if args.command == "run":
            res = run_scenario(sc, **run_kw)
            res.to_csv(args.out or sys.stdout)
            if args.manifest:
                res.write_manifest(args.manifest)
            if res.failed:
                print("divergence limit exceeded: " + json.dumps(res.manifest()["divergence_counts"]),
                      file=sys.stderr)
                return EXIT_DIVERGED
            return EXIT_OK

        if args.command == "sweep-rank":
            rows = sweep_rank(sc, args.ranks, **run_kw)
            write_sweep_csv(rows, args.out or sys.stdout)
            return EXIT_OK

        if args.command == "grid-search":
            try:
                with open(args.grid) as fh:
                    grid = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read grid file: {exc}") from exc
            best = grid_search(sc, grid, **run_kw)
            report = {lbl: {"params": b["params"], "score_db": b["score"]} for lbl, b in best.items()}
            text = json.dumps(report, indent=2) + "\n"
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
