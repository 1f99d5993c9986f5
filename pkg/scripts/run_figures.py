#!/usr/bin/env python3
"""
Run every bundled scenario and the rank sweep, writing one CSV per figure.

    python3 scripts/run_figures.py --outdir results --trials 200 --workers 4

Prints a one-line summary per algorithm (tail-mean SINR, excluded trials,
and mean selected rank where applicable).
"""
import argparse
import logging
import os
from dataclasses import replace

from rrbeam.harness import load_scenario, run_scenario
from rrbeam.harness.runner import sweep_rank, write_sweep_csv
from rrbeam.harness.scenario import bundled_names


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--trials", type=int, help="override the number of trials")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--ranks", default="1,2,3,4,5,6,8", help="comma-separated ranks for the sweep")
    ap.add_argument("--sweep-scenario", default="fig_rank")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    os.makedirs(args.outdir, exist_ok=True)

    def load(name):
        sc = load_scenario(name)
        return replace(sc, num_trials=args.trials) if args.trials else sc

    for name in bundled_names():
        res = run_scenario(load(name), workers=args.workers)
        res.to_csv(os.path.join(args.outdir, f"{name}.csv"))
        res.write_manifest(os.path.join(args.outdir, f"{name}.manifest.json"))
        for label, tr in res.traces.items():
            rank = "" if tr.selected_rank is None else f"  rank {tr.selected_rank[-1]:.2f}"
            print(f"{name:18s} {label:18s} {tr.tail_mean():7.2f} dB  excluded {tr.excluded}{rank}", flush=True)

    ranks = [int(x) for x in args.ranks.split(",")]
    rows = sweep_rank(load(args.sweep_scenario), ranks, workers=args.workers)
    write_sweep_csv(rows, os.path.join(args.outdir, "rank_sweep.csv"))
    for D, label, v in rows:
        print(f"sweep D={D:<2d} {label:18s} {v:7.2f} dB", flush=True)


if __name__ == "__main__":
    main()
