"""
Monte Carlo execution and SINR scoring.

Each trial draws its own presumed steering vector, interferer powers and
snapshots from an independent substream keyed by ``(master_seed, trial)``, so
traces do not depend on how trials are chunked or scheduled. All algorithms
of a scenario see the same snapshots within a trial. SINR is always scored
against the exact covariances of the environment active at that snapshot.
"""
import contextlib
import csv
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..array_model import presumed_steering, steering_vector, synthesize_snapshots, true_covariances
from .algorithms import Context, make_runner
from .scenario import ConfigError, trial_sources

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 0.05
TAIL_FRACTION = 0.1


@contextlib.contextmanager
def _writer(dest):
    if hasattr(dest, "write"):
        yield csv.writer(dest)
    else:
        with open(dest, "w", newline="") as fh:
            yield csv.writer(fh)


def sinr(w, R_s, R_I):
    """
    Output SINR in dB, ``10 log10(w^H R_s w / w^H R_I w)``; broadcasts over
    leading axes. Scale invariant in ``w``.
    """
    num = np.einsum("...m,...mn,...n->...", np.conj(w), R_s, w).real
    den = np.einsum("...m,...mn,...n->...", np.conj(w), R_I, w).real
    if np.any(den <= 0):
        raise ZeroDivisionError("interference-plus-noise output power is zero")
    with np.errstate(divide="ignore"):
        return 10 * np.log10(num / den)


@dataclass
class SinrTrace:
    label: str
    algorithm: str
    mean_sinr_db: np.ndarray
    selected_rank: Optional[np.ndarray]
    num_trials: int
    excluded: int = 0

    def tail_mean(self, fraction=TAIL_FRACTION):
        """Mean over the last ``fraction`` of snapshots (at least one)."""
        n = max(1, int(round(fraction * len(self.mean_sinr_db))))
        return float(np.mean(self.mean_sinr_db[-n:]))


@dataclass
class RunResult:
    scenario: object
    trial_indices: np.ndarray
    # label -> (T, N) per-trial SINR in dB
    per_trial: dict
    # label -> (T, N) selected rank, adaptive-rank algorithms only
    per_trial_rank: dict
    # label -> (T,) bool
    divergent: dict
    avg_domain: str = "db"
    wall_time: float = 0.0
    traces: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.traces:
            self.traces = self._reduce()

    def _reduce(self):
        out = {}
        names = {a.label: a.name for a in self.scenario.algorithms}
        for label, vals in self.per_trial.items():
            keep = ~self.divergent[label]
            used = vals[keep]
            if not keep.any():
                mean = np.full(vals.shape[1], np.nan)
            elif self.avg_domain == "linear":
                mean = 10 * np.log10(np.mean(10 ** (used / 10), axis=0))
            else:
                mean = np.mean(used, axis=0)
            rank = None
            if label in self.per_trial_rank and keep.any():
                rank = np.mean(self.per_trial_rank[label][keep], axis=0)
            out[label] = SinrTrace(label, names.get(label, label), mean, rank,
                                   int(keep.sum()), int((~keep).sum()))
        return out

    @property
    def num_trials(self):
        return len(self.trial_indices)

    def divergence_fraction(self, label):
        return float(np.mean(self.divergent[label]))

    @property
    def failed(self):
        """True when any algorithm diverged on more than 5% of trials."""
        return any(self.divergence_fraction(lbl) > DIVERGENCE_LIMIT for lbl in self.per_trial)

    def to_csv(self, dest):
        """Write ``snapshot,algorithm,mean_sinr_db[,selected_rank]`` to a path or open file."""
        has_rank = any(t.selected_rank is not None for t in self.traces.values())
        with _writer(dest) as wr:
            wr.writerow(["snapshot", "algorithm", "mean_sinr_db"] + (["selected_rank"] if has_rank else []))
            for label, tr in self.traces.items():
                for i, v in enumerate(tr.mean_sinr_db):
                    row = [i + 1, label, f"{v:.6f}"]
                    if has_rank:
                        row.append("" if tr.selected_rank is None else f"{tr.selected_rank[i]:.4f}")
                    wr.writerow(row)

    def manifest(self):
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.master_seed,
            "config_hash": self.scenario.config_hash(),
            "num_trials": self.num_trials,
            "num_snapshots": self.scenario.num_snapshots,
            "avg_domain": self.avg_domain,
            "divergence_counts": {lbl: int(d.sum()) for lbl, d in self.divergent.items()},
            "wall_time_s": round(self.wall_time, 3),
        }

    def write_manifest(self, path):
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2)

    @classmethod
    def merge(cls, *results):
        """Concatenate runs over disjoint trial sets of the same scenario."""
        first = results[0]
        order = np.argsort(np.concatenate([r.trial_indices for r in results]), kind="stable")

        def cat(attr):
            return {lbl: np.concatenate([getattr(r, attr)[lbl] for r in results])[order]
                    for lbl in getattr(first, attr)}
        return cls(first.scenario, np.concatenate([r.trial_indices for r in results])[order],
                   cat("per_trial"), cat("per_trial_rank"), cat("divergent"), first.avg_domain,
                   sum(r.wall_time for r in results))


def trial_rngs(master_seed, trial):
    """Independent generators for mismatch, interferer powers and snapshots."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(int(trial),))
    return [np.random.default_rng(child) for child in ss.spawn(3)]


def _trial_data(scenario, trial):
    geom = scenario.geometry
    mm_rng, pw_rng, snap_rng = trial_rngs(scenario.master_seed, trial)
    a_p = presumed_steering(geom, scenario.sources.soi_doa, scenario.mismatch, mm_rng)
    X = np.empty((scenario.num_snapshots, geom.num_sensors), dtype=complex)
    covs = []
    for start, stop, sources in scenario.segments():
        src = trial_sources(sources, scenario.power_spread_db, pw_rng)
        covs.append(true_covariances(geom, src))
        X[start:stop] = synthesize_snapshots(geom, src, snap_rng, stop - start)
    return a_p, X, covs


def _run_chunk(scenario, trials):
    data = [_trial_data(scenario, t) for t in trials]
    a_p = np.stack([d[0] for d in data])
    X = np.stack([d[1] for d in data])
    segs = scenario.segments()
    covs = [(np.stack([d[2][k].R for d in data]),
             np.stack([d[2][k].R_s for d in data]),
             np.stack([d[2][k].R_I for d in data])) for k in range(len(segs))]
    M = scenario.geometry.num_sensors
    power = np.sum(np.abs(X[:, 0]) ** 2, axis=1) / M
    ctx = Context(scenario.geometry, steering_vector(scenario.geometry, scenario.sources.soi_doa),
                  a_p, power)
    T, N = len(trials), scenario.num_snapshots
    per_trial, per_rank, divergent = {}, {}, {}
    for spec in scenario.algorithms:
        runner = make_runner(spec, ctx)
        out = np.empty((T, N))
        ranks = None
        for (start, stop, _), (R, R_s, R_I) in zip(segs, covs):
            runner.set_environment(R)
            if not runner.adaptive:
                out[:, start:stop] = sinr(runner.weights, R_s, R_I)[:, None]
                continue
            for i in range(start, stop):
                runner.step(X[:, i])
                out[:, i] = sinr(runner.weights, R_s, R_I)
                if runner.rank is not None:
                    if ranks is None:
                        ranks = np.empty((T, N))
                    ranks[:, i] = runner.rank
        per_trial[spec.label] = out
        if ranks is not None:
            per_rank[spec.label] = ranks
        divergent[spec.label] = ~np.all(np.isfinite(out), axis=1) | (np.asarray(runner.diverged) > 0)
    return per_trial, per_rank, divergent


def run_scenario(scenario, trials=None, workers=1, avg_domain="db", chunk_size=50):
    """
    Run every configured algorithm over ``scenario.num_trials`` trials (or the
    explicit trial indices ``trials``) and reduce to per-snapshot mean SINR.
    """
    if avg_domain not in ("db", "linear"):
        raise ConfigError("avg_domain must be 'db' or 'linear'")
    if not scenario.algorithms:
        raise ConfigError("scenario lists no algorithms")
    labels = [a.label for a in scenario.algorithms]
    if len(set(labels)) != len(labels):
        raise ConfigError("algorithm labels must be unique")
    trials = np.arange(scenario.num_trials) if trials is None else np.asarray(trials, dtype=int)
    chunks = [trials[k:k + chunk_size] for k in range(0, len(trials), chunk_size)]
    t0 = time.perf_counter()
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, itertools.repeat(scenario), chunks))
    else:
        parts = [_run_chunk(scenario, c) for c in chunks]

    def cat(k):
        return {lbl: np.concatenate([p[k][lbl] for p in parts]) for lbl in parts[0][k]}
    result = RunResult(scenario, trials, cat(0), cat(1), cat(2), avg_domain, time.perf_counter() - t0)
    for lbl in labels:
        frac = result.divergence_fraction(lbl)
        if frac > 0:
            log.warning("%s: %d of %d trials diverged", lbl, int(result.divergent[lbl].sum()), len(trials))
    return result


RANKED = ("rjio-sg", "rjio-rls")


def sweep_rank(scenario, ranks, **run_kw):
    """
    Run the fixed-rank RJIO algorithms of ``scenario`` once per rank.

    Return:
        list of ``(D, label, final_mean_sinr_db)`` rows, where the final value
        is the trial-mean SINR averaged over the last 10% of snapshots
    """
    specs = [a for a in scenario.algorithms if a.name in RANKED]
    if not specs:
        raise ConfigError("scenario has no fixed-rank RJIO algorithm to sweep")
    rows = []
    M = scenario.geometry.num_sensors
    for D in ranks:
        if not 1 <= D <= M:
            raise ConfigError(f"rank {D} outside [1, {M}]")
        sc = scenario.with_algorithms([a.with_params(rank=int(D)) for a in specs])
        res = run_scenario(sc, **run_kw)
        rows.extend((int(D), a.label, res.traces[a.label].tail_mean()) for a in specs)
    return rows


def write_sweep_csv(rows, dest):
    with _writer(dest) as wr:
        wr.writerow(["rank", "algorithm", "final_mean_sinr_db"])
        for D, label, v in rows:
            wr.writerow([D, label, f"{v:.6f}"])


def expand_grid(grid):
    """Cartesian product of ``{param: [values]}`` in listed order."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("empty parameter grid")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def grid_search(scenario, param_grid, **run_kw):
    """
    Exhaustive search per algorithm.

    ``param_grid`` maps an algorithm label (or name) to ``{param: [values]}``.
    Candidates are scored by the mean SINR over the last 10% of snapshots.
    A candidate with any divergent trial is only chosen when no candidate is
    divergence-free; ties keep the first-listed candidate.

    Return:
        ``{label: {"params": ..., "score": ..., "candidates": [...]}}``
    """
    if not param_grid:
        raise ConfigError("empty parameter grid")
    specs, owners = [], {}
    for spec in scenario.algorithms:
        grid = param_grid.get(spec.label, param_grid.get(spec.name))
        if grid is None:
            continue
        for k, params in enumerate(expand_grid(grid)):
            cand = spec.with_params(label=f"{spec.label}#{k}", **params)
            specs.append(cand)
            owners[cand.label] = (spec.label, {**spec.params, **params})
    if not specs:
        raise ConfigError("parameter grid matches no algorithm in the scenario")
    res = run_scenario(scenario.with_algorithms(specs), **run_kw)
    best = {}
    for cand in specs:
        label, params = owners[cand.label]
        score = res.traces[cand.label].tail_mean()
        clean = res.traces[cand.label].excluded == 0 and np.isfinite(score)
        entry = best.setdefault(label, {"params": None, "score": -np.inf, "clean": False, "candidates": []})
        entry["candidates"].append({"params": params, "score": score,
                                    "divergent_trials": res.traces[cand.label].excluded})
        better = (clean and not entry["clean"]) or (clean == entry["clean"] and score > entry["score"])
        if entry["params"] is None or better:
            entry.update(params=params, score=score, clean=clean)
    return best


def convergence_index(trace, target):
    """First 1-based snapshot at which ``trace`` reaches ``target``; None if never."""
    hits = np.flatnonzero(np.asarray(trace) >= target)
    return int(hits[0]) + 1 if hits.size else None
