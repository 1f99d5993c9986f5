"""
Scenario description and JSON loading.

Scenario files use degrees for angles, linear units for powers and dB for the
SNR and the interferer power spread. ``angle_reference`` selects how DoAs in
the file are read: ``"endfire"`` passes them straight to the array response
(``cos`` convention), ``"broadside"`` measures them from the array normal and
converts with ``theta = 90 - theta_broadside``.
"""
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from ..array_model import ArrayGeometry, MismatchModel, SourceSet


class ConfigError(ValueError):
    """Invalid scenario or grid file."""


ALGORITHMS = (
    "optimal",
    "loaded-lcmv",
    "lcmv-sg",
    "lcmv-rls",
    "rjio-sg",
    "rjio-rls",
    "rjio-sg-adapt",
    "rjio-rls-adapt",
)


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    label: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.name!r}; choose from {', '.join(ALGORITHMS)}")
        if self.label is None:
            object.__setattr__(self, "label", self.name)

    def with_params(self, label=None, **params):
        return replace(self, label=label or self.label, params={**self.params, **params})


@dataclass(frozen=True)
class ChangeEvent:
    snapshot: int  # 1-based index of the first snapshot in the new environment
    sources: SourceSet


@dataclass(frozen=True)
class Scenario:
    name: str
    geometry: ArrayGeometry
    sources: SourceSet
    mismatch: MismatchModel = MismatchModel()
    num_snapshots: int = 250
    num_trials: int = 200
    change_events: tuple = ()
    algorithms: tuple = ()
    master_seed: int = 0
    # per-trial log-normal interferer power spread (dB std), 0 = fixed powers
    power_spread_db: float = 0.0
    description: str = ""

    def __post_init__(self):
        if self.num_snapshots < 1 or self.num_trials < 1:
            raise ConfigError("num_snapshots and num_trials must be at least 1")
        idx = [ev.snapshot for ev in self.change_events]
        if idx != sorted(idx):
            raise ConfigError("change events must be sorted by snapshot index")
        if any(not 1 <= i <= self.num_snapshots for i in idx):
            raise ConfigError("change event outside the snapshot range")
        try:
            self.sources.validate_for(self.geometry)
            for ev in self.change_events:
                ev.sources.validate_for(self.geometry)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def segments(self):
        """``(start, stop, SourceSet)`` with 0-based half-open snapshot ranges."""
        bounds = [0] + [ev.snapshot - 1 for ev in self.change_events] + [self.num_snapshots]
        sets = [self.sources] + [ev.sources for ev in self.change_events]
        return [(bounds[k], bounds[k + 1], sets[k]) for k in range(len(sets))
                if bounds[k + 1] > bounds[k]]

    def replace(self, **kw):
        return replace(self, **kw)

    def with_algorithms(self, specs):
        return replace(self, algorithms=tuple(specs))

    def config_hash(self):
        return hashlib.sha256(json.dumps(to_dict(self), sort_keys=True).encode()).hexdigest()[:16]


def _angles(values, reference):
    values = [float(v) for v in values]
    if reference == "broadside":
        return [90.0 - v for v in values]
    if reference == "endfire":
        return values
    raise ConfigError(f"unknown angle_reference {reference!r}")


def _sources(raw, soi_doa, soi_power, noise_power, reference):
    doas = raw.get("interferer_doas", [])
    if "interferer_powers" in raw:
        powers = [float(p) for p in raw["interferer_powers"]]
    elif "interferer_powers_db" in raw:
        powers = [soi_power * 10 ** (float(p) / 10) for p in raw["interferer_powers_db"]]
    else:
        powers = [soi_power] * len(doas)
    if len(powers) != len(doas):
        raise ConfigError("interferer_doas and interferer powers differ in length")
    return SourceSet(soi_doa, _angles(doas, reference), soi_power, powers, noise_power)


def from_dict(raw):
    try:
        ref = raw.get("angle_reference", "endfire")
        geom = ArrayGeometry(int(raw["num_sensors"]), float(raw.get("spacing_ratio", 0.5)))
        soi_power = float(raw.get("soi_power", 1.0))
        if "noise_power" in raw:
            noise = float(raw["noise_power"])
        else:
            noise = soi_power * 10 ** (-float(raw["snr_db"]) / 10)
        soi_doa = _angles([raw["soi_doa"]], ref)[0]
        sources = _sources(raw, soi_doa, soi_power, noise, ref)
        mm = raw.get("mismatch", {"kind": "none"})
        mismatch = MismatchModel(mm.get("kind", "none"), int(mm.get("num_paths", 4)),
                                 float(mm.get("doa_stddev", 2.0)), int(mm.get("rng_seed", 0)))
        events = tuple(ChangeEvent(int(ev["snapshot"]), _sources(ev, soi_doa, soi_power, noise, ref))
                       for ev in raw.get("change_events", []))
        algos = tuple(AlgorithmSpec(a["name"], a.get("label"), dict(a.get("params", {})))
                      for a in raw.get("algorithms", []))
        return Scenario(
            name=raw.get("name", "scenario"),
            geometry=geom,
            sources=sources,
            mismatch=mismatch,
            num_snapshots=int(raw.get("num_snapshots", 250)),
            num_trials=int(raw.get("num_trials", 200)),
            change_events=events,
            algorithms=algos,
            master_seed=int(raw.get("master_seed", 0)),
            power_spread_db=float(raw.get("interferer_power_spread_db", 0.0)),
            description=raw.get("description", ""),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def to_dict(s):
    """Endfire-referenced dictionary that round-trips through ``from_dict``."""
    def src(ss):
        return {"interferer_doas": list(ss.interferer_doas),
                "interferer_powers": list(ss.interferer_powers)}
    return {
        "name": s.name,
        "description": s.description,
        "angle_reference": "endfire",
        "num_sensors": s.geometry.num_sensors,
        "spacing_ratio": s.geometry.spacing_ratio,
        "soi_doa": s.sources.soi_doa,
        "soi_power": s.sources.soi_power,
        "noise_power": s.sources.noise_power,
        **src(s.sources),
        "interferer_power_spread_db": s.power_spread_db,
        "mismatch": asdict(s.mismatch),
        "num_snapshots": s.num_snapshots,
        "num_trials": s.num_trials,
        "master_seed": s.master_seed,
        "change_events": [{"snapshot": ev.snapshot, **src(ev.sources)} for ev in s.change_events],
        "algorithms": [{"name": a.name, "label": a.label, "params": a.params} for a in s.algorithms],
    }


def bundled_names():
    root = resources.files("rrbeam.harness") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(name_or_path):
    """Load a bundled scenario by name, or a JSON file by path."""
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"scenario file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    else:
        res = resources.files("rrbeam.harness") / "scenarios" / f"{name_or_path}.json"
        if not res.is_file():
            raise ConfigError(f"no bundled scenario named {name_or_path!r} "
                              f"(available: {', '.join(bundled_names())})")
        raw = json.loads(res.read_text())
    return from_dict(raw)


def trial_sources(sources, spread_db, rng):
    """Per-trial interferer powers, log-normal around the nominal values."""
    if spread_db <= 0 or not sources.interferer_powers:
        return sources
    gains = 10 ** (rng.normal(0.0, spread_db, size=len(sources.interferer_powers)) / 10)
    return replace(sources, interferer_powers=tuple(np.asarray(sources.interferer_powers) * gains))
