"""
Uniform linear array: steering vectors, presumed-steering mismatch, snapshot
synthesis and the exact covariances used for scoring.

Angles are in degrees at every interface. The array response is
``exp(-2j*pi*m*(d/lambda)*cos(theta))``, so ``theta = 90`` is broadside.
"""
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    num_sensors: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.num_sensors < 2:
            raise ValueError("a ULA needs at least 2 sensors")
        if not self.spacing_ratio > 0:
            raise ValueError("spacing_ratio must be positive")


@dataclass(frozen=True)
class SourceSet:
    soi_doa: float
    interferer_doas: Sequence[float] = ()
    soi_power: float = 1.0
    interferer_powers: Sequence[float] = ()
    noise_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "interferer_doas", tuple(float(d) for d in self.interferer_doas))
        object.__setattr__(self, "interferer_powers", tuple(float(p) for p in self.interferer_powers))
        if len(self.interferer_doas) != len(self.interferer_powers):
            raise ValueError("one power per interferer is required")
        # zero powers are allowed for degenerate test inputs, negatives are not
        if self.soi_power < 0 or self.noise_power < 0 or any(p < 0 for p in self.interferer_powers):
            raise ValueError("powers must be non-negative")

    @property
    def num_sources(self):
        return 1 + len(self.interferer_doas)

    def validate_for(self, geom):
        if self.num_sources >= geom.num_sensors:
            raise ValueError(f"K={self.num_sources} sources need more than {geom.num_sensors} sensors")

    @classmethod
    def from_snr(cls, soi_doa, interferer_doas, snr_db, interferer_powers=None, soi_power=1.0):
        """SNR is ``soi_power / noise_power``."""
        if interferer_powers is None:
            interferer_powers = [soi_power] * len(interferer_doas)
        return cls(soi_doa, interferer_doas, soi_power, interferer_powers,
                   soi_power * 10 ** (-snr_db / 10))


@dataclass(frozen=True)
class MismatchModel:
    kind: str = "none"
    num_paths: int = 4
    doa_stddev: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "coherent_scattering"):
            raise ValueError(f"unknown mismatch kind {self.kind!r}")
        if self.kind == "coherent_scattering" and self.num_paths < 1:
            raise ValueError("coherent scattering needs at least one path")


@dataclass(frozen=True)
class TrueCovariances:
    R: np.ndarray
    R_s: np.ndarray
    R_I: np.ndarray = field(repr=False)


def steering_vector(geom, theta):
    """
    ULA response; ``theta`` may be a scalar or an array of angles.

    Return:
        shape as (..., M) for ``theta`` of shape (...)
    """
    theta = np.deg2rad(np.mod(np.asarray(theta, dtype=float), 360.0))
    m = np.arange(geom.num_sensors)
    phase = -2j * np.pi * geom.spacing_ratio * np.cos(theta)[..., None] * m
    return np.exp(phase)


def steering_matrix(geom, thetas):
    """``A(theta)`` with one steering vector per column, shape (M, K)."""
    return steering_vector(geom, np.asarray(thetas, dtype=float)).T


def draw_scattering(mismatch, soi_doa, rng):
    """Per-trial path phases and angles for the coherent-scattering model."""
    phases = rng.uniform(0.0, 2 * np.pi, size=mismatch.num_paths)
    angles = rng.normal(soi_doa, mismatch.doa_stddev, size=mismatch.num_paths)
    return phases, angles


def presumed_steering(geom, soi_doa, mismatch, trial_rng=None, phases=None, angles=None):
    """
    Presumed SoI steering vector ``a(theta_k) + sum_p exp(j phi_p) a(theta_p)``.

    ``phases``/``angles`` override the random draw (both or neither); otherwise
    they come from ``trial_rng``, one draw per trial.
    """
    a = steering_vector(geom, soi_doa)
    if mismatch.kind == "none":
        return a
    if phases is None or angles is None:
        if trial_rng is None:
            trial_rng = np.random.default_rng(mismatch.rng_seed)
        phases, angles = draw_scattering(mismatch, soi_doa, trial_rng)
    scatter = steering_vector(geom, np.asarray(angles, dtype=float))
    return a + np.exp(1j * np.asarray(phases, dtype=float)) @ scatter


def _source_arrays(sources):
    doas = np.array((sources.soi_doa,) + sources.interferer_doas)
    powers = np.array((sources.soi_power,) + sources.interferer_powers)
    return doas, powers


def circular_gaussian(rng, shape):
    """Unit-variance circular complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def synthesize_snapshots(geom, sources, trial_rng, num=None):
    """
    Snapshots ``r = A s + n``.

    Return:
        shape as (M,) when ``num`` is None, else (num, M)
    """
    doas, powers = _source_arrays(sources)
    A = steering_matrix(geom, doas)
    shape = () if num is None else (num,)
    s = circular_gaussian(trial_rng, shape + (len(doas),)) * np.sqrt(powers)
    n = circular_gaussian(trial_rng, shape + (geom.num_sensors,)) * np.sqrt(sources.noise_power)
    return s @ A.T + n


def synthesize_snapshot(geom, sources, trial_rng):
    return synthesize_snapshots(geom, sources, trial_rng)


def true_covariances(geom, sources):
    doas, powers = _source_arrays(sources)
    A = steering_matrix(geom, doas)
    a_k = A[:, 0]
    R_s = powers[0] * np.outer(a_k, np.conj(a_k))
    A_i = A[:, 1:]
    R_I = (A_i * powers[1:]) @ np.conj(A_i).T + sources.noise_power * np.eye(geom.num_sensors)
    return TrueCovariances(R=R_s + R_I, R_s=R_s, R_I=R_I)
