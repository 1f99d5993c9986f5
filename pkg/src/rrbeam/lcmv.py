"""
Closed-form LCMV beamformers (plain and diagonally loaded, full and reduced
rank) and the classical full-rank adaptive baselines: Frost's projected
stochastic gradient and the constrained RLS.
"""
from dataclasses import dataclass

import numpy as np

from .numerics import (
    NonFiniteError,
    SingularMatrixError,
    hermitian,
    rank_one_inverse_update,
    solve_hermitian,
)

CONSTRAINT_TOL = 1e-8


@dataclass(frozen=True)
class FullRankBeamformer:
    w: np.ndarray
    a_c: np.ndarray

    def response(self):
        """Constraint response ``w^H a_c`` (should be 1)."""
        return np.einsum("...m,...m->...", np.conj(self.w), self.a_c)

    def output(self, r):
        return np.einsum("...m,...m->...", np.conj(self.w), r)


@dataclass(frozen=True)
class ReducedRankBeamformer:
    w_bar: np.ndarray
    S_D: np.ndarray
    a_c: np.ndarray

    @property
    def rank(self):
        return self.S_D.shape[-1]

    @property
    def effective(self):
        """Full-rank equivalent weight ``S_D w_bar``."""
        return self.S_D @ self.w_bar

    def response(self):
        return np.vdot(self.effective, self.a_c)


@dataclass(frozen=True)
class LoadingConfig:
    eps2: float = 0.0

    def __post_init__(self):
        if self.eps2 < 0:
            raise ValueError("loading must be non-negative")


def _mvdr(R, a):
    Ria = solve_hermitian(R, a)
    return Ria / np.vdot(a, Ria).real


def optimal_lcmv(R, a):
    """``w = R^-1 a / (a^H R^-1 a)``."""
    R = np.asarray(R, dtype=complex)
    a = np.asarray(a, dtype=complex)
    if R.shape[0] != a.shape[0]:
        raise ValueError("dimension mismatch between R and a")
    return FullRankBeamformer(_mvdr(R, a), a)


def loaded_lcmv(R, a_p, eps2):
    """Diagonally loaded LCMV, ``(R + eps2 I)^-1 a_p`` normalized to unit response."""
    LoadingConfig(eps2)
    R = np.asarray(R, dtype=complex)
    a_p = np.asarray(a_p, dtype=complex)
    return FullRankBeamformer(_mvdr(R + eps2 * np.eye(R.shape[0]), a_p), a_p)


def reduced_rank_lcmv(R, S_D, a, eps2=0.0):
    """
    Reduced-rank (optionally loaded) LCMV for a given rank-reduction matrix.

    ``w_bar = (S^H R S + eps2 I_D)^-1 S^H a / (a^H S (.)^-1 S^H a)``
    """
    LoadingConfig(eps2)
    R = np.asarray(R, dtype=complex)
    S_D = np.asarray(S_D, dtype=complex)
    a = np.asarray(a, dtype=complex)
    M, D = S_D.shape
    if not 1 <= D <= M:
        raise ValueError(f"rank D={D} outside [1, {M}]")
    if np.linalg.matrix_rank(S_D) < D:
        raise SingularMatrixError("rank-reduction matrix is column-rank deficient")
    R_bar = hermitian(S_D) @ R @ S_D
    R_bar = 0.5 * (R_bar + hermitian(R_bar)) + eps2 * np.eye(D)
    a_bar = hermitian(S_D) @ a
    return ReducedRankBeamformer(_mvdr(R_bar, a_bar), S_D, a)


def lcmv_sg_step(state, r, mu):
    """
    Frost projected-gradient update.

    ``w <- Pi [w - mu x* r] + a_c / (a_c^H a_c)`` with ``x = w^H r`` and
    ``Pi = I - a_c a_c^H / (a_c^H a_c)``. Broadcasts over leading axes.
    """
    if not mu > 0:
        raise ValueError("step size must be positive")
    w, a = state.w, state.a_c
    x = np.einsum("...m,...m->...", np.conj(w), r)
    aa = np.einsum("...m,...m->...", np.conj(a), a).real
    v = w - mu * np.conj(x)[..., None] * r
    proj = np.einsum("...m,...m->...", np.conj(a), v) / aa
    w_new = v - a * proj[..., None] + a / aa[..., None]
    return FullRankBeamformer(w_new, a)


def lcmv_rls_init(a_c, delta):
    """Constrained-RLS start: ``P = delta I`` and ``w = a_c / ||a_c||^2``."""
    a_c = np.asarray(a_c, dtype=complex)
    M = a_c.shape[-1]
    P = delta * np.broadcast_to(np.eye(M, dtype=complex), a_c.shape[:-1] + (M, M)).copy()
    aa = np.einsum("...m,...m->...", np.conj(a_c), a_c).real
    return FullRankBeamformer(a_c / aa[..., None], a_c), P


def lcmv_rls_step(state, P_prev, r, alpha, check=True):
    """
    Constrained RLS: inverse-covariance update followed by
    ``w = P a_c / (a_c^H P a_c)``.
    """
    if not 0 < alpha <= 1:
        raise ValueError("forgetting factor must lie in (0, 1]")
    a = state.a_c
    _, P = rank_one_inverse_update(P_prev, r, alpha, check=check)
    Pa = np.einsum("...mn,...n->...m", P, a)
    w = Pa / np.einsum("...m,...m->...", np.conj(a), Pa).real[..., None]
    if check and not np.all(np.isfinite(w)):
        raise NonFiniteError("non-finite beamformer in constrained RLS")
    return FullRankBeamformer(w, a), P
