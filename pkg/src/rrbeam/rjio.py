"""
Robust joint iterative optimization (RJIO) of a rank-reduction matrix S_D,
a reduced-rank beamformer w_bar and a diagonal-loading level eps.

The output is ``x = w_bar^H S_D^H r``; the constraint is
``w_bar^H S_D^H a_p = 1``. All state arrays may carry leading batch axes, one
independent chain per leading index.

The loading variable stored is ``eps >= 0``. The SG recursions use ``eps``
where it multiplies the gradient terms; the RLS recursions add ``eps**2`` to
the inverse-covariance estimates.
"""
import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .numerics import hermitian, rank_one_inverse_update, symmetrize

# |c| below this makes the constraint renormalization ill-posed
_MIN_RESPONSE = 1e-12


@dataclass(frozen=True)
class RjioHyperParams:
    rank: int = 4
    mu_s: float = 1e-3
    mu_w: float = 1e-3
    mu_eps: float = 1e-4
    alpha: float = 0.998
    delta: float = 100.0
    delta_bar: float = 100.0
    # None -> 0.01 * snapshot power estimate at init
    eps0: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("forgetting factor must lie in (0, 1)")
        if min(self.mu_s, self.mu_w, self.mu_eps) < 0:
            raise ValueError("step sizes must be non-negative")
        if self.delta <= 0 or self.delta_bar <= 0:
            raise ValueError("RLS init constants must be positive")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.eps0 is not None and self.eps0 < 0:
            raise ValueError("initial loading must be non-negative")


@dataclass(frozen=True)
class RjioState:
    S: np.ndarray
    w: np.ndarray
    eps: np.ndarray
    a_p: np.ndarray
    P: Optional[np.ndarray] = None
    P_bar: Optional[np.ndarray] = None
    # rejected steps per chain
    diverged: np.ndarray = field(default=None)

    @property
    def rank(self):
        return self.S.shape[-1]

    @property
    def num_sensors(self):
        return self.S.shape[-2]

    def effective(self):
        """Full-rank equivalent weight ``S_D w_bar``."""
        return np.einsum("...md,...d->...m", self.S, self.w)

    def response(self):
        """``w_bar^H S_D^H a_p``."""
        return np.einsum("...m,...m->...", np.conj(self.effective()), self.a_p)

    def to_json(self):
        """Serialize with complex numbers as ``[re, im]`` pairs."""
        def enc(x):
            if x is None:
                return None
            x = np.asarray(x)
            if np.iscomplexobj(x):
                return np.stack([x.real, x.imag], axis=-1).tolist()
            return x.tolist()
        return json.dumps({name: enc(getattr(self, name))
                           for name in ("S", "w", "eps", "a_p", "P", "P_bar", "diverged")})

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)

        def dec(x, cplx=True):
            if x is None:
                return None
            x = np.asarray(x, dtype=float)
            return x[..., 0] + 1j * x[..., 1] if cplx else x
        return cls(S=dec(raw["S"]), w=dec(raw["w"]), eps=dec(raw["eps"], False),
                   a_p=dec(raw["a_p"]), P=dec(raw["P"]), P_bar=dec(raw["P_bar"]),
                   diverged=np.asarray(raw["diverged"], dtype=int))


def rjio_init(M, hp, a_p, power=1.0, rls=False):
    """
    Initial state: ``S_D = [I_D; 0]``, ``w_bar = e_1``, ``P = delta I_M``,
    ``P_bar = delta_bar I_D``.

    ``a_p`` may be batched, shape (..., M); ``power`` is the per-sensor
    snapshot power estimate that sets the default initial loading.
    """
    D = hp.rank
    if D > M:
        raise ValueError(f"rank D={D} exceeds the number of sensors M={M}")
    a_p = np.asarray(a_p, dtype=complex)
    if a_p.shape[-1] != M:
        raise ValueError("presumed steering vector length must equal M")
    batch = a_p.shape[:-1]
    S = np.zeros(batch + (M, D), dtype=complex)
    S[..., :D, :D] = np.eye(D)
    w = np.zeros(batch + (D,), dtype=complex)
    w[..., 0] = 1.0
    eps0 = 0.01 * np.asarray(power, dtype=float) if hp.eps0 is None else hp.eps0
    eps = np.broadcast_to(np.asarray(eps0, dtype=float), batch).copy()
    P = P_bar = None
    if rls:
        P = hp.delta * np.broadcast_to(np.eye(M, dtype=complex), batch + (M, M)).copy()
        P_bar = hp.delta_bar * np.broadcast_to(np.eye(D, dtype=complex), batch + (D, D)).copy()
    return RjioState(S, w, eps, a_p, P, P_bar, np.zeros(batch, dtype=int))


def rjio_output(state, r):
    """``x = w_bar^H (S_D^H r)``."""
    r_bar = np.einsum("...md,...m->...d", np.conj(state.S), r)
    return np.einsum("...d,...d->...", np.conj(state.w), r_bar)


def _vdot(x, y):
    return np.einsum("...i,...i->...", np.conj(x), y)


def _normalize(S, w, a_p):
    """Scale ``w`` so that ``w^H S^H a_p = 1``; returns (w, |response|)."""
    c = _vdot(np.einsum("...md,...d->...m", S, w), a_p)
    safe = np.where(np.abs(c) > _MIN_RESPONSE, c, 1.0)
    return w / np.conj(safe)[..., None], np.abs(c)


def _accept(old, new, ok):
    """Keep rows of ``new`` where ``ok`` holds, else the old rows."""
    if old is None:
        return None
    mask = ok.reshape(ok.shape + (1,) * (new.ndim - ok.ndim))
    return np.where(mask, new, old)


def _finite(*arrays, batch_ndim):
    ok = True
    for x in arrays:
        axes = tuple(range(batch_ndim, x.ndim))
        ok = ok & np.all(np.isfinite(x), axis=axes) if axes else ok & np.isfinite(x)
    return ok


def _commit(state, ok, **new):
    merged = {name: _accept(getattr(state, name), value, ok) for name, value in new.items()}
    diverged = state.diverged + (~ok).astype(int)
    return replace(state, diverged=diverged, **merged)


# rejected rows may pass through inf/nan on the way; they never leave the step
@np.errstate(all="ignore")
def rjio_sg_step(state, r, hp):
    """
    One stochastic-gradient RJIO update (S_D, then w_bar, then eps).

    The gradient terms are evaluated at the current ``(S_D, w_bar, eps)``
    with ``x = w_bar^H S_D^H r``; afterwards ``w_bar`` is rescaled so the
    constraint holds exactly. Rows producing non-finite values are rejected
    and their divergence counter is incremented.
    """
    S, w, eps, a = state.S, state.w, state.eps, state.a_p
    x = rjio_output(state, r)
    xc = np.conj(x)
    wh = np.conj(w)
    Sw = np.einsum("...md,...d->...m", S, w)
    aa = _vdot(a, a).real
    ar = _vdot(a, r)

    # S_D: gradient x* r w^H + eps S w w^H, minus its component along a_p
    corr = (xc * ar + eps) / aa
    G = (xc[..., None] * r - corr[..., None] * a + eps[..., None] * Sw)[..., :, None] * wh[..., None, :]
    S_new = S - hp.mu_s * G

    # w_bar: gradient x* S^H r + eps S^H S w, projected orthogonally to S^H a_p
    r_bar = np.einsum("...md,...m->...d", np.conj(S), r)
    g = xc[..., None] * r_bar + eps[..., None] * np.einsum("...md,...m->...d", np.conj(S), Sw)
    a_bar = np.einsum("...md,...m->...d", np.conj(S), a)
    g = g - a_bar * (_vdot(a_bar, g) / _vdot(a_bar, a_bar).real)[..., None]
    w_new = w - hp.mu_w * g

    # eps(i+1) = eps(i) - mu_eps ||S w||^2, clamped at zero
    eps_new = np.maximum(eps - hp.mu_eps * _vdot(Sw, Sw).real, 0.0)

    w_new, resp = _normalize(S_new, w_new, a)
    batch_ndim = w.ndim - 1
    ok = _finite(S_new, w_new, eps_new, batch_ndim=batch_ndim) & (resp > _MIN_RESPONSE)
    return _commit(state, ok, S=S_new, w=w_new, eps=eps_new)


@np.errstate(all="ignore")
def rjio_rls_step(state, r, hp):
    """
    One RLS RJIO update.

    Order: P with ``r`` (plus ``eps^2 I_M``); S_D from P, a_p and the previous
    S_D; P_bar with ``r_bar = S_D^H r`` (plus ``eps^2 I_D``); w_bar from P_bar;
    then eps, clamped at zero.
    """
    if state.P is None or state.P_bar is None:
        raise ValueError("state was initialised without RLS matrices")
    S_prev, a, eps = state.S, state.a_p, state.eps
    load = eps ** 2
    _, P = rank_one_inverse_update(state.P, r, hp.alpha, loading=load, check=False)

    # S_D(i) = P a a^H S_D(i-1) / (a^H P a)
    Pa = np.einsum("...mn,...n->...m", P, a)
    aPa = _vdot(a, Pa).real
    aS = np.einsum("...m,...md->...d", np.conj(a), S_prev)
    S = Pa[..., :, None] * aS[..., None, :] / aPa[..., None, None]

    r_bar = np.einsum("...md,...m->...d", np.conj(S), r)
    _, P_bar = rank_one_inverse_update(state.P_bar, r_bar, hp.alpha, loading=load, check=False)

    # w_bar(i) = P_bar a_bar / (a_bar^H P_bar a_bar)
    a_bar = np.einsum("...md,...m->...d", np.conj(S), a)
    Pa_bar = np.einsum("...de,...e->...d", P_bar, a_bar)
    w = Pa_bar / _vdot(a_bar, Pa_bar).real[..., None]

    Sw = np.einsum("...md,...d->...m", S, w)
    eps_new = np.maximum(eps - hp.mu_eps * _vdot(Sw, Sw).real, 0.0)

    batch_ndim = w.ndim - 1
    ok = _finite(P, S, P_bar, w, eps_new, batch_ndim=batch_ndim)
    return _commit(state, ok, S=S, w=w, eps=eps_new, P=P, P_bar=P_bar)


class FixedPointResult:
    """Outcome of the alternating closed-form design."""

    def __init__(self, S, w, powers, converged):
        self.S = S
        self.w = w
        self.powers = powers
        self.converged = converged

    def __iter__(self):
        return iter((self.S, self.w))


class NonConvergenceWarning(RuntimeWarning):
    pass


def _objective(S, w, R_loaded):
    v = S @ w
    return float(np.vdot(v, R_loaded @ v).real)


def rjio_fixed_point(R, a_p, D, eps2=0.0, max_iters=50, tol=1e-10, S0=None):
    """
    Alternate the closed-form conditions for w_bar (given S_D) and S_D (given
    w_bar) on a known covariance.

    Each pass first solves for ``w_bar`` on the current ``S_D`` and then
    rebuilds ``S_D = (R + eps2 I)^-1 a w^H Rw^-1 / (w^H Rw^-1 w a^H (R + eps2 I)^-1 a)``
    with ``Rw = w w^H + rho I``, ``rho = 1e-8 ||w||^2``. Stops when the relative
    change of the loaded output power drops below ``tol``.

    Return:
        FixedPointResult, unpackable as ``S, w = ...``
    """
    R = np.asarray(R, dtype=complex)
    a = np.asarray(a_p, dtype=complex)
    M = R.shape[0]
    if not 1 <= D <= M:
        raise ValueError(f"rank D={D} outside [1, {M}]")
    R_loaded = R + eps2 * np.eye(M)
    Ra = np.linalg.solve(R_loaded, a)
    aRa = np.vdot(a, Ra).real
    if S0 is None:
        S = np.zeros((M, D), dtype=complex)
        S[:D, :D] = np.eye(D)
    else:
        S = np.asarray(S0, dtype=complex)
    w = np.zeros(D, dtype=complex)
    w[0] = 1.0
    powers = []
    converged = False
    for _ in range(max_iters):
        # w-step: min w^H S^H (R + eps2 I) S w  s.t.  w^H S^H a = 1
        Q = symmetrize(hermitian(S) @ R_loaded @ S)
        a_bar = hermitian(S) @ a
        # S is rank one after the first S-step, so Q may be singular; a_bar
        # lies in its range and the pseudo-inverse gives the constrained minimum
        Qa = np.linalg.pinv(Q, rcond=1e-12, hermitian=True) @ a_bar
        w = Qa / np.vdot(a_bar, Qa).real
        powers.append(_objective(S, w, R_loaded))

        # S-step
        rho = 1e-8 * np.vdot(w, w).real
        Rw_inv_w = w / (np.vdot(w, w).real + rho)
        wRw = np.vdot(w, Rw_inv_w).real
        S = np.outer(Ra, np.conj(Rw_inv_w)) / (wRw * aRa)
        powers.append(_objective(S, w, R_loaded))
        if len(powers) >= 3 and abs(powers[-3] - powers[-1]) <= tol * abs(powers[-3]):
            converged = True
            break
    w, _ = _normalize(S, w, a)
    if not converged:
        warnings.warn("alternating design did not converge; returning last iterate",
                      NonConvergenceWarning)
    return FixedPointResult(S, w, powers, converged)
