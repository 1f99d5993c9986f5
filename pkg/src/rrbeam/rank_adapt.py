"""
Automatic rank selection for RJIO.

One extended state of rank ``d_max`` is adapted; for every candidate rank ``d``
the leading-``d`` truncation ``S_D[:, :d] w_bar[:d]``, rescaled to unit
response toward ``a_p``, is scored with an exponentially weighted a-posteriori
output power

    C_d(i) = alpha C_d(i-1) + |x_d(i)|^2,

where ``x_d(i)`` uses the filters from snapshot ``i-1``. The selected rank is
the argmin, ties going to the smaller rank.
"""
from dataclasses import dataclass, replace

import numpy as np

from .rjio import rjio_rls_step, rjio_sg_step


@dataclass(frozen=True)
class RankAdaptState:
    inner: object  # RjioState at rank d_max
    costs: np.ndarray  # (..., d_max - d_min + 1)
    alpha: float
    d_min: int = 3
    d_max: int = 8
    d_opt: np.ndarray = None
    # rescale truncations to unit response before scoring
    normalize: bool = True

    def __post_init__(self):
        if not 1 <= self.d_min <= self.d_max:
            raise ValueError("need 1 <= d_min <= d_max")
        if self.inner.rank != self.d_max:
            raise ValueError("inner state must have rank d_max")
        if not 0 < self.alpha <= 1:
            raise ValueError("forgetting factor must lie in (0, 1]")

    @property
    def ranks(self):
        return np.arange(self.d_min, self.d_max + 1)


def rank_adapt_init(inner, alpha, d_min=3, d_max=8, normalize=True):
    batch = inner.w.shape[:-1]
    costs = np.zeros(batch + (d_max - d_min + 1,))
    d_opt = np.full(batch, d_min, dtype=int)
    return RankAdaptState(inner, costs, alpha, d_min, d_max, d_opt, normalize)


def truncated_weights(inner, d, normalize=True):
    """
    Effective full-rank weight of the leading-``d`` truncation.

    With ``normalize`` the weight is rescaled to unit response toward a_p;
    truncations with a vanishing response are returned unscaled.
    """
    v = np.einsum("...md,...d->...m", inner.S[..., :, :d], inner.w[..., :d])
    if not normalize:
        return v
    c = np.einsum("...m,...m->...", np.conj(v), inner.a_p)
    safe = np.where(np.abs(c) > 1e-12, c, 1.0)
    return v / np.conj(safe)[..., None]


def truncation_outputs(state, r):
    """``x_d = v_d^H r`` for every candidate rank, shape (..., n_ranks)."""
    return np.stack([np.einsum("...m,...m->...", np.conj(truncated_weights(state.inner, d, state.normalize)), r)
                     for d in state.ranks], axis=-1)


def rank_cost_update(state, r):
    x = truncation_outputs(state, r)
    return replace(state, costs=state.alpha * state.costs + np.abs(x) ** 2)


def select_rank(state):
    """Argmin of the costs; ``np.argmin`` already returns the first (smallest) rank on ties."""
    return state.d_min + np.argmin(state.costs, axis=-1)


def adapt_step(state, stepper, r, hp):
    """
    Score the previous filters on ``r``, advance the extended state with
    ``stepper`` (``rjio_sg_step`` / ``rjio_rls_step``), then re-select the rank.
    """
    state = rank_cost_update(state, r)
    inner = stepper(state.inner, r, hp)
    state = replace(state, inner=inner)
    return replace(state, d_opt=select_rank(state))


def selected_weights(state):
    """Effective weight of the currently selected truncation, per chain."""
    out = np.empty(state.inner.a_p.shape, dtype=complex)
    d_opt = np.asarray(state.d_opt)
    if d_opt.ndim == 0:
        return truncated_weights(state.inner, int(d_opt))
    for d in np.unique(d_opt):
        rows = d_opt == d
        out[rows] = truncated_weights(state.inner, int(d))[rows]
    return out


STEPPERS = {"sg": rjio_sg_step, "rls": rjio_rls_step}
