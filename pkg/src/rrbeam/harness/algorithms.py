"""
Batched runners: each wraps one beamforming algorithm for a stack of trials.

A runner sees one snapshot per trial at a time (shape ``(T, M)``) and exposes
the current effective full-rank weights (``(T, M)``), the selected rank when
it adapts one, and a per-trial count of rejected (non-finite) updates.
"""
import numpy as np

from ..lcmv import FullRankBeamformer, lcmv_rls_init, lcmv_rls_step, lcmv_sg_step, loaded_lcmv, optimal_lcmv
from ..rank_adapt import STEPPERS, adapt_step, rank_adapt_init, selected_weights
from ..rjio import RjioHyperParams, rjio_init, rjio_rls_step, rjio_sg_step
from .scenario import ConfigError


def _rows_finite(*arrays):
    ok = True
    for x in arrays:
        ok = ok & np.all(np.isfinite(x.reshape(x.shape[0], -1)), axis=1)
    return ok


def _keep(old, new, ok):
    return np.where(ok.reshape((-1,) + (1,) * (new.ndim - 1)), new, old)


class Context:
    """Per-chunk data an algorithm may use at initialisation."""

    def __init__(self, geometry, a_true, a_p, power):
        self.geometry = geometry
        self.a_true = a_true  # (M,)
        self.a_p = a_p  # (T, M)
        self.power = power  # (T,) per-sensor power of the first snapshot
        self.num_trials = a_p.shape[0]


class Runner:
    adaptive = True
    rank = None

    def __init__(self, params, ctx):
        self.params = dict(params)
        self.ctx = ctx
        self.diverged = np.zeros(ctx.num_trials, dtype=int)

    def set_environment(self, covs):
        """Called with the true covariances (``R`` of shape (T, M, M)) at each segment start."""

    def step(self, r):
        raise NotImplementedError

    @property
    def weights(self):
        raise NotImplementedError


class Optimal(Runner):
    """Clairvoyant LCMV: true covariance and the true SoI steering vector."""

    adaptive = False

    def set_environment(self, covs):
        self._w = np.stack([optimal_lcmv(R, self.ctx.a_true).w for R in covs])

    def step(self, r):
        pass

    @property
    def weights(self):
        return self._w


class LoadedLcmv(Runner):
    """Closed-form loaded LCMV on the true covariance with the presumed steering vector."""

    adaptive = False

    def set_environment(self, covs):
        eps2 = float(self.params.get("eps2", 0.0))
        self._w = np.stack([loaded_lcmv(R, a, eps2).w for R, a in zip(covs, self.ctx.a_p)])

    def step(self, r):
        pass

    @property
    def weights(self):
        return self._w


def _first_element_start(a_p):
    # w = e_1 scaled to unit response, the common start of all SG beamformers
    w = np.zeros_like(a_p)
    w[:, 0] = 1.0 / np.conj(a_p[:, 0])
    return w


class LcmvSG(Runner):
    def __init__(self, params, ctx):
        super().__init__(params, ctx)
        self.mu = float(self.params.get("mu", 1e-3))
        init = self.params.get("init", "first-element")
        a = ctx.a_p
        if init == "first-element":
            w = _first_element_start(a)
        elif init == "conventional":
            w = a / np.einsum("tm,tm->t", np.conj(a), a).real[:, None]
        else:
            raise ConfigError(f"unknown lcmv-sg init {init!r}")
        self.state = FullRankBeamformer(w, a)

    def step(self, r):
        with np.errstate(all="ignore"):
            new = lcmv_sg_step(self.state, r, self.mu)
        ok = _rows_finite(new.w)
        self.diverged += ~ok
        self.state = FullRankBeamformer(_keep(self.state.w, new.w, ok), self.state.a_c)

    @property
    def weights(self):
        return self.state.w


class LcmvRLS(Runner):
    def __init__(self, params, ctx):
        super().__init__(params, ctx)
        self.alpha = float(self.params.get("alpha", 0.998))
        self.state, self.P = lcmv_rls_init(ctx.a_p, float(self.params.get("delta", 100.0)))

    def step(self, r):
        with np.errstate(all="ignore"):
            new, P = lcmv_rls_step(self.state, self.P, r, self.alpha, check=False)
        ok = _rows_finite(new.w, P)
        self.diverged += ~ok
        self.state = FullRankBeamformer(_keep(self.state.w, new.w, ok), self.state.a_c)
        self.P = _keep(self.P, P, ok)

    @property
    def weights(self):
        return self.state.w


_HP_FIELDS = ("rank", "mu_s", "mu_w", "mu_eps", "alpha", "delta", "delta_bar", "eps0")


def hyperparams(params, **overrides):
    kw = {k: params[k] for k in _HP_FIELDS if k in params}
    kw.update(overrides)
    try:
        return RjioHyperParams(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad RJIO hyperparameters: {exc}") from exc


class Rjio(Runner):
    kind = "sg"

    def __init__(self, params, ctx):
        super().__init__(params, ctx)
        self.hp = hyperparams(self.params)
        M = ctx.geometry.num_sensors
        if self.hp.rank > M:
            raise ConfigError(f"rank {self.hp.rank} exceeds M={M}")
        self.state = rjio_init(M, self.hp, ctx.a_p, power=ctx.power, rls=self.kind == "rls")
        self._step = rjio_sg_step if self.kind == "sg" else rjio_rls_step

    def step(self, r):
        with np.errstate(all="ignore"):
            self.state = self._step(self.state, r, self.hp)
        self.diverged = self.state.diverged

    @property
    def weights(self):
        return self.state.effective()


class RjioSG(Rjio):
    kind = "sg"


class RjioRLS(Rjio):
    kind = "rls"


class RjioAdapt(Runner):
    kind = "sg"

    def __init__(self, params, ctx):
        super().__init__(params, ctx)
        d_min = int(self.params.get("d_min", 3))
        d_max = int(self.params.get("d_max", 8))
        self.hp = hyperparams(self.params, rank=d_max)
        M = ctx.geometry.num_sensors
        if d_max > M:
            raise ConfigError(f"d_max={d_max} exceeds M={M}")
        inner = rjio_init(M, self.hp, ctx.a_p, power=ctx.power, rls=self.kind == "rls")
        cost_alpha = float(self.params.get("cost_alpha", self.hp.alpha))
        try:
            self.state = rank_adapt_init(inner, cost_alpha, d_min, d_max,
                                         normalize=bool(self.params.get("cost_normalize", True)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self._step = STEPPERS[self.kind]

    def step(self, r):
        with np.errstate(all="ignore"):
            self.state = adapt_step(self.state, self._step, r, self.hp)
        self.diverged = self.state.inner.diverged

    @property
    def rank(self):
        return self.state.d_opt

    @property
    def weights(self):
        return selected_weights(self.state)


class RjioSGAdapt(RjioAdapt):
    kind = "sg"


class RjioRLSAdapt(RjioAdapt):
    kind = "rls"


RUNNERS = {
    "optimal": Optimal,
    "loaded-lcmv": LoadedLcmv,
    "lcmv-sg": LcmvSG,
    "lcmv-rls": LcmvRLS,
    "rjio-sg": RjioSG,
    "rjio-rls": RjioRLS,
    "rjio-sg-adapt": RjioSGAdapt,
    "rjio-rls-adapt": RjioRLSAdapt,
}


def make_runner(spec, ctx):
    return RUNNERS[spec.name](spec.params, ctx)
