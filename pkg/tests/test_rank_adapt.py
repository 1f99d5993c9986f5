import numpy as np
import pytest

from rrbeam.rank_adapt import (
    RankAdaptState,
    adapt_step,
    rank_adapt_init,
    rank_cost_update,
    select_rank,
    selected_weights,
    truncated_weights,
)
from rrbeam.rjio import RjioHyperParams, RjioState, rjio_init, rjio_sg_step

from conftest import random_vector


def _state(rng, M=10, d_min=3, d_max=6, alpha=0.9):
    a = random_vector(rng, M)
    inner = rjio_init(M, RjioHyperParams(rank=d_max), a)
    S = random_vector(rng, M * d_max).reshape(M, d_max)
    w = random_vector(rng, d_max)
    inner = RjioState(S, w / np.conj(np.vdot(S @ w, a)), inner.eps, a, diverged=inner.diverged)
    return rank_adapt_init(inner, alpha, d_min, d_max)


def test_zero_snapshot_decays_costs(rng):
    st = _state(rng)
    st = RankAdaptState(st.inner, np.arange(1.0, 5.0), st.alpha, 3, 6, st.d_opt)
    new = rank_cost_update(st, np.zeros(10))
    assert np.array_equal(new.costs, st.alpha * st.costs)


def test_unit_forgetting_grows_linearly(rng):
    st = _state(rng, alpha=1.0)
    r = random_vector(rng, 10)
    first = rank_cost_update(st, r).costs
    s = st
    for _ in range(5):
        s = rank_cost_update(s, r)
    assert np.allclose(s.costs, 5 * first, rtol=1e-13)


def test_select_rank_examples(rng):
    st = _state(rng, d_min=3, d_max=8)
    assert select_rank(st) == 3
    costs = np.array([5.0, 1.0, 2.0, 3.0, 4.0, 9.0])
    assert select_rank(RankAdaptState(st.inner, costs, st.alpha, 3, 8)) == 4


def test_state_validation(rng):
    st = _state(rng)
    with pytest.raises(ValueError):
        RankAdaptState(st.inner, st.costs, st.alpha, 4, 3)
    with pytest.raises(ValueError):
        RankAdaptState(st.inner, st.costs, st.alpha, 3, 7)


def test_truncation_is_rank_d_state_output(rng):
    st = _state(rng)
    inner = st.inner
    for d in range(3, 7):
        sub = RjioState(inner.S[:, :d], inner.w[:d], inner.eps, inner.a_p)
        v = truncated_weights(inner, d, normalize=False)
        assert np.allclose(v, sub.effective(), atol=1e-14)
        u = truncated_weights(inner, d)
        assert abs(np.vdot(u, inner.a_p) - 1) < 1e-12


def test_degenerate_window_matches_fixed_rank(rng):
    a = random_vector(rng, 8)
    hp = RjioHyperParams(rank=4, mu_s=1e-2, mu_w=1e-2, eps0=0.1)
    fixed = rjio_init(8, hp, a)
    ad = rank_adapt_init(rjio_init(8, hp, a), 0.99, 4, 4)
    for _ in range(30):
        r = random_vector(rng, 8)
        fixed = rjio_sg_step(fixed, r, hp)
        ad = adapt_step(ad, rjio_sg_step, r, hp)
    assert np.array_equal(ad.inner.S, fixed.S) and np.array_equal(ad.inner.w, fixed.w)
    assert ad.d_opt == 4


def test_selected_weights_batched(rng):
    a = np.stack([random_vector(rng, 8) for _ in range(4)])
    hp = RjioHyperParams(rank=6)
    st = rank_adapt_init(rjio_init(8, hp, a), 0.99, 3, 6)
    for _ in range(10):
        st = adapt_step(st, rjio_sg_step, np.stack([random_vector(rng, 8) for _ in range(4)]), hp)
    w = selected_weights(st)
    for t in range(4):
        sub = RjioState(st.inner.S[t], st.inner.w[t], st.inner.eps[t], st.inner.a_p[t])
        assert np.allclose(w[t], truncated_weights(sub, int(st.d_opt[t])))
