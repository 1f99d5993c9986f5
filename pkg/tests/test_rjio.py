import warnings

import numpy as np
import pytest

from rrbeam.array_model import ArrayGeometry, SourceSet, steering_vector, synthesize_snapshots, true_covariances
from rrbeam.harness import sinr
from rrbeam.lcmv import lcmv_rls_init, lcmv_rls_step, optimal_lcmv, reduced_rank_lcmv
from rrbeam.rjio import (
    NonConvergenceWarning,
    RjioHyperParams,
    RjioState,
    rjio_fixed_point,
    rjio_init,
    rjio_output,
    rjio_rls_step,
    rjio_sg_step,
)

from conftest import random_hermitian_pd, random_vector


def test_init_layout():
    st = rjio_init(4, RjioHyperParams(rank=2), np.ones(4))
    assert np.array_equal(st.S, [[1, 0], [0, 1], [0, 0], [0, 0]])
    assert np.array_equal(st.w, [1, 0])


def test_init_response_is_first_entry(rng):
    a = random_vector(rng, 6)
    st = rjio_init(6, RjioHyperParams(rank=3), a)
    # e_1^H [I; 0]^H a_p picks the first entry unconjugated
    assert st.response() == pytest.approx(a[0], abs=1e-15)


def test_init_full_rank_and_errors():
    assert np.array_equal(rjio_init(5, RjioHyperParams(rank=5), np.ones(5)).S, np.eye(5))
    with pytest.raises(ValueError):
        rjio_init(3, RjioHyperParams(rank=4), np.ones(3))


def test_init_rls_matrices_and_default_loading():
    st = rjio_init(5, RjioHyperParams(rank=2, delta=3.0, delta_bar=7.0), np.ones(5), power=2.0, rls=True)
    assert np.allclose(st.P, 3 * np.eye(5)) and np.allclose(st.P_bar, 7 * np.eye(2))
    assert st.eps == pytest.approx(0.02)


@pytest.mark.parametrize("bad", [dict(alpha=1.0), dict(alpha=0.0), dict(mu_s=-1.0), dict(rank=0),
                                 dict(delta=0.0), dict(eps0=-1.0)])
def test_hyperparams_validate(bad):
    with pytest.raises(ValueError):
        RjioHyperParams(**bad)


def _random_state(rng, M=6, D=3, rls=False, eps=0.3):
    a = random_vector(rng, M)
    st = rjio_init(M, RjioHyperParams(rank=D, eps0=eps), a, rls=rls)
    S = random_vector(rng, M * D).reshape(M, D)
    w = random_vector(rng, D)
    w = w / np.conj(np.vdot(S @ w, a))
    return RjioState(S, w, st.eps, a, st.P, st.P_bar, st.diverged)


def test_output_examples(rng):
    st = _random_state(rng)
    assert rjio_output(st, st.a_p) == pytest.approx(1.0, abs=1e-12)
    assert rjio_output(st, np.zeros(6)) == 0
    r = random_vector(rng, 6)
    two_stage = np.vdot(st.w, st.S.conj().T @ r)
    assert abs(rjio_output(st, r) - two_stage) <= 1e-14 * max(1.0, abs(two_stage))


def test_sg_zero_steps_only_normalize(rng):
    st = _random_state(rng)
    st = RjioState(st.S, 2.0 * st.w, st.eps, st.a_p, diverged=st.diverged)
    hp = RjioHyperParams(rank=3, mu_s=0.0, mu_w=0.0, mu_eps=0.0)
    new = rjio_sg_step(st, random_vector(rng, 6), hp)
    assert np.array_equal(new.S, st.S) and new.eps == st.eps
    assert np.allclose(new.w, st.w / 2.0)


def test_sg_zero_snapshot_loading_decay(rng):
    st = _random_state(rng, eps=1e-3)
    hp = RjioHyperParams(rank=3, mu_eps=1e-4)
    new = rjio_sg_step(st, np.zeros(6), hp)
    Sw = st.S @ st.w
    assert new.eps == pytest.approx(max(1e-3 - 1e-4 * np.vdot(Sw, Sw).real, 0.0))
    big = rjio_sg_step(st, np.zeros(6), RjioHyperParams(rank=3, mu_eps=10.0))
    assert big.eps == 0.0


def test_sg_step_feasible(rng):
    st = _random_state(rng)
    hp = RjioHyperParams(rank=3, mu_s=1e-2, mu_w=1e-2)
    for _ in range(20):
        st = rjio_sg_step(st, random_vector(rng, 6), hp)
        assert abs(st.response() - 1) < 1e-8


def test_nonfinite_snapshot_rejected(rng):
    r = np.full(6, np.nan + 0j)
    for step, rls in ((rjio_sg_step, False), (rjio_rls_step, True)):
        s0 = _random_state(rng, rls=rls)
        new = step(s0, r, RjioHyperParams(rank=3))
        assert np.array_equal(new.S, s0.S) and np.array_equal(new.w, s0.w)
        assert new.diverged == 1


def test_batched_rejection_is_per_row(rng):
    a = np.stack([random_vector(rng, 5) for _ in range(3)])
    hp = RjioHyperParams(rank=2)
    st = rjio_init(5, hp, a, rls=True)
    r = np.stack([random_vector(rng, 5) for _ in range(3)])
    r[1, 0] = np.inf
    new = rjio_rls_step(st, r, hp)
    assert list(new.diverged) == [0, 1, 0]
    assert np.array_equal(new.S[1], st.S[1]) and not np.array_equal(new.S[0], st.S[0])


def test_rls_zero_data_refresh(rng):
    st = _random_state(rng, rls=True, eps=0.0)
    new = rjio_rls_step(st, np.zeros(6), RjioHyperParams(rank=3, alpha=0.999))
    a = st.a_p
    ref = np.outer(a, a.conj() @ st.S) / np.vdot(a, a).real
    assert np.allclose(new.S, ref, atol=1e-12)


def test_rls_constraint_every_step(rng):
    st = _random_state(rng, rls=True)
    hp = RjioHyperParams(rank=3, alpha=0.99)
    for _ in range(50):
        st = rjio_rls_step(st, random_vector(rng, 6), hp)
        assert abs(st.response() - 1) < 1e-10


def test_rls_effective_weight_is_rank_independent():
    # S_D is rank one with column P a_p, so S_D w_bar = P a_p / (a_p^H P a_p)
    geom = ArrayGeometry(8)
    src = SourceSet.from_snr(90.0, [40.0, 130.0], snr_db=10.0)
    a = steering_vector(geom, 95.0)
    X = synthesize_snapshots(geom, src, np.random.default_rng(2), 100)
    ws = []
    for D in (1, 3, 6):
        hp = RjioHyperParams(rank=D, alpha=0.99, eps0=0.0, delta=10.0)
        st = rjio_init(8, hp, a, rls=True)
        for r in X:
            st = rjio_rls_step(st, r, hp)
        ws.append(st.effective())
    ref, P = lcmv_rls_init(a, 10.0)
    for r in X:
        ref, P = lcmv_rls_step(ref, P, r, 0.99)
    for w in ws:
        assert np.allclose(w, ref.w, rtol=1e-6, atol=1e-9)


def test_json_roundtrip(rng):
    st = rjio_rls_step(_random_state(rng, rls=True), random_vector(rng, 6), RjioHyperParams(rank=3))
    back = RjioState.from_json(st.to_json())
    for name in ("S", "w", "eps", "a_p", "P", "P_bar", "diverged"):
        assert np.array_equal(getattr(back, name), getattr(st, name))


def test_fixed_point_full_rank_first_iterate(rng):
    R, a = random_hermitian_pd(rng, 6), random_vector(rng, 6)
    with pytest.warns(NonConvergenceWarning):
        res = rjio_fixed_point(R, a, 6, max_iters=1)
    w_opt = optimal_lcmv(R, a).w
    assert res.powers[0] == pytest.approx(np.vdot(w_opt, R @ w_opt).real, rel=1e-8)


def test_fixed_point_descent_and_constraint(rng):
    R, a = random_hermitian_pd(rng, 8), random_vector(rng, 8)
    res = rjio_fixed_point(R, a, 3, eps2=0.5)
    assert res.converged
    assert np.all(np.diff(res.powers) <= 1e-10)
    S, w = res
    assert abs(np.vdot(S @ w, a) - 1) < 1e-10


def test_fixed_point_beats_eigen_basis():
    geom = ArrayGeometry(8)
    src = SourceSet.from_snr(90.0, [30.0, 140.0], snr_db=10.0, interferer_powers=[10.0, 10.0])
    cov = true_covariances(geom, src)
    a = steering_vector(geom, 90.0)
    S, w = rjio_fixed_point(cov.R, a, 2)
    _, V = np.linalg.eigh(cov.R)
    eig = reduced_rank_lcmv(cov.R, V[:, -2:], a)
    assert sinr(S @ w, cov.R_s, cov.R_I) >= sinr(eig.effective, cov.R_s, cov.R_I) - 1.0


def test_fixed_point_warns_on_budget(rng):
    R, a = random_hermitian_pd(rng, 6), random_vector(rng, 6)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = rjio_fixed_point(R, a, 3, max_iters=1)
    assert not res.converged
    assert any(issubclass(c.category, NonConvergenceWarning) for c in caught)
