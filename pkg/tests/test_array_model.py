import numpy as np
import pytest

from rrbeam.array_model import (
    ArrayGeometry,
    MismatchModel,
    SourceSet,
    presumed_steering,
    steering_vector,
    synthesize_snapshot,
    synthesize_snapshots,
    true_covariances,
)


@pytest.mark.parametrize("theta, expected", [
    (90.0, [1, 1, 1, 1]),
    (0.0, [1, -1, 1, -1]),
    (60.0, [1, -1j, -1, 1j]),
])
def test_steering_examples(theta, expected):
    assert np.allclose(steering_vector(ArrayGeometry(4), theta), expected, atol=1e-12)


def test_steering_batched_shape():
    a = steering_vector(ArrayGeometry(5), [10.0, 20.0, 30.0])
    assert a.shape == (3, 5)
    assert np.allclose(a[1], steering_vector(ArrayGeometry(5), 20.0))


def test_geometry_and_sources_validate():
    with pytest.raises(ValueError):
        ArrayGeometry(1)
    with pytest.raises(ValueError):
        ArrayGeometry(4, 0.0)
    with pytest.raises(ValueError):
        SourceSet(0.0, [10.0], 1.0, [], 1.0)
    with pytest.raises(ValueError):
        SourceSet(0.0, [10.0, 20.0, 30.0], 1.0, [1, 1, 1], 1.0).validate_for(ArrayGeometry(4))
    with pytest.raises(ValueError):
        MismatchModel("coherent_scattering", num_paths=0)


def test_from_snr():
    s = SourceSet.from_snr(30.0, [10.0], snr_db=10.0)
    assert s.noise_power == pytest.approx(0.1) and s.interferer_powers == (1.0,)


def test_presumed_none_is_exact():
    geom = ArrayGeometry(8)
    assert np.array_equal(presumed_steering(geom, 40.0, MismatchModel("none")), steering_vector(geom, 40.0))


def test_presumed_forced_symmetric():
    geom = ArrayGeometry(8)
    mm = MismatchModel("coherent_scattering", num_paths=4, doa_stddev=0.0)
    a_p = presumed_steering(geom, 40.0, mm, phases=np.zeros(4), angles=np.full(4, 40.0))
    assert np.allclose(a_p, 5 * steering_vector(geom, 40.0))


def test_presumed_seeded_reproducible():
    geom = ArrayGeometry(8)
    mm = MismatchModel("coherent_scattering")
    a1 = presumed_steering(geom, 40.0, mm, np.random.default_rng(7))
    a2 = presumed_steering(geom, 40.0, mm, np.random.default_rng(7))
    assert np.array_equal(a1, a2)
    assert np.linalg.norm(a1 - steering_vector(geom, 40.0)) > 0


def test_noise_only_power():
    geom = ArrayGeometry(6)
    src = SourceSet(30.0, (), 0.0, (), 1.0)
    X = synthesize_snapshots(geom, src, np.random.default_rng(0), 10_000)
    assert np.mean(np.sum(np.abs(X) ** 2, axis=1)) / 6 == pytest.approx(1.0, rel=0.05)


def test_zero_power_gives_zero():
    r = synthesize_snapshot(ArrayGeometry(4), SourceSet(30.0, [60.0], 0.0, [0.0], 0.0), np.random.default_rng(0))
    assert np.all(r == 0)


def test_noiseless_single_source_in_span():
    geom = ArrayGeometry(5)
    r = synthesize_snapshot(geom, SourceSet(30.0, (), 1.0, (), 0.0), np.random.default_rng(3))
    a = steering_vector(geom, 30.0)
    resid = r - a * np.vdot(a, r) / np.vdot(a, a)
    assert np.linalg.norm(resid) < 1e-12 * np.linalg.norm(r)


def test_true_covariances_small():
    geom = ArrayGeometry(2)
    c = true_covariances(geom, SourceSet(30.0, (), 1.0, (), 1.0))
    a = steering_vector(geom, 30.0)
    assert np.allclose(c.R, np.outer(a, a.conj()) + np.eye(2))


def test_true_covariances_trace():
    geom = ArrayGeometry(7)
    src = SourceSet(30.0, [60.0, 100.0], 2.0, [0.5, 3.0], 0.25)
    assert np.trace(true_covariances(geom, src).R).real == pytest.approx(7 * (2.0 + 0.5 + 3.0 + 0.25))


def test_true_covariances_match_samples():
    geom = ArrayGeometry(6)
    src = SourceSet(30.0, [70.0, 120.0], 1.0, [2.0, 0.5], 0.3)
    X = synthesize_snapshots(geom, src, np.random.default_rng(11), 100_000)
    R_hat = X.T @ X.conj() / len(X)
    R = true_covariances(geom, src).R
    assert np.linalg.norm(R_hat - R) <= 0.02 * np.linalg.norm(R)
