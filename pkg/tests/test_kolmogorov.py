import io

import numpy as np
import pytest
from scipy.linalg import null_space
from scipy.sparse.linalg import expm_multiply

from retrialq import (
    RegimeError,
    SystemParams,
    TruncationError,
    build_generator,
    l1_distance,
    optimize_rate,
    point_mass,
    stationary,
    transient,
)
from retrialq.kolmogorov import read_snapshots_csv, write_snapshots_csv


def test_initial_time_is_identity(erg_params):
    rng = np.random.default_rng(3)
    p0 = np.zeros(400)
    p0[:50] = rng.dirichlet(np.ones(50))
    snap = transient(erg_params, p0, [0.0, 1.0])[0]
    assert snap.t == 0.0
    np.testing.assert_allclose(snap.probs, p0, rtol=0, atol=1e-16)


@pytest.mark.parametrize("k", [1, 2, 21])
def test_transient_matches_matrix_exponential(erg_params, null_params, k):
    for params in (erg_params, null_params):
        A = build_generator(params, 400, "A").matrix.tocsc()
        times = [0.5, 2.0, 5.0, 12.0]
        snaps = transient(params, point_mass(400, k), times)
        for s in snaps:
            ref = expm_multiply(A * s.t, point_mass(400, k))
            assert np.abs(s.probs - ref).sum() < 1e-9
            assert abs(s.probs.sum() - 1) <= 1e-8
            assert s.probs.min() >= 0


def test_step_halving_consistency(erg_params):
    times = np.arange(0, 21, 2.0)
    coarse = transient(erg_params, point_mass(400), times, tol=1e-8)
    fine = transient(erg_params, point_mass(400), times, tol=5e-9)
    for c, f in zip(coarse, fine):
        assert np.abs(c.probs - f.probs).max() < 1e-8


def test_truncation_leak_raises(null_params):
    with pytest.raises(TruncationError) as info:
        transient(null_params, point_mass(40, 19), [0.0, 40.0], M=40)
    assert info.value.suggested_size == 80


def test_transient_input_validation(erg_params):
    with pytest.raises(ValueError):
        transient(erg_params, point_mass(400, 300), [0.0])
    with pytest.raises(ValueError):
        transient(erg_params, point_mass(400), [1.0, 0.5])
    with pytest.raises(ValueError):
        transient(erg_params, np.full(400, 0.5), [0.0])


def test_stationary_against_dense_null_space(erg_params):
    pi = stationary(erg_params, 200)
    A = build_generator(erg_params, 200, "A").toarray()
    v = null_space(A)[:, 0]
    v = v / v.sum()
    assert pi.probs.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(pi.probs[:40], v[:40], rtol=1e-9, atol=1e-15)
    # global balance state by state
    assert np.abs(A @ pi.probs).max() <= 1e-12
    assert np.abs(A @ pi.probs).sum() <= 1e-12
    assert pi.leak <= 1e-10


def test_stationary_tail_has_relative_accuracy(erg_params):
    # per orbit level the stationary mass of this chain halves exactly
    pi = stationary(erg_params, 400).probs
    idle, busy = pi[2::2], pi[3::2]
    n = min(idle.size, busy.size) - 1
    np.testing.assert_allclose(idle[1:n] / idle[: n - 1], 0.5, rtol=1e-9)
    np.testing.assert_allclose(busy[1:n] / busy[: n - 1], 0.5, rtol=1e-9)


def test_stationary_grows_truncation(erg_params):
    # the tail mass at 20 orbit levels is about 2**-20, above the 1e-10 tail tolerance
    pi = stationary(erg_params, 40)
    assert pi.size == 80
    assert pi.leak <= 1e-10


def test_stationary_refuses_other_regimes(null_params):
    with pytest.raises(RegimeError):
        stationary(null_params)
    with pytest.raises(RegimeError):
        stationary(SystemParams(1, 2, 1))


def test_convergence_from_random_starts(erg_params):
    pi = stationary(erg_params, 400)
    rng = np.random.default_rng(11)
    times = [20.0, 40.0, 80.0, 160.0]
    for _ in range(5):
        p0 = np.zeros(400)
        support = rng.integers(2, 21)
        p0[:support] = rng.dirichlet(np.ones(support))
        dist = [l1_distance(s, pi) for s in transient(erg_params, p0, times)]
        assert np.all(np.diff(dist) < 0)
        assert dist[-1] < 1e-6


def test_monotone_decay(erg_params):
    pi = stationary(erg_params, 400)
    times = np.arange(0, 50.5, 0.5)
    dist = [l1_distance(s, pi) for s in transient(erg_params, point_mass(400), times)]
    assert np.all(np.diff(dist) <= 1e-10)


def test_l1_distance():
    p = np.array([0.2, 0.3, 0.5])
    q = np.array([0.5, 0.5, 0.0])
    assert l1_distance(p, p) == 0
    assert l1_distance(point_mass(5, 1), point_mass(5, 4)) == 2
    assert l1_distance(p, q) == l1_distance(q, p) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        l1_distance(p, q[:2])


def test_theorem2_bound_holds(erg_params):
    from retrialq import erg_bound
    cert = optimize_rate(erg_params)
    pi = stationary(erg_params, 400)
    times = np.arange(0, 30.5, 0.5)
    snaps = transient(erg_params, point_mass(400, 5), times)
    bound = erg_bound(erg_params, cert, point_mass(400, 5), pi, times).value
    dist = np.array([l1_distance(s, pi) for s in snaps])
    assert np.all(dist <= bound + 1e-9)


def test_theorem1_bound_holds(null_params):
    from retrialq import null_bound
    cert = optimize_rate(null_params)
    times = np.arange(0, 31.0)
    snaps = transient(null_params, point_mass(400, 31), times)
    for N in (3, 8, 20, 30):
        for s in snaps:
            assert s.probs[:N].sum() <= null_bound(null_params, cert, 31, N, s.t) + 1e-9


def test_snapshot_csv_roundtrip(erg_params):
    snaps = transient(erg_params, point_mass(400), [0.0, 0.3])
    text = write_snapshots_csv(snaps)
    header = text.splitlines()[0].split(",")
    assert header[:3] == ["t", "leak", "p1"] and header[-1] == "p400"
    back = read_snapshots_csv(io.StringIO(text))
    for a, b in zip(snaps, back):
        assert a.t == b.t
        np.testing.assert_allclose(a.probs, b.probs, rtol=1e-14, atol=1e-300)
