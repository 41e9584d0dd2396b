import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from lqccsim import numerics as nx
from lqccsim.concentrate import build_filter
from lqccsim.errors import AnnihilationError, InvalidInputError, RankDeficiencyError
from lqccsim.lqcc import (
    LocalOperation,
    apply_pair,
    branch_weights,
    dilate,
    is_complete,
    joint_vector,
    random_kraus,
    simulate_measurement,
    transfer_to_alice_side,
)
from lqccsim.states import PureBipartiteState, is_maximally_entangled, max_entangled, random_pure_state, state_from_schmidt

from conftest import assert_close

S75 = state_from_schmidt([0.75, 0.25])
FILTER75 = np.diag([np.sqrt(1 / 3), 1.0])


def test_apply_pair_identity():
    out, p = apply_pair(max_entangled(2), LocalOperation.identity("alice", 2), LocalOperation.identity("bob", 2))
    assert_close(out.coeff, max_entangled(2).coeff, 1e-15)
    assert abs(p - 1) <= 1e-15


def test_apply_pair_projector():
    out, p = apply_pair(max_entangled(2), LocalOperation("alice", np.diag([1, 0])), LocalOperation.identity("bob", 2))
    assert abs(p - 0.5) <= 1e-15
    assert_close(out.coeff, [[1, 0], [0, 0]], 1e-15)


def test_apply_pair_filter():
    # diag(sqrt(1/3), 1) @ diag(sqrt(.75), sqrt(.25)) = diag(.5, .5): norm^2 0.5
    out, p = apply_pair(S75, LocalOperation("alice", FILTER75), LocalOperation.identity("bob", 2))
    assert abs(p - 0.5) <= 1e-12
    assert_close(out.coeff, max_entangled(2).coeff, 1e-12)


def test_apply_pair_errors():
    with pytest.raises(AnnihilationError):
        apply_pair(PureBipartiteState(np.array([[1, 0], [0, 0]])), LocalOperation("alice", np.diag([0, 1])))
    with pytest.raises(InvalidInputError):
        apply_pair(S75, LocalOperation("bob", np.eye(2)))
    with pytest.raises(InvalidInputError):
        apply_pair(S75, LocalOperation("alice", np.eye(3)))
    with pytest.raises(InvalidInputError):
        LocalOperation("alice", 2 * np.eye(2))
    with pytest.raises(InvalidInputError):
        LocalOperation("carol", np.eye(2))


def test_operation_json_round_trip():
    op = LocalOperation("bob", np.array([[0, 1j], [0.5, 0]]))
    data = json.loads(json.dumps(op.to_json()))
    assert set(data) == {"party", "re", "im"}
    back = LocalOperation.from_json(data)
    assert back.party == op.party and np.array_equal(back.kraus, op.kraus)


def test_is_complete():
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    assert is_complete([LocalOperation("alice", p0), LocalOperation("alice", p1)])
    assert not is_complete([LocalOperation("alice", np.eye(2)), LocalOperation("alice", p1)])


def _expected_dilation_output(k, psi, probe_dim):
    # |K psi>|P_1> + |sqrt(I - K^dag K) psi>|P_0>, built with an independent matrix root
    rest = scipy.linalg.sqrtm(np.eye(k.shape[0]) - k.conj().T @ k)
    e0 = np.eye(probe_dim)[0]
    e1 = np.eye(probe_dim)[1]
    return np.kron(k @ psi, e1) + np.kron(rest @ psi, e0)


@pytest.mark.parametrize("probe_dim", [2, 3])
def test_dilation_defining_equation(rng, probe_dim):
    for _ in range(20):
        n = int(rng.integers(2, 6))
        k = random_kraus(n, rng) * rng.uniform(0.2, 1.0)
        d = dilate(LocalOperation("alice", k), probe_dim)
        assert d.unitary.shape == (n * probe_dim, n * probe_dim)
        assert nx.spectral_norm(d.unitary.conj().T @ d.unitary - np.eye(n * probe_dim)) <= 1e-9
        assert_close(d.kraus, k, 1e-9)
        psi = nx.complex_gaussian(rng, n)
        inp = np.kron(psi, np.eye(probe_dim)[0])
        assert_close(d.unitary @ inp, _expected_dilation_output(k, psi, probe_dim), 1e-9)


def test_dilation_examples():
    assert_close(branch_weights(dilate(LocalOperation.identity("alice", 2)), S75), [0, 1], 1e-12)
    assert_close(branch_weights(dilate(LocalOperation("alice", FILTER75)), S75), [0.5, 0.5], 1e-12)
    zero = dilate(LocalOperation("alice", np.zeros((2, 2))))
    for seed in range(5):
        assert branch_weights(zero, random_pure_state(2, 2, seed))[1] <= 1e-15


def test_dilate_rejects_small_probe():
    with pytest.raises(InvalidInputError):
        dilate(LocalOperation.identity("alice", 2), probe_dim=1)


def test_dilation_probability_matches_apply_pair(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        s = random_pure_state(n, n, rng)
        op = LocalOperation("alice", random_kraus(n, rng))
        _, p = apply_pair(s, op)
        assert abs(branch_weights(dilate(op), s)[1] - p) <= 1e-10


def test_bob_side_dilation(rng):
    s = random_pure_state(3, 3, rng)
    op = LocalOperation("bob", random_kraus(3, rng))
    d = dilate(op)
    _, p = apply_pair(s, None, op)
    assert abs(branch_weights(d, s, "bob")[1] - p) <= 1e-10


def test_simulate_measurement_identity_always_succeeds():
    d = dilate(LocalOperation.identity("alice", 2))
    assert all(simulate_measurement(d, S75, seed)[0] == 1 for seed in range(50))


def test_simulate_measurement_frequency():
    d = dilate(LocalOperation("alice", FILTER75))
    trials = 10_000
    hits = sum(simulate_measurement(d, S75, nx.derive_rng(9, "t", t))[0] == 1 for t in range(trials))
    assert abs(hits / trials - 0.5) <= 5 * np.sqrt(0.25 / trials)


def test_simulate_measurement_success_is_maximal(rng):
    for _ in range(10):
        s = random_pure_state(3, 3, rng)
        d = dilate(build_filter(s))
        for seed in range(20):
            outcome, post = simulate_measurement(d, s, seed)
            if outcome == 1:
                assert is_maximally_entangled(post, 1e-8)


def test_simulate_measurement_deterministic():
    d = dilate(LocalOperation("alice", FILTER75))
    a = [simulate_measurement(d, S75, seed)[0] for seed in range(30)]
    b = [simulate_measurement(d, S75, seed)[0] for seed in range(30)]
    assert a == b


def test_probe_commutes_with_bob_unitary(rng):
    for _ in range(30):
        n = int(rng.integers(2, 5))
        s = random_pure_state(n, n, rng)
        d = dilate(LocalOperation("alice", random_kraus(n, rng)))
        ub = nx.random_haar_unitary(n, rng)
        v = joint_vector(s, d.probe_dim)
        u_ap = np.kron(d.unitary, np.eye(n))
        u_b = np.kron(np.eye(n * d.probe_dim), ub)
        assert_close(u_ap @ (u_b @ v), u_b @ (u_ap @ v), 1e-10)


def test_transfer_unitary_on_max_entangled(rng):
    for n in (2, 3, 4):
        v = nx.random_haar_unitary(n, rng)
        t = transfer_to_alice_side(max_entangled(n), LocalOperation("bob", v))
        phase = np.vdot(v.T.reshape(-1), t.alice_op.kraus.reshape(-1)) / n
        assert abs(abs(phase) - 1) <= 1e-9
        assert_close(t.alice_op.kraus, phase * v.T, 1e-9)


def test_transfer_identity():
    t = transfer_to_alice_side(S75, LocalOperation.identity("bob", 2))
    assert_close(t.alice_op.kraus, np.eye(2), 1e-12)
    assert_close(t.bob_fix, np.eye(2), 1e-12)


def _transfer_residual(s, b, t):
    return np.abs(t.scale * s.apply_local(t.alice_op.kraus, t.bob_fix) - s.apply_local(None, b.kraus)).max()


def test_transfer_projector():
    b = LocalOperation("bob", np.diag([1, 0]))
    t = transfer_to_alice_side(S75, b)
    assert _transfer_residual(S75, b, t) <= 1e-9


def test_transfer_round_trip_random(rng):
    for _ in range(100):
        n = int(rng.integers(2, 6))
        s = random_pure_state(n, n, rng)
        b = LocalOperation("bob", random_kraus(n, rng))
        t = transfer_to_alice_side(s, b)
        assert _transfer_residual(s, b, t) <= 1e-9
        assert nx.is_unitary(t.bob_fix, 1e-9)
        assert nx.spectral_norm(t.alice_op.kraus) <= 1 + 1e-9


def test_transfer_rejects_rank_deficient():
    with pytest.raises(RankDeficiencyError):
        transfer_to_alice_side(PureBipartiteState(np.array([[1, 0], [0, 0]])), LocalOperation.identity("bob", 2))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_alice_operations_compose(seed, n):
    rng = np.random.default_rng(seed)
    s = random_pure_state(n, n, rng)
    a1 = LocalOperation("alice", random_kraus(n, rng))
    a2 = LocalOperation("alice", random_kraus(n, rng))
    mid, p1 = apply_pair(s, a1)
    out, p2 = apply_pair(mid, a2)
    direct, p = apply_pair(s, LocalOperation("alice", a2.kraus @ a1.kraus))
    assert abs(p1 * p2 - p) <= 1e-10
    assert_close(out.coeff, direct.coeff, 1e-10)


def test_random_kraus_unit_norm(rng):
    assert abs(nx.spectral_norm(random_kraus(4, rng)) - 1) <= 1e-12
    batch = random_kraus(3, rng, size=10)
    assert_close(np.linalg.norm(batch, 2, axis=(1, 2)), 1.0, 1e-12)
