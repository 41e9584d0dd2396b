import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqccsim import numerics as nx
from lqccsim.errors import InvalidInputError
from lqccsim.states import (
    DensityMatrix,
    PureBipartiteState,
    Side,
    _fef_search,
    entanglement_entropy,
    fully_entangled_fraction,
    is_maximally_entangled,
    marginal,
    max_entangled,
    random_pure_state,
    schmidt_decompose,
    state_from_schmidt,
    werner_state,
)

from conftest import assert_close


def test_schmidt_examples():
    assert_close(schmidt_decompose(max_entangled(2)).coeffs, [0.5, 0.5], 1e-12)
    product = PureBipartiteState(np.array([[1, 0], [0, 0]]))
    sf = schmidt_decompose(product)
    assert_close(sf.coeffs, [1, 0], 1e-12)
    assert sf.rank == 1
    assert_close(schmidt_decompose(PureBipartiteState(np.diag([0.8, 0.6]))).coeffs, [0.64, 0.36], 1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), n=st.integers(1, 8))
def test_schmidt_round_trip(seed, m, n):
    s = random_pure_state(m, n, seed)
    sf = schmidt_decompose(s)
    assert_close(sf.reconstruct(), s.coeff, 1e-9)
    assert abs(sf.coeffs.sum() - 1) <= 1e-9
    assert np.all(np.diff(sf.coeffs) <= 1e-15)
    # Schmidt kets are orthonormal
    assert nx.has_orthonormal_columns(sf.left, 1e-9) and nx.has_orthonormal_columns(sf.right, 1e-9)


def test_marginal_examples():
    assert_close(marginal(max_entangled(2), Side.ALICE).matrix, np.eye(2) / 2, 1e-15)
    product = PureBipartiteState(np.array([[1, 0], [0, 0]]))
    assert_close(marginal(product, "alice").matrix, np.diag([1, 0]), 0)
    s = PureBipartiteState(np.diag([np.sqrt(0.75), np.sqrt(0.25)]))
    assert_close(marginal(s, "bob").matrix, np.diag([0.75, 0.25]), 1e-15)


def test_bob_marginal_is_partial_trace_over_alice(rng):
    s = random_pure_state(3, 4, rng)
    v = s.vector
    full = np.outer(v, v.conj()).reshape(3, 4, 3, 4)
    assert_close(marginal(s, Side.BOB).matrix, np.einsum("ajak->jk", full), 1e-14)
    assert_close(marginal(s, Side.ALICE).matrix, np.einsum("ajbj->ab", full), 1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), n=st.integers(1, 8))
def test_marginal_spectra_coincide(seed, m, n):
    s = random_pure_state(m, n, seed)
    ea = np.sort(np.linalg.eigvalsh(marginal(s, "alice").matrix))[::-1]
    eb = np.sort(np.linalg.eigvalsh(marginal(s, "bob").matrix))[::-1]
    r = min(m, n)
    assert_close(ea[:r], eb[:r], 1e-9)
    assert np.all(np.abs(ea[r:]) <= 1e-9) and np.all(np.abs(eb[r:]) <= 1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6))
def test_local_unitaries_preserve_schmidt_and_alice_marginal(seed, n):
    rng = np.random.default_rng(seed)
    s = random_pure_state(n, n, rng)
    ua, ub = nx.random_haar_unitary(n, rng), nx.random_haar_unitary(n, rng)
    t = PureBipartiteState(s.apply_local(ua, ub))
    assert_close(schmidt_decompose(t).coeffs, schmidt_decompose(s).coeffs, 1e-9)
    only_bob = PureBipartiteState(s.apply_local(None, ub))
    assert_close(marginal(only_bob, "alice").matrix, marginal(s, "alice").matrix, 1e-9)


def test_max_entangled():
    assert_close(max_entangled(2).coeff, np.eye(2) / np.sqrt(2), 0)
    assert_close(schmidt_decompose(max_entangled(3)).coeffs, [1 / 3] * 3, 1e-12)
    assert_close(marginal(max_entangled(4), "alice").matrix, np.eye(4) / 4, 1e-15)
    with pytest.raises(InvalidInputError):
        max_entangled(1)


def test_is_maximally_entangled(rng):
    phi = max_entangled(3)
    ua, ub = nx.random_haar_unitary(3, rng), nx.random_haar_unitary(3, rng)
    assert is_maximally_entangled(PureBipartiteState(phi.apply_local(ua, ub)))
    assert not is_maximally_entangled(state_from_schmidt([0.75, 0.25]))
    assert is_maximally_entangled(max_entangled(2))


def test_fully_entangled_fraction_examples():
    phi = DensityMatrix.from_pure(max_entangled(2))
    assert abs(fully_entangled_fraction(phi) - 1.0) <= 1e-12
    assert abs(fully_entangled_fraction(DensityMatrix(np.eye(4) / 4)) - 0.25) <= 1e-12
    # Werner: p + (1 - p)/4
    assert abs(fully_entangled_fraction(werner_state(0.5)) - 0.625) <= 1e-12


def test_fef_magic_basis_matches_search(rng):
    # independent route: polar ascent over Alice unitaries
    for _ in range(10):
        g = nx.complex_gaussian(rng, (4, 4))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        exact = fully_entangled_fraction(DensityMatrix(rho))
        searched = _fef_search(rho, 2, 20, rng)
        assert searched <= exact + 1e-10
        assert abs(searched - exact) <= 1e-8


def test_fef_werner_qutrits_is_lower_bound():
    # isotropic state: p + (1 - p)/N^2 is attained at |Phi_N>
    val = fully_entangled_fraction(werner_state(0.5, 3), sample_budget=8, seed=1)
    assert abs(val - (0.5 + 0.5 / 9)) <= 1e-8


def test_fef_rejects_non_square_dimension():
    with pytest.raises(InvalidInputError):
        fully_entangled_fraction(DensityMatrix(np.eye(6) / 6))


def test_random_pure_state_basics():
    assert np.array_equal(random_pure_state(3, 2, 5).coeff, random_pure_state(3, 2, 5).coeff)
    rng = np.random.default_rng(0)
    norms = [np.linalg.norm(random_pure_state(3, 4, rng).coeff) for _ in range(1000)]
    assert_close(norms, 1.0, 1e-12)


def test_random_pure_state_largest_coefficient_mean():
    # Schmidt density for 2x2 Gaussian states is 3x^2 on x = lambda_1 - lambda_2 in [0, 1],
    # so E[lambda_max] = (1 + 3/4)/2 = 7/8; a 10^6-sample simulation gives 0.87503 (std 0.0969)
    rng = np.random.default_rng(3)
    samples = 10_000
    lam = np.array([schmidt_decompose(random_pure_state(2, 2, rng)).coeffs[0] for _ in range(samples)])
    sigma = 0.0969 / np.sqrt(samples)
    assert abs(lam.mean() - 0.875) <= 5 * sigma


def test_state_validation():
    with pytest.raises(InvalidInputError):
        PureBipartiteState(np.diag([1.0, 1.0]))
    with pytest.raises(InvalidInputError):
        PureBipartiteState.from_unnormalized(np.zeros((2, 2)))


def test_state_is_immutable():
    s = max_entangled(2)
    with pytest.raises(ValueError):
        s.coeff[0, 0] = 0


def test_state_json_round_trip(rng):
    s = random_pure_state(2, 3, rng)
    data = json.loads(json.dumps(s.to_json()))
    assert set(data) == {"dimA", "dimB", "re", "im"}
    assert np.array_equal(PureBipartiteState.from_json(data).coeff, s.coeff)
    data["dimA"] = 3
    with pytest.raises(InvalidInputError):
        PureBipartiteState.from_json(data)


def test_density_validation():
    with pytest.raises(InvalidInputError):
        DensityMatrix(np.diag([0.5, 0.6]))
    with pytest.raises(InvalidInputError):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidInputError):
        DensityMatrix(np.array([[0.5, 0.5], [0, 0.5]]))
    assert DensityMatrix(np.eye(4) / 4).rank() == 4
    assert DensityMatrix.from_pure(max_entangled(2)).rank() == 1


def test_entropy():
    assert abs(entanglement_entropy(max_entangled(4)) - 2.0) <= 1e-12
    assert entanglement_entropy(PureBipartiteState(np.array([[1, 0], [0, 0]]))) == 0.0
