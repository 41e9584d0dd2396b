"""Probabilistic superdense coding over a partially entangled qubit pair.

Bob encodes two bits with one of ``I, X, iY, Z`` on his qubit and sends
it to Alice.  Alice filters her original qubit with the optimal
concentration filter of the shared state; on success the pair is one of
four orthogonal maximally entangled states, which she distinguishes with
a projective measurement.  A failed filter is an inconclusive run, so
decoding never errs and succeeds with probability ``2 * lambda_2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .concentrate import build_filter
from .errors import InvalidInputError, RankDeficiencyError
from .lqcc import ProbeDilation, dilate
from .states import PureBipartiteState, schmidt_coefficients, state_from_schmidt

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
I_PAULI_Y = np.array([[0, 1], [-1, 0]], dtype=np.complex128)  # i * sigma_y
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

#: message -> Bob's encoding unitary
ENCODINGS = (PAULI_I, PAULI_X, I_PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    decoded: int | None
    filter_fired: bool

    @property
    def status(self) -> str:
        return "Success" if self.success else "Inconclusive"


def _check_qubit_pair(s: PureBipartiteState):
    if s.coeff.shape != (2, 2):
        raise InvalidInputError("superdense coding needs a 2x2 state")


def _check_message(msg: int):
    if msg not in (0, 1, 2, 3):
        raise InvalidInputError(f"message must be in 0..3, got {msg!r}")


def encode(s: PureBipartiteState, msg: int) -> PureBipartiteState:
    _check_qubit_pair(s)
    _check_message(msg)
    return PureBipartiteState(s.apply_local(None, ENCODINGS[msg]))


def success_probability(s: PureBipartiteState) -> float:
    """``2 * lambda_2``; also the optimum for unambiguously telling the four encodings apart."""
    _check_qubit_pair(s)
    return float(2.0 * schmidt_coefficients(s)[-1])


class Decoder:
    """Alice's concentrate-then-measure decoder for a fixed shared state."""

    def __init__(self, s: PureBipartiteState):
        _check_qubit_pair(s)
        if schmidt_coefficients(s)[-1] <= 1e-9:
            raise RankDeficiencyError("shared state is a product state; nothing to concentrate")
        self.state = s
        self.filter = build_filter(s)
        self.dilation: ProbeDilation = dilate(self.filter)
        # measurement basis: the four filtered encodings, orthonormal by construction
        k = self.filter.kraus
        basis = []
        for u in ENCODINGS:
            v = (k @ s.coeff @ u.T).reshape(-1)
            basis.append(v / np.linalg.norm(v))
        self.basis = np.array(basis)
        gram = self.basis.conj() @ self.basis.T
        if np.linalg.norm(gram - np.eye(4)) > 1e-8:
            raise AssertionError("filtered encodings are not orthonormal")

    def run(self, msg: int, rng: np.random.Generator) -> TrialOutcome:
        _check_message(msg)
        received = self.state.apply_local(None, ENCODINGS[msg])
        branches = self.dilation.branches(PureBipartiteState(received))
        weights = np.clip(np.einsum("pab,pab->p", branches.conj(), branches).real, 0.0, None)
        outcome = int(rng.choice(len(weights), p=weights / weights.sum()))
        if outcome != self.dilation.success_outcome:
            return TrialOutcome(False, None, False)
        post = branches[outcome].reshape(-1) / np.sqrt(weights[outcome])
        born = np.clip(np.abs(self.basis.conj() @ post) ** 2, 0.0, None)
        decoded = int(rng.choice(4, p=born / born.sum()))
        return TrialOutcome(True, decoded, True)


def decode_run(s: PureBipartiteState, msg: int, seed=None) -> TrialOutcome:
    rng = nx.derive_rng(seed) if seed is not None else np.random.default_rng()
    return Decoder(s).run(msg, rng)


def run_batch(s: PureBipartiteState, trials: int, seed: int = 42) -> dict:
    """Simulate ``trials`` runs with uniformly random messages.

    Trial ``t`` draws its message and measurement outcomes from the stream
    ``(seed, "superdense", t)``.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    dec = Decoder(s)
    successes = errors = 0
    for t in range(trials):
        rng = nx.derive_rng(seed, "superdense", t)
        msg = int(rng.integers(4))
        out = dec.run(msg, rng)
        if out.success:
            successes += 1
            errors += out.decoded != msg
    return {
        "trials": trials,
        "successes": successes,
        "successRate": successes / trials,
        "errorsGivenSuccess": errors,
        "expectedRate": success_probability(s),
    }


def qubit_state(lambda2: float) -> PureBipartiteState:
    """``sqrt(1 - lambda2)|00> + sqrt(lambda2)|11>``."""
    if not 0.0 < lambda2 <= 0.5:
        raise InvalidInputError("lambda2 must lie in (0, 0.5]")
    return state_from_schmidt([1.0 - lambda2, lambda2])
