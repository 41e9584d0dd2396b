"""Optimal single-pair concentration filters and the shift/flip proof operators.

Index convention for the shift and flip operators: basis labels run
``0 .. d-1`` (label ``i`` here is label ``i + 1`` in 1-based notation);
the mod-``d`` arithmetic is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .errors import InvalidInputError, RankDeficiencyError
from .lqcc import LocalOperation, apply_pair
from .states import PureBipartiteState, Side, marginal, schmidt_coefficients

#: smallest Schmidt coefficient accepted by :func:`build_filter`
MIN_COEFF = 1e-9


@dataclass(frozen=True, eq=False)
class ConcentrationResult:
    success_probability: float
    output_state: PureBipartiteState
    filter: LocalOperation


def _square_dim(s: PureBipartiteState) -> int:
    if s.dimA != s.dimB:
        raise InvalidInputError(f"concentration needs dimA == dimB, got {s.dimA}x{s.dimB}")
    return s.dimA


def gamma_max(s: PureBipartiteState) -> float:
    """Optimal single-copy concentration probability ``N * lambda_N``."""
    n = _square_dim(s)
    lam = schmidt_coefficients(s)
    return float(n * lam[-1]) if lam[-1] > MIN_COEFF * lam[0] else 0.0


def filter_from_marginal(rho: np.ndarray, party: Side | str = Side.ALICE) -> LocalOperation:
    """``K = sqrt(lambda_min) * rho^{-1/2}`` for a full-rank marginal ``rho``.

    Depends on the state only through ``rho``, so it concentrates every
    state sharing this marginal, each with probability ``N * lambda_min``.
    """
    e, q = nx.eigh(rho)
    if e[-1] <= MIN_COEFF:
        raise RankDeficiencyError(
            f"smallest Schmidt coefficient {e[-1]:.3e} is not positive; no concentration filter exists"
        )
    k = (q * np.sqrt(e[-1] / e)) @ q.conj().T
    top = nx.spectral_norm(k)
    if top > 1.0:
        k = k / top
    return LocalOperation(party, k)


def build_filter(s: PureBipartiteState, party: Side | str = Side.ALICE) -> LocalOperation:
    _square_dim(s)
    return filter_from_marginal(np.asarray(marginal(s, party).matrix), party)


def concentrate(s: PureBipartiteState, party: Side | str = Side.ALICE) -> ConcentrationResult:
    """Apply the optimal filter on one side and postselect on success."""
    party = Side.parse(party)
    k = build_filter(s, party)
    if party is Side.ALICE:
        out, p = apply_pair(s, k, None)
    else:
        out, p = apply_pair(s, None, k)
    return ConcentrationResult(p, out, k)


def _check_index(d: int, idx: int, what: str):
    if d < 1:
        raise InvalidInputError("dimension must be >= 1")
    if not 0 <= idx < d:
        raise InvalidInputError(f"{what} index {idx} out of range for dimension {d}")


def shift_operator(d: int, k: int) -> np.ndarray:
    """``T_k |j> = |(j + k) mod d>``."""
    _check_index(d, k, "shift")
    t = np.zeros((d, d), dtype=np.complex128)
    j = np.arange(d)
    t[(j + k) % d, j] = 1.0
    return t


def flip_operator(d: int, i: int) -> np.ndarray:
    """``S^i |j> = (-1)^{delta_ij} |j>``."""
    _check_index(d, i, "flip")
    diag = np.ones(d, dtype=np.complex128)
    diag[i] = -1.0
    return np.diag(diag)


@dataclass(frozen=True, eq=False)
class SubnormalizedState:
    """Coefficient matrix of an unnormalized vector, for proof bookkeeping only."""

    coeff: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeff))


def is_schmidt_diagonal(s: PureBipartiteState, tol: float = nx.TOL) -> bool:
    c = s.coeff
    if c.shape[0] != c.shape[1]:
        return False
    d = np.diag(c)
    off = c - np.diag(d)
    return bool(
        np.linalg.norm(off) <= tol
        and np.all(np.abs(d.imag) <= tol)
        and np.all(d.real >= -tol)
    )


def shift_flip_extract(s: PureBipartiteState, k: int, n: int) -> SubnormalizedState:
    """Apply ``I (x) (I - S^n) T_{(n-k) mod d}`` to a Schmidt-diagonal state.

    The result is ``2 sqrt(lambda_k) |k>|n>``: the flip difference keeps only
    the ``|n>`` component on Bob, and the shift routes Alice's ``|k>`` term there.
    """
    if not is_schmidt_diagonal(s):
        raise InvalidInputError("state must be in Schmidt-diagonal form sum_i sqrt(lambda_i)|i>|i>")
    d = s.dimA
    _check_index(d, k, "k")
    _check_index(d, n, "n")
    bob = (np.eye(d) - flip_operator(d, n)) @ shift_operator(d, (n - k) % d)
    return SubnormalizedState(s.apply_local(None, bob))
