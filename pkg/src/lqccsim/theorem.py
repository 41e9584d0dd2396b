"""Shared-concentrator decision, matrix-condition checks and randomized falsifiers.

Two pure states admit one common concentration filter exactly when their
marginals on the acting side coincide.  :func:`shared_concentrator` makes
that decision from the marginals alone; the falsifiers search random Kraus
pairs to corroborate the negative cases empirically and never decide a
verdict themselves.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .concentrate import MIN_COEFF, filter_from_marginal
from .errors import AnnihilationError, InvalidInputError, RankDeficiencyError
from .lqcc import ANNIHILATION_TOL, LocalOperation, apply_pair
from .states import (
    DensityMatrix,
    PureBipartiteState,
    Side,
    _fef_search,
    _fef_two_qubit,
    is_maximally_entangled,
    marginal,
    matrix_to_json,
    max_entangled_overlap,
    schmidt_coefficients,
)

#: default tolerance for comparing marginals
MARGINAL_TOL = 1e-7
#: trials per RNG stream in the falsifiers
CHUNK = 4096

PROPOSITION_MARGIN = 1e-4
PURIFICATION_MARGIN = 1e-3


def marginal_distance(s1: PureBipartiteState, s2: PureBipartiteState, side: Side | str) -> float:
    if s1.coeff.shape != s2.coeff.shape:
        raise InvalidInputError(f"state shapes differ: {s1.coeff.shape} vs {s2.coeff.shape}")
    r1 = np.asarray(marginal(s1, side).matrix)
    r2 = np.asarray(marginal(s2, side).matrix)
    return float(np.linalg.norm(r1 - r2))


def marginals_equal(
    s1: PureBipartiteState, s2: PureBipartiteState, side: Side | str = Side.ALICE, tol: float = MARGINAL_TOL
) -> bool:
    return marginal_distance(s1, s2, side) <= tol


@dataclass(frozen=True, eq=False)
class SharedConcentratorVerdict:
    """Outcome of :func:`shared_concentrator`.

    ``filter`` is the shared filter when concentratable; otherwise it is
    the first state's filter, kept to show that it fails on the second.
    """

    concentratable: bool
    side: Side
    marginal_distance: float
    filter: LocalOperation
    probabilities: tuple[float, float]
    outputs_maximal: tuple[bool, bool]
    output_overlaps: tuple[float, float]

    @property
    def decision(self) -> str:
        return "Concentratable" if self.concentratable else "Impossible"

    def to_json(self) -> dict:
        return {
            "decision": self.decision,
            "side": self.side.value,
            "marginalDistance": self.marginal_distance,
            "filter": self.filter.to_json(),
            "probabilities": list(self.probabilities),
            "outputsMaximal": list(self.outputs_maximal),
            "maxEntangledOverlap": list(self.output_overlaps),
        }


def _require_full_rank(s: PureBipartiteState, label: str):
    if s.dimA != s.dimB:
        raise InvalidInputError(f"{label} must live on C^N (x) C^N")
    lam = schmidt_coefficients(s)
    if lam[-1] <= MIN_COEFF:
        raise RankDeficiencyError(f"{label} has a zero Schmidt coefficient ({lam[-1]:.3e})")


def _apply_side(s: PureBipartiteState, op: LocalOperation) -> tuple[PureBipartiteState, float]:
    return apply_pair(s, op, None) if op.party is Side.ALICE else apply_pair(s, None, op)


def shared_concentrator(
    s1: PureBipartiteState,
    s2: PureBipartiteState,
    side: Side | str = Side.ALICE,
    tol: float = MARGINAL_TOL,
    max_tol: float = 1e-8,
) -> SharedConcentratorVerdict:
    side = Side.parse(side)
    _require_full_rank(s1, "first state")
    _require_full_rank(s2, "second state")
    dist = marginal_distance(s1, s2, side)
    same = dist <= tol
    if same:
        # average the two marginals so neither state is privileged
        rho = 0.5 * (np.asarray(marginal(s1, side).matrix) + np.asarray(marginal(s2, side).matrix))
    else:
        rho = np.asarray(marginal(s1, side).matrix)
    k = filter_from_marginal(rho, side)
    out1, p1 = _apply_side(s1, k)
    out2, p2 = _apply_side(s2, k)
    return SharedConcentratorVerdict(
        concentratable=same,
        side=side,
        marginal_distance=dist,
        filter=k,
        probabilities=(p1, p2),
        outputs_maximal=(is_maximally_entangled(out1, max_tol), is_maximally_entangled(out2, max_tol)),
        output_overlaps=(max_entangled_overlap(out1), max_entangled_overlap(out2)),
    )


@dataclass(frozen=True)
class MatrixConditionReport:
    """Result of testing ``C diag(lambda) == U diag(mu) U^dag`` for some constant ``C``."""

    holds: bool
    constant: float
    residual: float
    constant_is_one: bool
    spectra_agree: bool

    def __bool__(self) -> bool:
        return self.holds


def check_matrix_condition(u_a, lam, mu, tol: float = nx.TOL) -> MatrixConditionReport:
    u_a = nx.as_matrix(u_a, "u_a")
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n = u_a.shape[0]
    if not nx.is_unitary(u_a, tol=max(tol, nx.TOL)):
        raise InvalidInputError("u_a is not unitary")
    if lam.shape != (n,) or mu.shape != (n,):
        raise InvalidInputError("spectra must have the same length as the unitary")
    for name, v in (("lambda", lam), ("mu", mu)):
        if np.any(v < -tol) or abs(v.sum() - 1.0) > max(tol, nx.TOL):
            raise InvalidInputError(f"{name} is not a probability vector")
    rhs = (u_a * mu) @ u_a.conj().T
    # least-squares constant for C * diag(lambda) ~ rhs
    c = float(np.real(np.diag(rhs)) @ lam / (lam @ lam))
    residual = float(np.linalg.norm(c * np.diag(lam) - rhs))
    holds = residual <= tol
    return MatrixConditionReport(
        holds=holds,
        constant=c,
        residual=residual,
        constant_is_one=abs(c - 1.0) <= tol,
        spectra_agree=bool(np.all(np.abs(lam - mu) <= tol)),
    )


@dataclass(frozen=True)
class BobSideReport:
    """Clause-by-clause check that a Bob-side Kraus branch treats two states alike."""

    clauses: dict
    weights: tuple[float, float]
    post_spectra: tuple[tuple, tuple]
    spectra: tuple[tuple, tuple]

    @property
    def holds(self) -> bool:
        return all(self.clauses.values())

    @property
    def failed(self) -> list[str]:
        return [name for name, ok in self.clauses.items() if not ok]

    def __bool__(self) -> bool:
        return self.holds


def check_bob_side_reduction(
    s1: PureBipartiteState,
    s2: PureBipartiteState,
    b_op: LocalOperation,
    u_b,
    tol: float = 1e-8,
) -> BobSideReport:
    """Evaluate the Bob-side clauses for ``(I (x) B) s1`` and ``(I (x) B U_B) s2``.

    Clauses: post-operation Schmidt spectra agree, success weights agree,
    pre-operation Schmidt spectra agree, and Bob's marginals of ``s1`` and
    ``(I (x) U_B) s2`` agree.
    """
    if b_op.party is not Side.BOB:
        raise InvalidInputError("b_op must act on Bob")
    _require_full_rank(s1, "first state")
    _require_full_rank(s2, "second state")
    u_b = nx.as_matrix(u_b, "u_b")
    if not nx.is_unitary(u_b):
        raise InvalidInputError("u_b is not unitary")
    out1 = s1.apply_local(None, b_op.kraus)
    out2 = s2.apply_local(None, b_op.kraus @ u_b)
    eps1 = float(np.vdot(out1, out1).real)
    eps2 = float(np.vdot(out2, out2).real)
    if min(eps1, eps2) < ANNIHILATION_TOL:
        raise AnnihilationError("Bob's operation annihilates one of the states")
    kappa1 = schmidt_coefficients(PureBipartiteState(out1 / np.sqrt(eps1)))
    kappa2 = schmidt_coefficients(PureBipartiteState(out2 / np.sqrt(eps2)))
    lam = schmidt_coefficients(s1)
    mu = schmidt_coefficients(s2)
    rotated = PureBipartiteState(s2.apply_local(None, u_b))
    clauses = {
        "post_spectra_match": bool(np.all(np.abs(kappa1 - kappa2) <= tol)),
        "weights_equal": abs(eps1 - eps2) <= tol,
        "spectra_equal": bool(np.all(np.abs(lam - mu) <= tol)),
        "bob_marginals_equal": marginal_distance(s1, rotated, Side.BOB) <= tol,
    }
    return BobSideReport(
        clauses=clauses,
        weights=(eps1, eps2),
        post_spectra=(tuple(kappa1), tuple(kappa2)),
        spectra=(tuple(lam), tuple(mu)),
    )


@dataclass(frozen=True, eq=False)
class FalsifierReport:
    trials: int
    best_score: float
    best_a: np.ndarray
    best_b: np.ndarray
    seed: int
    best_trial: int = -1
    evaluated: int = 0
    clauses: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "trials": self.trials,
            "bestScore": self.best_score,
            "seed": self.seed,
            "bestTrial": self.best_trial,
            "evaluated": self.evaluated,
            "bestOperation": {"A": matrix_to_json(self.best_a), "B": matrix_to_json(self.best_b)},
            "clauses": list(self.clauses),
        }
        out.update(self.extra)
        return out


def _run_chunks(budget, seed, stream, fixed, score_chunk, dim, workers):
    """Shared search driver.

    ``fixed`` is a list of deterministic ``(A, B)`` candidates occupying the
    first trial indices; the remaining ``budget - len(fixed)`` trials are
    random Kraus pairs drawn chunk by chunk, each chunk from its own stream
    ``(seed, stream, chunk)``.  Returns ``(score, trial, A, B, evaluated)``.
    """
    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    fixed = fixed[:budget]
    n_random = budget - len(fixed)
    n_chunks = -(-n_random // CHUNK)

    def job(idx):
        if idx < 0:
            a = np.stack([f[0] for f in fixed])
            b = np.stack([f[1] for f in fixed])
            base = 0
        else:
            size = min(CHUNK, n_random - idx * CHUNK)
            rng = nx.derive_rng(seed, stream, idx)
            # scores are invariant under positive rescaling of A and B, so the
            # unit-spectral-norm scaling is applied to the winner only
            a = nx.complex_gaussian(rng, (size, dim, dim))
            b = nx.complex_gaussian(rng, (size, dim, dim))
            base = len(fixed) + idx * CHUNK
        scores = score_chunk(a, b)
        valid = np.isfinite(scores)
        if not valid.any():
            return -1.0, -1, None, None, 0
        scores = np.where(valid, scores, -1.0)
        i = int(np.argmax(scores))
        return float(scores[i]), base + i, _unit_norm(a[i]), _unit_norm(b[i]), int(valid.sum())

    jobs = ([-1] if fixed else []) + list(range(n_chunks))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, jobs))
    else:
        results = [job(j) for j in jobs]
    best = (-1.0, -1, np.eye(dim), np.eye(dim), 0)
    evaluated = 0
    for r in results:
        evaluated += r[4]
        # results are in trial order, so strict > keeps the earliest maximum
        if r[0] > best[0]:
            best = r
    return best[0], best[1], best[2], best[3], evaluated


def _unit_norm(k: np.ndarray) -> np.ndarray:
    return k / nx.spectral_norm(k)


def _top_sq(k: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(np.swapaxes(k.conj(), -1, -2) @ k)[..., -1]


def _survives(weight: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Branch weight test as if ``A`` and ``B`` had unit spectral norm.

    The Frobenius norm bounds the spectral norm from above, so the cheap
    test only needs the exact norms for borderline rows.
    """
    fro = np.einsum("mij,mij->m", a.conj(), a).real * np.einsum("mij,mij->m", b.conj(), b).real
    ok = weight >= ANNIHILATION_TOL * fro
    unsure = ~ok
    if unsure.any():
        ok[unsure] = weight[unsure] >= ANNIHILATION_TOL * _top_sq(a[unsure]) * _top_sq(b[unsure])
    return ok


def _closeness(o: np.ndarray, n: int) -> np.ndarray:
    sv = np.linalg.svd(o, compute_uv=False)
    return sv.sum(axis=-1) ** 2 / n


def _proposition_scores(c1: np.ndarray, c2: np.ndarray):
    n = c1.shape[0]

    def score(a, b):
        bt = np.swapaxes(b, -1, -2)
        o1 = a @ c1 @ bt
        o2 = a @ c2 @ bt
        p1 = np.einsum("mij,mij->m", o1.conj(), o1).real
        p2 = np.einsum("mij,mij->m", o2.conj(), o2).real
        ok = _survives(p1, a, b) & _survives(p2, a, b)
        p1 = np.where(ok, p1, 1.0)
        p2 = np.where(ok, p2, 1.0)
        o1 = o1 / np.sqrt(p1)[:, None, None]
        o2 = o2 / np.sqrt(p2)[:, None, None]
        overlap = np.where(ok, np.abs(np.einsum("mij,mij->m", o2.conj(), o1)) ** 2, -1.0)
        # score <= overlap, so the closeness factor (an SVD) is only needed
        # for trials whose overlap beats the best score among the top few
        # pruned rows keep 0, a valid lower bound that cannot win
        scores = np.zeros(overlap.shape)
        order = np.argsort(-overlap, kind="stable")
        head = order[:64]
        scores[head] = overlap[head] * _closeness(o1[head], n)
        best = np.max(np.where(overlap[head] >= 0, scores[head], -1.0), initial=-1.0)
        rest = order[64:]
        rest = rest[overlap[rest] > best]
        if rest.size:
            scores[rest] = overlap[rest] * _closeness(o1[rest], n)
        return np.where(ok, np.clip(scores, 0.0, 1.0), np.nan)

    return score


def proposition_falsifier(
    s1: PureBipartiteState, s2: PureBipartiteState, budget: int = 100_000, seed: int = 0, workers: int = 1
) -> FalsifierReport:
    """Search for one Kraus pair sending two different states to the same maximally entangled state.

    Each trial ``(A, B)`` is scored by ``|<out2|out1>|^2`` times the
    closeness of ``out1`` to the maximally entangled set
    (``(sum_i sqrt(kappa_i))^2 / N``); the score reaches 1 only when
    ``out1`` is maximally entangled and ``out2`` equals it up to phase.
    The first trials are the natural concentration filters of both states.
    """
    if s1.coeff.shape != s2.coeff.shape or s1.dimA != s1.dimB:
        raise InvalidInputError("states must share dimensions N x N")
    if np.linalg.norm(s1.coeff - s2.coeff) <= 1e-6:
        raise InvalidInputError("states coincide; the search needs two different states")
    n = s1.dimA
    fixed = [(np.eye(n), np.eye(n))]
    for s in (s1, s2):
        for side in (Side.ALICE, Side.BOB):
            try:
                k = filter_from_marginal(np.asarray(marginal(s, side).matrix), side).kraus
            except RankDeficiencyError:
                continue
            fixed.append((k, np.eye(n)) if side is Side.ALICE else (np.eye(n), k))
    score, trial, a, b, evaluated = _run_chunks(
        budget, seed, "proposition", fixed, _proposition_scores(s1.coeff, s2.coeff), n, workers
    )
    return FalsifierReport(
        trials=budget,
        best_score=max(score, 0.0),
        best_a=a,
        best_b=b,
        seed=seed,
        best_trial=trial,
        evaluated=evaluated,
        clauses=[
            "score = |<out2|out1>|^2 * maximal-entanglement closeness of out1",
            f"engineering margin: a correct build keeps bestScore < {1 - PROPOSITION_MARGIN} when the marginals differ",
            f"sameMarginalAlice={marginals_equal(s1, s2, Side.ALICE)}",
            f"sameMarginalBob={marginals_equal(s1, s2, Side.BOB)}",
        ],
    )


def _purification_scores(rho: np.ndarray, n: int, seed: int, fef_budget: int):
    def score(a, b):
        m = np.einsum("zij,zkl->zikjl", a, b).reshape(a.shape[0], n * n, n * n)
        out = m @ rho @ np.swapaxes(m.conj(), -1, -2)
        tr = np.einsum("zii->z", out).real
        ok = _survives(tr, a, b)
        out = out / np.where(ok, tr, 1.0)[:, None, None]
        out = 0.5 * (out + np.swapaxes(out.conj(), -1, -2))
        if n == 2:
            fef = _fef_two_qubit(out)
        else:
            fef = np.array(
                [_fef_search(o, n, fef_budget, nx.derive_rng(seed, "fef", i)) if k else 0.0 for i, (o, k) in enumerate(zip(out, ok))]
            )
        return np.where(ok, np.clip(fef, 0.0, 1.0), np.nan)

    return score


def purification_falsifier(
    rho: DensityMatrix, budget: int = 100_000, seed: int = 0, fef_budget: int = 4, workers: int = 1
) -> FalsifierReport:
    """Search local Kraus pairs ``A (x) B`` for one that purifies ``rho``.

    Each surviving output ``(A (x) B) rho (A (x) B)^dag / tr`` is scored by
    its fully entangled fraction (exact for two qubits, a search lower
    bound otherwise).  Trial 0 is the identity pair.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    n = rho.bipartite_dim()
    probs, vecs = rho.spectrum()
    rank = rho.rank()
    if rank < 2:
        raise InvalidInputError(
            "input is a pure state (rank 1); pure full-rank states are concentratable, not a purification problem"
        )
    m = np.asarray(rho.matrix)
    score, trial, a, b, evaluated = _run_chunks(
        budget, seed, "purification", [(np.eye(n), np.eye(n))], _purification_scores(m, n, seed, fef_budget), n, workers
    )
    return FalsifierReport(
        trials=budget,
        best_score=max(score, 0.0),
        best_a=a,
        best_b=b,
        seed=seed,
        best_trial=trial,
        evaluated=evaluated,
        clauses=[
            "score = fully entangled fraction of the normalized output"
            + ("" if n == 2 else " (search lower bound)"),
            f"engineering margin: a correct build keeps bestScore < {1 - PURIFICATION_MARGIN} on Werner inputs",
        ],
        extra={
            "rank": rank,
            "spectrum": [float(p) for p in probs[:rank]],
            "inputFullyEntangledFraction": float(np.clip(_fef_two_qubit(m), 0, 1)) if n == 2 else None,
        },
    )


def commutant_unitary(lam, seed=None, tol: float = 1e-12) -> np.ndarray:
    """Random unitary commuting with ``diag(lam)``.

    Block diagonal with an independent Haar block on every run of equal
    entries, so it is nontrivial only where ``lam`` is degenerate.
    """
    lam = np.asarray(lam, dtype=float)
    rng = nx.derive_rng(seed) if seed is not None else np.random.default_rng()
    n = lam.size
    w = np.zeros((n, n), dtype=np.complex128)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(lam[stop] - lam[start]) <= tol:
            stop += 1
        w[start:stop, start:stop] = nx.random_haar_unitary(stop - start, rng)
        start = stop
    return w


def shared_marginal_partner(s: PureBipartiteState, side: Side | str = Side.ALICE, seed=None) -> PureBipartiteState:
    """A random state with the same marginal as ``s`` on ``side``.

    Applies a unitary from the commutant of that marginal on ``side`` and a
    Haar unitary on the other party.
    """
    side = Side.parse(side)
    rng = nx.derive_rng(seed) if seed is not None else np.random.default_rng()
    rho = np.asarray(marginal(s, side).matrix)
    e, q = nx.eigh(rho)
    w = q @ commutant_unitary(np.round(e, 12), rng) @ q.conj().T
    other = nx.random_haar_unitary(s.dimB if side is Side.ALICE else s.dimA, rng)
    if side is Side.ALICE:
        return PureBipartiteState.from_unnormalized(s.apply_local(w, other))
    return PureBipartiteState.from_unnormalized(s.apply_local(other, w))
