"""Local Kraus operations, probe dilation with postselection, side transfer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .errors import AnnihilationError, InvalidInputError, RankDeficiencyError
from .states import PureBipartiteState, Side, matrix_from_json, matrix_to_json, schmidt_decompose

#: below this branch weight a Kraus operator is considered to annihilate the state
ANNIHILATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LocalOperation:
    """One Kraus branch acting on a single party's subsystem."""

    party: Side
    kraus: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "party", Side.parse(self.party))
        k = nx.as_matrix(self.kraus, "kraus")
        if k.shape[0] != k.shape[1]:
            raise InvalidInputError(f"Kraus operator must be square, got {k.shape}")
        top = nx.spectral_norm(k) ** 2
        if top > 1.0 + nx.TOL:
            raise InvalidInputError(f"Kraus operator is not a contraction (largest eig of K^dag K = {top:.12g})")
        object.__setattr__(self, "kraus", nx.frozen(k))

    @property
    def dim(self) -> int:
        return self.kraus.shape[0]

    @classmethod
    def identity(cls, party: Side | str, dim: int) -> "LocalOperation":
        return cls(party, np.eye(dim))

    def to_json(self) -> dict:
        return {"party": self.party.value, **matrix_to_json(self.kraus)}

    @classmethod
    def from_json(cls, data: dict) -> "LocalOperation":
        if "party" not in data:
            raise InvalidInputError("operation JSON needs a 'party' field")
        return cls(data["party"], matrix_from_json(data))


def is_complete(ops, tol: float = nx.TOL) -> bool:
    """True if ``sum_k K_k^dag K_k <= I`` for a family of branches of one party."""
    ops = list(ops)
    if not ops:
        return True
    total = sum(op.kraus.conj().T @ op.kraus for op in ops)
    return bool(np.linalg.eigvalsh(total)[-1] <= 1.0 + tol)


def _check_pair(s: PureBipartiteState, a: LocalOperation | None, b: LocalOperation | None):
    if a is not None:
        if a.party is not Side.ALICE:
            raise InvalidInputError("first operation must act on Alice")
        if a.dim != s.dimA:
            raise InvalidInputError(f"Alice operation is {a.dim}-dimensional, state has dimA={s.dimA}")
    if b is not None:
        if b.party is not Side.BOB:
            raise InvalidInputError("second operation must act on Bob")
        if b.dim != s.dimB:
            raise InvalidInputError(f"Bob operation is {b.dim}-dimensional, state has dimB={s.dimB}")


def apply_pair(
    s: PureBipartiteState, a: LocalOperation | None = None, b: LocalOperation | None = None
) -> tuple[PureBipartiteState, float]:
    """Apply ``A (x) B`` and postselect; returns ``(normalized image, probability)``."""
    _check_pair(s, a, b)
    out = s.apply_local(None if a is None else a.kraus, None if b is None else b.kraus)
    p = float(np.vdot(out, out).real)
    if p < ANNIHILATION_TOL:
        raise AnnihilationError(f"operation annihilates the state (probability {p:.3e})")
    return PureBipartiteState(out / np.sqrt(p)), p


@dataclass(frozen=True, eq=False)
class ProbeDilation:
    """Unitary on ``system (x) probe`` realizing a Kraus branch by postselection.

    Index convention: ``unitary[(i, p), (j, q)]`` with the flat index
    ``i * probe_dim + p``.  The probe starts in ``|P_0>``; outcome
    ``success_outcome`` (``|P_1>``) carries the Kraus branch.
    """

    system_dim: int
    probe_dim: int
    unitary: np.ndarray
    success_outcome: int = 1

    def block(self, out_probe: int, in_probe: int = 0) -> np.ndarray:
        """``<P_out| U |P_in>`` as a ``system_dim x system_dim`` operator."""
        u = self.unitary.reshape(self.system_dim, self.probe_dim, self.system_dim, self.probe_dim)
        return u[:, out_probe, :, in_probe]

    @property
    def kraus(self) -> np.ndarray:
        return self.block(self.success_outcome, 0)

    def branches(self, s: PureBipartiteState, party: Side | str = Side.ALICE) -> np.ndarray:
        """Unnormalized coefficient matrices of every probe branch.

        Result has shape ``(probe_dim, dimA, dimB)``; branch ``p`` is the
        component of ``(U_AP (x) I_B) |psi>|P_0>`` along ``|P_p>``.
        """
        party = Side.parse(party)
        u = self.unitary.reshape(self.system_dim, self.probe_dim, self.system_dim, self.probe_dim)[:, :, :, 0]
        if party is Side.ALICE:
            if s.dimA != self.system_dim:
                raise InvalidInputError("dilation dimension does not match Alice's subsystem")
            return np.einsum("apx,xb->pab", u, s.coeff)
        if s.dimB != self.system_dim:
            raise InvalidInputError("dilation dimension does not match Bob's subsystem")
        return np.einsum("bpx,ax->pab", u, s.coeff)


def dilate(op: LocalOperation, probe_dim: int = 2) -> ProbeDilation:
    """Embed a Kraus branch ``K`` into a unitary acting with a probe.

    ``U (|psi>|P_0>) = (K|psi>)|P_1> + (sqrt(I - K^dag K)|psi>)|P_0>``,
    completed to a full unitary on the remaining probe inputs.
    """
    if probe_dim < 2:
        raise InvalidInputError("probe dimension must be >= 2")
    if not isinstance(op, LocalOperation):
        raise InvalidInputError("dilate expects a LocalOperation")
    k = op.kraus
    n = op.dim
    rest = nx.psd_sqrt(np.eye(n) - k.conj().T @ k)
    # isometry columns indexed by system input j, rows by (i, p)
    iso = np.zeros((n, probe_dim, n), dtype=np.complex128)
    iso[:, 1, :] = k
    iso[:, 0, :] = rest
    iso = iso.reshape(n * probe_dim, n)
    full = nx.complete_isometry(iso, tol=1e-9)
    # place the isometry on the input columns (j, P_0), the completion elsewhere
    u = np.empty_like(full)
    in_cols = np.arange(n) * probe_dim
    other = np.setdiff1d(np.arange(n * probe_dim), in_cols)
    u[:, in_cols] = full[:, :n]
    u[:, other] = full[:, n:]
    return ProbeDilation(n, probe_dim, nx.frozen(u), 1)


def branch_weights(d: ProbeDilation, s: PureBipartiteState, party: Side | str = Side.ALICE) -> np.ndarray:
    br = d.branches(s, party)
    return np.einsum("pab,pab->p", br.conj(), br).real


def simulate_measurement(
    d: ProbeDilation, s: PureBipartiteState, seed=None, party: Side | str = Side.ALICE
) -> tuple[int, PureBipartiteState]:
    """Run the dilation on ``s``, measure the probe, return ``(outcome, post-state)``."""
    br = d.branches(s, party)
    w = np.einsum("pab,pab->p", br.conj(), br).real
    w = np.clip(w, 0.0, None)
    rng = nx.derive_rng(seed) if seed is not None else np.random.default_rng()
    outcome = int(rng.choice(d.probe_dim, p=w / w.sum()))
    return outcome, PureBipartiteState(br[outcome] / np.sqrt(w[outcome]))


def joint_vector(s: PureBipartiteState, probe_dim: int) -> np.ndarray:
    """``|psi>_{AB} |P_0>`` as a vector ordered ``A (x) P (x) B``."""
    v = np.zeros((s.dimA, probe_dim, s.dimB), dtype=np.complex128)
    v[:, 0, :] = s.coeff
    return v.reshape(-1)


@dataclass(frozen=True, eq=False)
class SideTransfer:
    """Alice-side equivalent of a Bob operation on a fixed state.

    ``scale * (I (x) bob_fix)(alice_op (x) I)|psi> == (I (x) B)|psi>``.
    """

    alice_op: LocalOperation
    bob_fix: np.ndarray
    scale: float = 1.0


def transfer_to_alice_side(s: PureBipartiteState, b: LocalOperation, tol: float = nx.TOL) -> SideTransfer:
    """Move a Bob-side Kraus operator to Alice, up to a unitary correction on Bob.

    Tries the direct transfer ``c B^T c^{-1}`` (no correction) first; if
    that is not a contraction, falls back to the singular-value matched
    form, which always is.
    """
    if b.party is not Side.BOB:
        raise InvalidInputError("operation to transfer must act on Bob")
    if s.dimA != s.dimB or b.dim != s.dimB:
        raise InvalidInputError("side transfer needs a square state matching the operation")
    sf = schmidt_decompose(s)
    if sf.coeffs[-1] <= tol:
        raise RankDeficiencyError("side transfer needs full Schmidt rank")
    c = s.coeff
    target = c @ b.kraus.T
    direct = target @ np.linalg.inv(c)
    top = nx.spectral_norm(direct)
    if top <= 1.0 + tol:
        scale = max(1.0, top)
        return SideTransfer(LocalOperation(Side.ALICE, direct / scale), np.eye(s.dimB), scale)
    # target = P D Q^T and c = U S W^T; with fix = Q W^dag the Alice operator is
    # P diag(D/S) U^dag, a contraction because sigma_i(c B^T) <= sigma_i(c) ||B||
    p, d, q = nx.svd(target) if np.any(target) else (np.eye(s.dimA), np.zeros(s.dimA), np.eye(s.dimB))
    q = q.conj()
    root = np.sqrt(sf.coeffs)
    a = (p * (d / root)) @ sf.left.conj().T
    fix = q @ sf.right.conj().T
    top = nx.spectral_norm(a)
    scale = max(1.0, top)
    return SideTransfer(LocalOperation(Side.ALICE, a / scale), fix, scale)


def random_kraus(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Complex Gaussian matrices rescaled to unit spectral norm.

    With ``size`` a batch of shape ``(size, dim, dim)`` is returned.
    """
    shape = (dim, dim) if size is None else (size, dim, dim)
    g = nx.complex_gaussian(rng, shape)
    gram = np.swapaxes(g.conj(), -1, -2) @ g
    top = np.sqrt(np.linalg.eigvalsh(gram)[..., -1])
    g = g / top[..., None, None]
    return g if size is not None else g.reshape(dim, dim)
