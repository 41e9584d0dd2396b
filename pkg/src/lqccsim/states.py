"""Bipartite pure states, Schmidt decomposition, marginals and related measures.

A pure state on ``C^m (x) C^n`` is stored as its coefficient matrix ``c``
with ``|psi> = sum_ij c[i, j] |i>_A |j>_B``.  A product of local operators
``A (x) B`` acts as ``c -> A @ c @ B.T``; every identity in the package is
written in this one convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import numerics as nx
from .errors import InvalidInputError


class Side(str, Enum):
    ALICE = "alice"
    BOB = "bob"

    @classmethod
    def parse(cls, value: "Side | str") -> "Side":
        if isinstance(value, Side):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(f"side must be 'alice' or 'bob', got {value!r}") from None


#: threshold (relative to the largest coefficient) below which a Schmidt
#: coefficient counts as zero
RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PureBipartiteState:
    """Normalized pure state given by its ``dimA x dimB`` coefficient matrix."""

    coeff: np.ndarray

    def __post_init__(self):
        c = nx.as_matrix(self.coeff, "coeff")
        norm = float(np.linalg.norm(c))
        if abs(norm - 1.0) > nx.TOL:
            raise InvalidInputError(f"state is not normalized (norm {norm:.12g})")
        object.__setattr__(self, "coeff", nx.frozen(c))

    @classmethod
    def from_unnormalized(cls, coeff) -> "PureBipartiteState":
        c = nx.as_matrix(coeff, "coeff")
        norm = np.linalg.norm(c)
        if norm == 0:
            raise InvalidInputError("cannot normalize the zero vector")
        return cls(c / norm)

    @classmethod
    def from_vector(cls, vec, dim_a: int, dim_b: int) -> "PureBipartiteState":
        return cls(np.asarray(vec, dtype=np.complex128).reshape(dim_a, dim_b))

    @property
    def dimA(self) -> int:
        return self.coeff.shape[0]

    @property
    def dimB(self) -> int:
        return self.coeff.shape[1]

    @property
    def vector(self) -> np.ndarray:
        """State vector in the ``A (x) B`` product basis (row-major)."""
        return self.coeff.reshape(-1)

    def apply_local(self, a=None, b=None) -> np.ndarray:
        """Unnormalized coefficient matrix of ``(a (x) b)|psi>``; ``None`` means identity."""
        c = self.coeff
        if a is not None:
            c = np.asarray(a) @ c
        if b is not None:
            c = c @ np.asarray(b).T
        return c

    def to_json(self) -> dict:
        return {"dimA": self.dimA, "dimB": self.dimB, **matrix_to_json(self.coeff)}

    @classmethod
    def from_json(cls, data: dict) -> "PureBipartiteState":
        coeff = matrix_from_json(data)
        if coeff.shape != (data.get("dimA"), data.get("dimB")):
            raise InvalidInputError(
                f"declared dims ({data.get('dimA')}, {data.get('dimB')}) do not match matrix shape {coeff.shape}"
            )
        return cls(coeff)


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(data: dict) -> np.ndarray:
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != im.shape or re.ndim != 2:
        raise InvalidInputError(f"'re' and 'im' must be equal-shaped 2-D arrays, got {re.shape} and {im.shape}")
    return nx.as_matrix(re + 1j * im)


@dataclass(frozen=True, eq=False)
class SchmidtForm:
    """``coeff = left @ diag(sqrt(coeffs)) @ right.T`` with ``coeffs`` descending.

    Columns of ``left`` / ``right`` are the Schmidt kets of Alice / Bob.
    """

    coeffs: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return schmidt_rank(self.coeffs)

    def reconstruct(self) -> np.ndarray:
        return (self.left * np.sqrt(self.coeffs)) @ self.right.T


def schmidt_rank(coeffs, tol: float = RANK_TOL) -> int:
    coeffs = np.asarray(coeffs)
    return int(np.count_nonzero(coeffs > tol * coeffs[0]))


def schmidt_decompose(s: PureBipartiteState) -> SchmidtForm:
    u, sv, v = nx.svd(s.coeff)
    lam = sv**2
    lam = lam / lam.sum()
    return SchmidtForm(nx.frozen(lam), nx.frozen(u), nx.frozen(v.conj()))


def schmidt_coefficients(s: PureBipartiteState) -> np.ndarray:
    sv = np.linalg.svd(s.coeff, compute_uv=False)
    lam = np.sort(sv**2)[::-1]
    return lam / lam.sum()


def entanglement_entropy(s: PureBipartiteState) -> float:
    """Von Neumann entropy of either marginal, in bits."""
    lam = schmidt_coefficients(s)
    lam = lam[lam > 0]
    return float(-(lam * np.log2(lam)).sum()) + 0.0


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator."""

    matrix: np.ndarray
    tol: float = nx.TOL

    def __post_init__(self):
        m = nx.as_matrix(self.matrix, "density matrix")
        if m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"density matrix must be square, got {m.shape}")
        if not nx.is_hermitian(m, self.tol):
            raise InvalidInputError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > self.tol:
            raise InvalidInputError(f"density matrix trace is {tr:.12g}, expected 1")
        m = 0.5 * (m + m.conj().T)
        if np.linalg.eigvalsh(m)[0] < -self.tol:
            raise InvalidInputError("density matrix has negative eigenvalues")
        object.__setattr__(self, "matrix", nx.frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, s: PureBipartiteState) -> "DensityMatrix":
        v = s.vector
        return cls(np.outer(v, v.conj()))

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (descending) and eigenvectors as columns."""
        return nx.eigh(self.matrix, self.tol)

    def rank(self, tol: float = RANK_TOL) -> int:
        e = np.linalg.eigvalsh(self.matrix)
        return int(np.count_nonzero(e > tol * max(e[-1], tol)))

    def bipartite_dim(self) -> int:
        """``N`` such that the matrix acts on ``C^N (x) C^N``."""
        n = int(round(np.sqrt(self.dim)))
        if n * n != self.dim:
            raise InvalidInputError(f"dimension {self.dim} is not a perfect square N*N")
        return n

    def to_json(self) -> dict:
        n = self.bipartite_dim()
        return {"dimA": n, "dimB": n, **matrix_to_json(self.matrix)}


def marginal(s: PureBipartiteState, side: Side | str) -> DensityMatrix:
    """Reduced density operator of one party."""
    c = s.coeff
    if Side.parse(side) is Side.ALICE:
        rho = c @ c.conj().T
    else:
        rho = c.T @ c.conj()
    return DensityMatrix(rho)


def max_entangled(n: int) -> PureBipartiteState:
    """The standard state ``(1/sqrt(N)) sum_i |i>|i>``."""
    if n < 2:
        raise InvalidInputError("maximally entangled state needs N >= 2")
    return PureBipartiteState(np.eye(n) / np.sqrt(n))


def is_maximally_entangled(s: PureBipartiteState, tol: float = nx.TOL) -> bool:
    if s.dimA != s.dimB:
        return False
    lam = schmidt_coefficients(s)
    return bool(np.all(np.abs(lam - 1.0 / s.dimA) <= tol))


def max_entangled_overlap(s: PureBipartiteState) -> float:
    """Largest ``|<Phi'|psi>|^2`` over maximally entangled ``|Phi'>``.

    Equals ``(sum_i sqrt(lambda_i))^2 / N``; it is 1 exactly when ``s`` is
    maximally entangled.
    """
    sv = np.linalg.svd(s.coeff, compute_uv=False)
    return float(sv.sum() ** 2 / s.dimA)


def random_pure_state(dim_a: int, dim_b: int, seed=None) -> PureBipartiteState:
    """Normalized complex Gaussian coefficient matrix (Hilbert-Schmidt induced measure)."""
    if dim_a < 1 or dim_b < 1:
        raise InvalidInputError("dimensions must be >= 1")
    rng = nx.derive_rng(seed) if seed is not None else np.random.default_rng()
    return PureBipartiteState.from_unnormalized(nx.complex_gaussian(rng, (dim_a, dim_b)))


def state_from_schmidt(lam, left=None, right=None) -> PureBipartiteState:
    """Build ``(left (x) right) sum_i sqrt(lam_i)|i>|i>``."""
    lam = np.asarray(lam, dtype=float)
    c = np.diag(np.sqrt(lam)).astype(np.complex128)
    if left is not None:
        c = np.asarray(left) @ c
    if right is not None:
        c = c @ np.asarray(right).T
    return PureBipartiteState(c)


# magic basis in |00>,|01>,|10>,|11> order; maximally entangled two-qubit
# states are exactly the real combinations of these up to a global phase
MAGIC_BASIS = np.array(
    [
        [1, 0, 0, 1],
        [1j, 0, 0, -1j],
        [0, 1j, 1j, 0],
        [0, 1, -1, 0],
    ],
    dtype=np.complex128,
).T / np.sqrt(2.0)


def _fef_two_qubit(rho: np.ndarray) -> np.ndarray:
    """Exact fully entangled fraction for (a batch of) 4x4 density matrices."""
    m = MAGIC_BASIS.conj().T @ rho @ MAGIC_BASIS
    return np.linalg.eigvalsh(m.real)[..., -1]


def _fef_search(rho: np.ndarray, n: int, budget: int, rng: np.random.Generator, sweeps: int = 50) -> float:
    # overlap with (U (x) I)|Phi_N> is vec(U)^dagger rho vec(U) / N, a convex
    # quadratic in U; each polar step maximizes its linearization, so the
    # ascent is monotone from every random start
    best = 0.0
    for _ in range(max(1, budget)):
        u = nx.random_haar_unitary(n, rng)
        val = 0.0
        for _ in range(sweeps):
            g = (rho @ u.reshape(-1)).reshape(n, n)
            w, _, vh = np.linalg.svd(g)
            u = w @ vh
            new = float(np.real(u.reshape(-1).conj() @ rho @ u.reshape(-1))) / n
            if new - val < 1e-14:
                val = max(val, new)
                break
            val = new
        best = max(best, val)
    return best


def fully_entangled_fraction(rho: DensityMatrix, sample_budget: int = 64, seed=0) -> float:
    """Maximal overlap of ``rho`` with a maximally entangled state.

    Exact for two qubits (magic-basis evaluation).  For ``N >= 3`` the
    value is a lower bound found by polar-decomposition ascent from
    ``sample_budget`` Haar-random starting unitaries.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    n = rho.bipartite_dim()
    m = np.asarray(rho.matrix)
    if n == 1:
        val = float(m[0, 0].real)
    elif n == 2:
        val = float(_fef_two_qubit(m))
    else:
        val = _fef_search(m, n, sample_budget, nx.derive_rng(seed, "fef"))
    return float(min(1.0, max(0.0, val)))


def werner_state(p: float, n: int = 2) -> DensityMatrix:
    """``p |Phi_N><Phi_N| + (1-p) I / N^2``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError("Werner parameter must lie in [0, 1]")
    phi = max_entangled(n).vector
    return DensityMatrix(p * np.outer(phi, phi.conj()) + (1 - p) * np.eye(n * n) / (n * n))
