"""Dense complex linear algebra kernel.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Factorizations delegate to LAPACK through numpy and reorder results so
that spectra are always returned in descending order.
"""

from __future__ import annotations

import zlib

import numpy as np

from .errors import InvalidInputError, NumericalFailure

ComplexMatrix = np.ndarray

#: default tolerance for equality tests
TOL = 1e-9
#: default tolerance for factorization residuals
RESIDUAL_TOL = 1e-10


def as_matrix(m, name: str = "matrix") -> ComplexMatrix:
    """Return ``m`` as a finite 2-D complex128 array (a copy)."""
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf entries")
    return arr


def frozen(m: ComplexMatrix) -> ComplexMatrix:
    """Mark an array read-only so value objects stay immutable."""
    m.setflags(write=False)
    return m


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    return m.conj().T


def _descending(values: np.ndarray) -> np.ndarray:
    # stable so ties keep their original index order
    return np.argsort(-values, kind="stable")


def svd(m) -> tuple[ComplexMatrix, np.ndarray, ComplexMatrix]:
    """Thin SVD ``M = U @ diag(S) @ V^dagger`` with ``S`` descending.

    Returns ``(U, S, V)``; note that ``V`` (not ``V^dagger``) is returned.
    """
    m = as_matrix(m)
    if not np.any(m):
        raise InvalidInputError("svd of the zero matrix is not defined here")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    order = _descending(s)
    return u[:, order], s[order], dagger(vh)[:, order]


def is_hermitian(h, tol: float = TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(h)))
    return float(np.linalg.norm(h - dagger(h))) <= tol * scale


def eigh(h, tol: float = TOL) -> tuple[np.ndarray, ComplexMatrix]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises InvalidInputError if ``h`` is not Hermitian within ``tol``
    (relative to ``max(1, ||h||_F)``).
    """
    h = as_matrix(h)
    if not is_hermitian(h, tol):
        raise InvalidInputError("eigh requires a square Hermitian matrix")
    h = 0.5 * (h + dagger(h))
    try:
        e, q = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigh did not converge: {exc}") from exc
    order = _descending(e)
    return e[order], q[:, order]


def kron(a, b) -> ComplexMatrix:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def is_unitary(u, tol: float = TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0]))) <= tol


def has_orthonormal_columns(v, tol: float = RESIDUAL_TOL) -> bool:
    v = np.asarray(v)
    return float(np.linalg.norm(dagger(v) @ v - np.eye(v.shape[1]))) <= tol


def complete_isometry(v, tol: float = RESIDUAL_TOL) -> ComplexMatrix:
    """Extend an ``n x k`` isometry to an ``n x n`` unitary.

    The first ``k`` columns of the result are exactly ``v``; the rest span
    the orthogonal complement of its range.
    """
    v = as_matrix(v, "v")
    n, k = v.shape
    if k > n:
        raise InvalidInputError(f"isometry has more columns ({k}) than rows ({n})")
    if not has_orthonormal_columns(v, tol):
        raise InvalidInputError("columns of v are not orthonormal")
    if k == n:
        return v.copy()
    complement = np.eye(n) - v @ dagger(v)
    # projector onto the complement: its top n-k left singular vectors span it
    u, _, _ = np.linalg.svd(complement)
    extra = u[:, : n - k]
    # one Gram-Schmidt pass against v keeps the result unitary to machine precision
    extra = extra - v @ (dagger(v) @ extra)
    extra, _ = np.linalg.qr(extra)
    return np.hstack([v, extra])


def derive_rng(seed, *names: str | int) -> np.random.Generator:
    """Named, reproducible RNG stream derived from ``seed``.

    ``derive_rng(42, "superdense", 7)`` always yields the same generator and
    is independent of ``derive_rng(42, "purify", 7)``.
    """
    if isinstance(seed, np.random.Generator):
        if names:
            raise InvalidInputError("stream names require an integer seed")
        return seed
    keys = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for name in names:
        keys.append(zlib.crc32(name.encode()) if isinstance(name, str) else int(name))
    return np.random.default_rng(np.random.SeedSequence(keys))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian samples, E|z|^2 = 1."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_haar_unitary(n: int, seed=None) -> ComplexMatrix:
    """Haar-distributed ``n x n`` unitary (Gaussian matrix + phase-fixed QR)."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = derive_rng(seed) if seed is not None else np.random.default_rng()
    z = complex_gaussian(rng, (n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def psd_sqrt(h, tol: float = TOL) -> ComplexMatrix:
    """Square root of a positive semidefinite matrix.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more
    negative is rejected.
    """
    e, q = eigh(h, tol)
    if e.size and e[-1] < -tol:
        raise InvalidInputError(f"matrix is not positive semidefinite (min eigenvalue {e[-1]:.3e})")
    e = np.clip(e, 0.0, None)
    return (q * np.sqrt(e)) @ dagger(q)


def spectral_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m), 2))
