"""
Dense complex-matrix numerics for the toolkit.
Hermitian eigendecomposition, matrix functions, polar decomposition,
pseudo-inverse on the support, matrix exponential and norms.

Matrices are plain numpy arrays. HermitianMatrix and ComplexMatrix are
validated, read-only arrays produced by as_complex_matrix / as_hermitian.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from src.core.errors import (
    DimensionMismatchError,
    DomainError,
    InputError,
    MatrixOverflowError,
    NonConvergenceError,
    NotHermitianError,
    ZeroOperatorError,
)

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
HermitianMatrix = np.ndarray

HERMITIAN_TOL = 1e-12
EIGEN_DEGENERACY_TOL = 1e-10
CLAMP_WINDOW = 1e-9
PINV_RELCUT = 1e-10
PINV_ABS_FLOOR = 1e-14
# ||e^M|| <= e^{||M||}; beyond this the result leaves double range.
EXPM_NORM_LIMIT = 700.0


def _freeze(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


def as_complex_matrix(data, square: bool = False) -> ComplexMatrix:
    """
    Validate and copy an array-like into a read-only complex matrix.

    Args:
        data: anything numpy can turn into a 2-D array
        square: require rows == cols

    Returns:
        Read-only complex128 array
    """
    m = np.array(data, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatchError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("matrix contains NaN or Inf entries")
    return _freeze(m)


def as_hermitian(data, tol: float = HERMITIAN_TOL) -> HermitianMatrix:
    """Validate Hermiticity relative to the Frobenius norm and symmetrize."""
    m = np.array(as_complex_matrix(data, square=True))
    scale = np.linalg.norm(m)
    defect = np.linalg.norm(m - m.conj().T)
    if defect > tol * max(scale, 1.0):
        raise NotHermitianError(f"matrix is not Hermitian (||M - M^dag||_F = {defect:.3e})")
    return _freeze(0.5 * (m + m.conj().T))


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return frobenius(dagger(u) @ u - np.eye(u.shape[0])) <= tol


def projector(d: int, index: int = 0) -> HermitianMatrix:
    """|index><index| in dimension d."""
    p = np.zeros((d, d), dtype=np.complex128)
    p[index, index] = 1.0
    return _freeze(p)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with eigenvectors as the columns of a unitary."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


@dataclass(frozen=True)
class PolarFactors:
    """A = unitary @ positive."""
    unitary: ComplexMatrix
    positive: HermitianMatrix


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # First significant component made real and positive.
    idx = int(np.argmax(np.abs(v) > 1e-8))
    phase = v[idx] / abs(v[idx])
    return v / phase


def _canonical_basis(vectors: np.ndarray) -> np.ndarray:
    """
    Basis-independent orthonormal basis for the span of the given columns.

    Gram-Schmidt on the columns of the span's projector, taken in index order.
    """
    k = vectors.shape[1]
    proj = vectors @ dagger(vectors)
    basis = []
    for j in range(proj.shape[1]):
        col = proj[:, j].copy()
        for b in basis:
            col -= (dagger(b) @ col) * b
        norm = np.linalg.norm(col)
        if norm > 1e-6:
            basis.append(col / norm)
        if len(basis) == k:
            break
    return np.column_stack(basis)


def heig(m: HermitianMatrix) -> EigenSystem:
    """
    Hermitian eigendecomposition with deterministic eigenvectors.

    Degenerate clusters are re-orthogonalized from their projector in index
    order and every eigenvector gets the first-significant-component-positive
    phase, so identical inputs always produce identical outputs.
    """
    h = as_hermitian(m, tol=max(HERMITIAN_TOL, 1e-10))
    try:
        values, vectors = la.eigh(h)
    except la.LinAlgError as e:
        raise NonConvergenceError(f"Hermitian eigensolver failed: {e}") from e

    scale = max(float(np.max(np.abs(values))), 1.0)
    vectors = np.array(vectors)
    start = 0
    n = len(values)
    while start < n:
        stop = start + 1
        while stop < n and values[stop] - values[stop - 1] <= EIGEN_DEGENERACY_TOL * scale:
            stop += 1
        if stop - start > 1:
            vectors[:, start:stop] = _canonical_basis(vectors[:, start:stop])
        start = stop
    for j in range(n):
        vectors[:, j] = _fix_phase(vectors[:, j])
    return EigenSystem(eigenvalues=_freeze(np.array(values)), eigenvectors=_freeze(vectors))


def matfunc(
    m: HermitianMatrix,
    f: Callable[[np.ndarray], np.ndarray],
    domain: Optional[Tuple[float, float]] = None,
    clamp: float = CLAMP_WINDOW,
) -> HermitianMatrix:
    """
    Apply a real scalar function to a Hermitian matrix through its spectrum.

    Args:
        m: Hermitian matrix
        f: vectorized real function of the eigenvalues
        domain: closed interval where f is defined; eigenvalues within
            `clamp` outside it are clamped, further out raise DomainError
        clamp: width of the clamping window

    Returns:
        V diag(f(lambda)) V^dag
    """
    es = heig(m)
    values = np.array(es.eigenvalues)
    if domain is not None:
        lo, hi = domain
        if np.any(values < lo - clamp) or np.any(values > hi + clamp):
            raise DomainError(
                f"spectrum [{values.min():.6g}, {values.max():.6g}] outside domain [{lo}, {hi}]"
            )
        values = np.clip(values, lo, hi)
    with np.errstate(all="ignore"):
        fv = np.asarray(f(values), dtype=np.float64)
    if not np.all(np.isfinite(fv)):
        raise DomainError("function undefined at some eigenvalue")
    v = es.eigenvectors
    out = (v * fv) @ dagger(v)
    return _freeze(0.5 * (out + dagger(out)))


def msqrt(m: HermitianMatrix) -> HermitianMatrix:
    return matfunc(m, np.sqrt, domain=(0.0, np.inf), clamp=1e-10 * max(1.0, frobenius(m)))


def mcos(m: HermitianMatrix) -> HermitianMatrix:
    return matfunc(m, np.cos)


def msin(m: HermitianMatrix) -> HermitianMatrix:
    return matfunc(m, np.sin)


def marccos(m: HermitianMatrix) -> HermitianMatrix:
    """Principal arccos, spectrum clamped into [-1, 1] within the clamp window."""
    return matfunc(m, np.arccos, domain=(-1.0, 1.0))


def _null_basis(m: np.ndarray, rank: int) -> np.ndarray:
    """Deterministic orthonormal basis of the orthogonal complement of m's first `rank` columns."""
    d = m.shape[0]
    comp = np.eye(d) - m[:, :rank] @ dagger(m[:, :rank])
    es = heig(comp)
    return es.eigenvectors[:, rank:]


def polar(a: ComplexMatrix) -> PolarFactors:
    """
    Right polar decomposition a = U |a| with |a| = sqrt(a^dag a).

    On the support of |a| the unitary is a |a|^{-1}. On the kernel it is the
    unitary closest to the identity-on-kernel choice when that map is well
    conditioned, otherwise the singular-vector pairing. The result is always
    unitary.
    """
    a = as_complex_matrix(a, square=True)
    d = a.shape[0]
    w, s, vh = la.svd(a)
    v = dagger(vh)
    tol = max(d * np.finfo(float).eps * (s[0] if s.size else 0.0), 1e-300)
    rank = int(np.sum(s > tol))

    positive = (v[:, :rank] * s[:rank]) @ dagger(v[:, :rank])
    positive = 0.5 * (positive + dagger(positive))

    unitary = w[:, :rank] @ dagger(v[:, :rank])
    if rank < d:
        w_perp = _null_basis(w, rank)
        v_perp = _null_basis(v, rank)
        overlap = dagger(w_perp) @ v_perp
        ow, os_, ovh = la.svd(overlap)
        if os_.min() > 1e-6:
            # closest unitary to the identity restricted to the kernel
            block = ow @ ovh
            unitary = unitary + w_perp @ block @ dagger(v_perp)
        else:
            unitary = unitary + w_perp @ dagger(v_perp)
    return PolarFactors(unitary=_freeze(unitary), positive=_freeze(positive))


def pinv_on_support(m: HermitianMatrix, relcut: float = PINV_RELCUT) -> HermitianMatrix:
    """Invert eigenvalues >= relcut * lambda_max of a PSD matrix, zero the rest."""
    es = heig(m)
    values = es.eigenvalues
    lmax = float(values.max())
    if lmax < PINV_ABS_FLOOR:
        raise ZeroOperatorError("operator has no support above the absolute floor")
    inv = np.zeros_like(values)
    keep = values >= relcut * lmax
    inv[keep] = 1.0 / values[keep]
    v = es.eigenvectors
    out = (v * inv) @ dagger(v)
    return _freeze(0.5 * (out + dagger(out)))


def support_projector(m: HermitianMatrix, relcut: float = PINV_RELCUT) -> HermitianMatrix:
    es = heig(m)
    values = es.eigenvalues
    lmax = max(float(values.max()), 0.0)
    keep = values >= max(relcut * lmax, PINV_ABS_FLOOR)
    v = es.eigenvectors[:, keep]
    return _freeze(v @ dagger(v))


def expm(m: ComplexMatrix) -> ComplexMatrix:
    """Matrix exponential (scaling and squaring); refuses 1-norms above EXPM_NORM_LIMIT."""
    m = as_complex_matrix(m, square=True)
    norm = float(np.linalg.norm(m, 1))
    if norm > EXPM_NORM_LIMIT:
        raise MatrixOverflowError(f"||M||_1 = {norm:.3g} exceeds expm limit {EXPM_NORM_LIMIT}")
    return _freeze(la.expm(m))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    diff = 0.5 * (diff + dagger(diff))
    return 0.5 * float(np.sum(np.abs(la.eigvalsh(diff))))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def ancilla_block(joint: np.ndarray, d: int, outcome: int) -> np.ndarray:
    """(I (x) <outcome|) joint (I (x) |outcome>) for a system(d) (x) qubit state."""
    j4 = np.asarray(joint).reshape(d, 2, d, 2)
    return j4[:, outcome, :, outcome]
