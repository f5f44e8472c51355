"""
Quantum states, Kraus channels, measurement statistics and Choi representations.

Conventions:
    - vec() is column stacking: vec(A rho B) = (B^T kron A) vec(rho)
    - Choi matrices use the trace-one convention (Lambda (x) id)(|Omega><Omega|)
      with |Omega> = sum_i |i>|i> / sqrt(d)
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from src.core.errors import (
    CompletenessViolationError,
    DimensionMismatchError,
    InputError,
    InvalidStateError,
)
from src.core.matcore import (
    HERMITIAN_TOL,
    as_complex_matrix,
    as_hermitian,
    dagger,
    frobenius,
    matfunc,
    trace_distance,
)

logger = logging.getLogger(__name__)

STATE_TOL = 1e-10
OUTPUT_STATE_TOL = 1e-8
COMPLETENESS_TOL = 1e-9
STRICT_COMPLETENESS_TOL = 1e-12
PROBABILITY_FLOOR = 1e-12
KRAUS_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace state."""
    matrix: np.ndarray
    tol: float = field(default=STATE_TOL, repr=False)

    def __post_init__(self):
        m = as_hermitian(self.matrix, tol=max(HERMITIAN_TOL, self.tol))
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1.0) > self.tol:
            raise InvalidStateError(f"density matrix trace is {tr:.12g}, expected 1")
        min_eig = float(la.eigvalsh(m)[0])
        if min_eig < -self.tol:
            raise InvalidStateError(f"density matrix has negative eigenvalue {min_eig:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vector: Sequence[complex]) -> "DensityMatrix":
        psi = np.asarray(vector, dtype=np.complex128).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, d: int, index: int) -> "DensityMatrix":
        psi = np.zeros(d, dtype=np.complex128)
        psi[index] = 1.0
        return cls.pure(psi)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d, dtype=np.complex128) / d)

    def trace_distance(self, other: "DensityMatrix") -> float:
        return trace_distance(self.matrix, other.matrix)

    def allclose(self, other: "DensityMatrix", atol: float = 1e-10) -> bool:
        return self.dim == other.dim and np.allclose(self.matrix, other.matrix, atol=atol, rtol=0.0)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """CPTP map rho -> sum_k A_k rho A_k^dag."""
    operators: Tuple[np.ndarray, ...]
    tol: float = field(default=COMPLETENESS_TOL, repr=False)

    def __post_init__(self):
        ops = tuple(as_complex_matrix(a) for a in self.operators)
        if not ops:
            raise InputError("a Kraus channel needs at least one operator")
        shape = ops[0].shape
        if any(a.shape != shape for a in ops):
            raise DimensionMismatchError("Kraus operators have inconsistent shapes")
        object.__setattr__(self, "operators", ops)
        defect = self.completeness_defect()
        if defect > self.tol:
            raise CompletenessViolationError(
                f"||sum_k A_k^dag A_k - I||_F = {defect:.3e} exceeds {self.tol:.1e}"
            )

    @property
    def d_in(self) -> int:
        return self.operators[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def completeness_defect(self) -> float:
        total = sum(dagger(a) @ a for a in self.operators)
        return frobenius(total - np.eye(self.d_in))

    def check_strict(self, tol: float = STRICT_COMPLETENESS_TOL) -> bool:
        return self.completeness_defect() <= tol

    @classmethod
    def identity(cls, d: int) -> "KrausChannel":
        return cls((np.eye(d, dtype=np.complex128),))

    @classmethod
    def unitary(cls, u: np.ndarray) -> "KrausChannel":
        return cls((u,))

    @classmethod
    def bit_flip(cls, p: float) -> "KrausChannel":
        sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        return cls((np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * sx))

    @classmethod
    def dephasing(cls, p: float) -> "KrausChannel":
        sz = np.diag([1.0, -1.0]).astype(np.complex128)
        return cls((np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * sz))

    @classmethod
    def amplitude_damping(cls, p: float) -> "KrausChannel":
        a0 = np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=np.complex128)
        a1 = np.array([[0, np.sqrt(p)], [0, 0]], dtype=np.complex128)
        return cls((a0, a1))

    @classmethod
    def completely_depolarizing(cls, d: int) -> "KrausChannel":
        ops = []
        for i in range(d):
            for j in range(d):
                e = np.zeros((d, d), dtype=np.complex128)
                e[i, j] = 1.0 / np.sqrt(d)
                ops.append(e)
        return cls(tuple(ops))


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    """
    One outcome of a generalized measurement.

    post_state is None when the probability is below the floor; the
    unnormalized state A rho A^dag is always available.
    """
    label: int
    probability: float
    post_state: Optional[DensityMatrix]
    unnormalized: np.ndarray

    @property
    def below_floor(self) -> bool:
        return self.post_state is None


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    d: int
    matrix: np.ndarray


def _check_dims(ch: KrausChannel, rho: DensityMatrix):
    if ch.d_in != rho.dim:
        raise DimensionMismatchError(f"channel input dimension {ch.d_in} != state dimension {rho.dim}")


def apply(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """rho -> sum_k A_k rho A_k^dag."""
    _check_dims(ch, rho)
    out = sum(a @ rho.matrix @ dagger(a) for a in ch.operators)
    return DensityMatrix(0.5 * (out + dagger(out)), tol=OUTPUT_STATE_TOL)


def measure(
    operators: Sequence[np.ndarray],
    rho: DensityMatrix,
    pfloor: float = PROBABILITY_FLOOR,
    tol: float = COMPLETENESS_TOL,
) -> List[MeasurementOutcome]:
    """
    Outcome statistics and post-measurement states of a pure measurement.

    Args:
        operators: Kraus operators {A_k}, one per outcome
        rho: state being measured
        pfloor: probabilities at or below this get no normalized post state

    Returns:
        One MeasurementOutcome per operator, in order
    """
    ch = KrausChannel(tuple(operators), tol=tol)
    _check_dims(ch, rho)
    outcomes = []
    for k, a in enumerate(ch.operators):
        unnormalized = a @ rho.matrix @ dagger(a)
        unnormalized = 0.5 * (unnormalized + dagger(unnormalized))
        p = min(max(float(np.real(np.trace(unnormalized))), 0.0), 1.0)
        post = None
        if p > pfloor:
            post = DensityMatrix(unnormalized / p, tol=OUTPUT_STATE_TOL)
        else:
            logger.debug(f"Outcome {k} below probability floor ({p:.3e}); post state left unnormalized")
        outcomes.append(MeasurementOutcome(label=k, probability=p, post_state=post, unnormalized=unnormalized))
    return outcomes


def choi(ch: KrausChannel) -> ChoiMatrix:
    """(Lambda (x) id)(|Omega><Omega|), trace one."""
    if ch.d_in != ch.d_out:
        raise DimensionMismatchError("Choi matrix needs a channel with d_in == d_out")
    d = ch.d_in
    vecs = np.stack([a.reshape(-1) for a in ch.operators], axis=1) / np.sqrt(d)
    c = vecs @ dagger(vecs)
    return ChoiMatrix(d=d, matrix=0.5 * (c + dagger(c)))


def channel_distance(a: KrausChannel, b: KrausChannel) -> float:
    """Frobenius distance between trace-one Choi matrices."""
    if (a.d_in, a.d_out) != (b.d_in, b.d_out):
        raise DimensionMismatchError("channels act on different dimensions")
    return frobenius(choi(a).matrix - choi(b).matrix)


def compose(a: KrausChannel, b: KrausChannel, tol: Optional[float] = None) -> KrausChannel:
    """The channel a after b, with operators {A_i B_j}."""
    if a.d_in != b.d_out:
        raise DimensionMismatchError(f"cannot compose: {a.d_in} != {b.d_out}")
    ops = tuple(ai @ bj for ai in a.operators for bj in b.operators)
    return KrausChannel(ops, tol=tol if tol is not None else a.tol + b.tol)


def to_superoperator(ch: KrausChannel) -> np.ndarray:
    """Column-stacking superoperator sum_k conj(A_k) (x) A_k."""
    return sum(np.kron(a.conj(), a) for a in ch.operators)


def choi_from_superoperator(superop: np.ndarray) -> ChoiMatrix:
    d = int(round(np.sqrt(superop.shape[0])))
    if d * d != superop.shape[0] or superop.shape[0] != superop.shape[1]:
        raise DimensionMismatchError(f"superoperator shape {superop.shape} is not d^2 x d^2")
    s4 = np.asarray(superop).reshape(d, d, d, d)
    c = s4.transpose(1, 3, 0, 2).reshape(d * d, d * d) / d
    return ChoiMatrix(d=d, matrix=0.5 * (c + dagger(c)))


def kraus_from_choi(c: ChoiMatrix, cutoff: float = KRAUS_CUTOFF, tol: float = 1e-8) -> KrausChannel:
    """Minimal Kraus form from the Choi eigendecomposition."""
    values, vectors = la.eigh(c.matrix)
    lmax = float(values.max())
    ops = [
        np.sqrt(c.d * lam) * vectors[:, k].reshape(c.d, c.d)
        for k, lam in enumerate(values)
        if lam > cutoff * max(lmax, 1.0)
    ]
    return KrausChannel(tuple(ops), tol=tol)


def superoperator_channel(superop: np.ndarray, tol: float = 1e-8) -> KrausChannel:
    return kraus_from_choi(choi_from_superoperator(superop), tol=tol)


def renormalize(ch: KrausChannel, tol: float = COMPLETENESS_TOL) -> KrausChannel:
    """
    Restore exact completeness by A_k -> A_k S^{-1/2}, S = sum_k A_k^dag A_k.

    Only small defects (<= tol) are repaired; larger ones are rejected.
    """
    defect = ch.completeness_defect()
    if defect > tol:
        raise CompletenessViolationError(f"completeness defect {defect:.3e} too large to re-normalize")
    if defect == 0.0:
        return ch
    s = sum(dagger(a) @ a for a in ch.operators)
    s_inv_half = matfunc(s, lambda x: 1.0 / np.sqrt(x), domain=(1e-300, np.inf))
    logger.debug(f"Re-normalized Kraus set with defect {defect:.3e}")
    return KrausChannel(tuple(a @ s_inv_half for a in ch.operators), tol=STRICT_COMPLETENESS_TOL)
