"""
Lindblad generators in GKS and canonical form.

Handles canonicalization of the GKS coefficient matrix, Liouvillian
construction (column-stacking, matching src.core.channels), exact propagation
by the superoperator exponential and the semigroup check. A fixed-step RK4
integrator is kept as an independent oracle.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.core.channels import DensityMatrix, KrausChannel, OUTPUT_STATE_TOL, superoperator_channel
from src.core.errors import (
    DimensionMismatchError,
    InputError,
    NegativeEigenvalueError,
    NegativeTimeError,
    NonTracelessWarning,
    NotTracelessError,
)
from src.core.matcore import as_complex_matrix, as_hermitian, dagger, expm, frobenius, heig

logger = logging.getLogger(__name__)

BASIS_TOL = 1e-12
TRACELESS_TOL = 1e-10
GKS_PSD_TOL = 1e-10
CANONICAL_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Hilbert-Schmidt orthonormal basis of the d^2 - 1 traceless operators."""
    d: int
    elements: Tuple[np.ndarray, ...]

    def __post_init__(self):
        els = tuple(as_complex_matrix(f, square=True) for f in self.elements)
        if len(els) != self.d * self.d - 1:
            raise InputError(f"basis needs {self.d * self.d - 1} elements, got {len(els)}")
        if any(f.shape != (self.d, self.d) for f in els):
            raise DimensionMismatchError("basis element shape does not match d")
        if any(abs(np.trace(f)) > BASIS_TOL for f in els):
            raise InputError("basis elements must be traceless")
        stacked = np.stack([f.reshape(-1) for f in els], axis=1)
        gram = dagger(stacked) @ stacked
        if frobenius(gram - np.eye(len(els))) > BASIS_TOL * len(els):
            raise InputError("basis is not Hilbert-Schmidt orthonormal")
        object.__setattr__(self, "elements", els)

    def coefficients(self, op: np.ndarray) -> np.ndarray:
        """c_i = tr(F_i^dag op)."""
        return np.array([np.trace(dagger(f) @ op) for f in self.elements])

    def combine(self, coeffs: Sequence[complex]) -> np.ndarray:
        return sum(c * f for c, f in zip(coeffs, self.elements))


def gell_mann_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann matrices normalized to tr(F_i^dag F_j) = delta_ij."""
    elements = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2)
            anti = np.zeros((d, d), dtype=np.complex128)
            anti[j, k] = -1j / np.sqrt(2)
            anti[k, j] = 1j / np.sqrt(2)
            elements.extend([sym, anti])
    for l in range(1, d):
        diag = np.zeros(d, dtype=np.complex128)
        diag[:l] = 1.0
        diag[l] = -l
        elements.append(np.diag(diag) / np.sqrt(l * (l + 1)))
    return OperatorBasis(d=d, elements=tuple(elements))


@dataclass(frozen=True, eq=False)
class GKSGenerator:
    """GKS form: H, traceless basis {F_i}, PSD coefficient matrix A."""
    H: np.ndarray
    basis: OperatorBasis
    A: np.ndarray

    def __post_init__(self):
        h = as_hermitian(self.H, tol=1e-10)
        a = as_hermitian(self.A, tol=1e-10)
        if h.shape != (self.basis.d, self.basis.d):
            raise DimensionMismatchError("H does not match the basis dimension")
        n = len(self.basis.elements)
        if a.shape != (n, n):
            raise DimensionMismatchError(f"A must be {n}x{n}")
        mu = heig(a).eigenvalues if n else np.zeros(0)
        if mu.size and mu[0] < -GKS_PSD_TOL * max(1.0, float(mu[-1])):
            raise NegativeEigenvalueError(f"GKS matrix has eigenvalue {mu[0]:.3e}; not a valid generator")
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "A", a)

    @property
    def d(self) -> int:
        return self.basis.d


@dataclass(frozen=True, eq=False)
class CanonicalGenerator:
    """Canonical form: H and traceless Lindblad operators {L_k}."""
    H: np.ndarray
    lindblad_ops: Tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        h = as_hermitian(self.H, tol=1e-10)
        ops = tuple(as_complex_matrix(l, square=True) for l in self.lindblad_ops)
        for k, l in enumerate(ops):
            if l.shape != h.shape:
                raise DimensionMismatchError(f"L_{k} shape {l.shape} does not match H {h.shape}")
            if abs(np.trace(l)) > TRACELESS_TOL * max(1.0, frobenius(l)):
                raise NotTracelessError(f"L_{k} has trace {np.trace(l):.3e}")
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "lindblad_ops", ops)

    @property
    def d(self) -> int:
        return self.H.shape[0]

    @classmethod
    def zero(cls, d: int) -> "CanonicalGenerator":
        return cls(np.zeros((d, d), dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class Superoperator:
    """d^2 x d^2 matrix acting on column-stacked density matrices."""
    d: int
    matrix: np.ndarray

    def act(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.d)


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


def gks_rhs(g: GKSGenerator, rho: np.ndarray) -> np.ndarray:
    """GKS right-hand side evaluated directly."""
    out = -1j * (g.H @ rho - rho @ g.H)
    fs = g.basis.elements
    for i, fi in enumerate(fs):
        for j, fj in enumerate(fs):
            a = g.A[i, j]
            if a == 0:
                continue
            fdf = dagger(fi) @ fj
            out = out - 0.5 * a * (fdf @ rho + rho @ fdf - 2 * fj @ rho @ dagger(fi))
    return out


def canonical_rhs(g: CanonicalGenerator, rho: np.ndarray) -> np.ndarray:
    """Canonical right-hand side evaluated directly."""
    out = -1j * (g.H @ rho - rho @ g.H)
    for l in g.lindblad_ops:
        ldl = dagger(l) @ l
        out = out - 0.5 * (ldl @ rho + rho @ ldl - 2 * l @ rho @ dagger(l))
    return out


def canonicalize(g: GKSGenerator, cutoff: float = CANONICAL_CUTOFF) -> CanonicalGenerator:
    """
    Diagonalize A and emit L_k = sqrt(mu_k) sum_i v_ik F_i.

    Note the index placement in the GKS form: the jump term is F_j rho F_i^dag
    weighted by a_ij, so L_k uses the eigenvector components directly.
    """
    es = heig(g.A)
    mu = es.eigenvalues
    mu_max = float(mu.max()) if mu.size else 0.0
    ops = []
    for k, m in enumerate(mu):
        if m <= cutoff * mu_max or m <= 0:
            continue
        v = es.eigenvectors[:, k]
        ops.append(np.sqrt(m) * g.basis.combine(v.conj()))
    logger.debug(f"Canonicalized GKS generator into {len(ops)} Lindblad operators")
    return CanonicalGenerator(H=g.H, lindblad_ops=tuple(ops))


def gks_from_lindblad_op(l: np.ndarray, basis: OperatorBasis) -> GKSGenerator:
    """Rank-one GKS matrix for a single Lindblad operator (H = 0)."""
    l = as_complex_matrix(l, square=True)
    if abs(np.trace(l)) > TRACELESS_TOL:
        raise NotTracelessError(f"Lindblad operator has trace {np.trace(l):.3e}")
    c = basis.coefficients(l)
    # a_ij multiplies F_j rho F_i^dag, so a_ij = conj(c_i) c_j reproduces L rho L^dag
    a = np.outer(c.conj(), c)
    return GKSGenerator(H=np.zeros_like(l), basis=basis, A=a)


def to_gks(g: CanonicalGenerator, basis: OperatorBasis) -> GKSGenerator:
    """Sum of the rank-one GKS matrices of every L_k."""
    n = len(basis.elements)
    a = np.zeros((n, n), dtype=np.complex128)
    for l in g.lindblad_ops:
        c = basis.coefficients(l)
        a += np.outer(c.conj(), c)
    return GKSGenerator(H=g.H, basis=basis, A=a)


def add_generators(g1: CanonicalGenerator, g2: CanonicalGenerator) -> CanonicalGenerator:
    if g1.d != g2.d:
        raise DimensionMismatchError("generators act on different dimensions")
    return CanonicalGenerator(H=g1.H + g2.H, lindblad_ops=g1.lindblad_ops + g2.lindblad_ops)


def absorb_traces(
    h: np.ndarray, ops: Sequence[np.ndarray], warn: bool = True
) -> Tuple[CanonicalGenerator, List[complex]]:
    """
    Remove trace components from Lindblad operators without changing the dynamics.

    L = L0 + c I contributes D[L] = D[L0] - i[dH, .] with
    dH = (i/2)(conj(c) L0 - c L0^dag), which is added to H.

    Returns:
        The traceless generator and the discarded trace components c_k
    """
    h = np.array(as_hermitian(h, tol=1e-10))
    d = h.shape[0]
    cleaned = []
    discarded = []
    for k, l in enumerate(ops):
        l = np.array(as_complex_matrix(l, square=True))
        c = np.trace(l) / d
        if abs(c) > TRACELESS_TOL * max(1.0, frobenius(l)):
            l0 = l - c * np.eye(d)
            h = h + 0.5j * (np.conj(c) * l0 - c * dagger(l0))
            if warn:
                msg = f"L_{k} is not traceless (tr/d = {c:.6g}); compiling its traceless part plus a Hamiltonian correction"
                logger.warning(msg, extra={"stage": "absorb_traces"})
                warnings.warn(msg, NonTracelessWarning, stacklevel=2)
            discarded.append(complex(c))
            l = l0
        else:
            discarded.append(0j)
            l = l - c * np.eye(d)
        cleaned.append(l)
    return CanonicalGenerator(H=0.5 * (h + dagger(h)), lindblad_ops=tuple(cleaned)), discarded


def liouvillian(g: CanonicalGenerator) -> Superoperator:
    """Column-stacking matrix of the canonical right-hand side."""
    d = g.d
    eye = np.eye(d)
    mat = -1j * (np.kron(eye, g.H) - np.kron(g.H.T, eye))
    for l in g.lindblad_ops:
        ldl = dagger(l) @ l
        mat = mat + np.kron(l.conj(), l) - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    return Superoperator(d=d, matrix=mat)


def _check_time(*times: float):
    for t in times:
        if t < 0:
            raise NegativeTimeError(f"time must be non-negative, got {t}")


def propagator(g: CanonicalGenerator, t: float) -> Superoperator:
    """exp(t L) as a superoperator."""
    _check_time(t)
    return Superoperator(d=g.d, matrix=np.array(expm(t * liouvillian(g).matrix)))


def propagator_channel(g: CanonicalGenerator, t: float) -> KrausChannel:
    return superoperator_channel(propagator(g, t).matrix)


def propagate(g: CanonicalGenerator, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """rho(t) = exp(t L) rho0."""
    _check_time(t)
    if rho0.dim != g.d:
        raise DimensionMismatchError(f"state dimension {rho0.dim} != generator dimension {g.d}")
    if t == 0:
        return rho0
    out = propagator(g, t).act(rho0.matrix)
    return DensityMatrix(0.5 * (out + dagger(out)), tol=OUTPUT_STATE_TOL)


def semigroup_check(g: CanonicalGenerator, t: float, s: float) -> float:
    """||exp((t+s)L) - exp(tL) exp(sL)||_F."""
    _check_time(t, s)
    lv = liouvillian(g).matrix
    return frobenius(np.array(expm((t + s) * lv)) - np.array(expm(t * lv)) @ np.array(expm(s * lv)))


def integrate_rk4(g: CanonicalGenerator, rho0: np.ndarray, t: float, dt: float = 1e-4) -> np.ndarray:
    """Fixed-step fourth-order Runge-Kutta on the canonical right-hand side."""
    _check_time(t)
    steps = max(1, int(np.ceil(t / dt)))
    h = t / steps
    rho = np.array(rho0, dtype=np.complex128)
    for _ in range(steps):
        k1 = canonical_rhs(g, rho)
        k2 = canonical_rhs(g, rho + 0.5 * h * k1)
        k3 = canonical_rhs(g, rho + 0.5 * h * k2)
        k4 = canonical_rhs(g, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho
