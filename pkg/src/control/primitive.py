"""
The Yes-No measurement primitive.

A system of dimension d couples to a two-level ancilla through
H = gamma X (x) sigma_x with X = |0><0| and the ancilla prepared in |0><0|.
Only the product gamma*t enters the finite-time evolution, so the primitive
stores gamma_t. Average-Hamiltonian schedules replace X by
Xbar = sum_i (Delta_i / Delta_t) V_i^dag X V_i.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.core.channels import DensityMatrix, MeasurementOutcome, OUTPUT_STATE_TOL, PROBABILITY_FLOOR
from src.core.errors import (
    CouplingOutOfRangeError,
    DimensionMismatchError,
    InputError,
    NotPSDError,
    NotUnitTraceError,
)
from src.core.lindblad import CanonicalGenerator, absorb_traces
from src.core.matcore import (
    ancilla_block,
    as_complex_matrix,
    as_hermitian,
    dagger,
    expm,
    frobenius,
    heig,
    is_unitary,
    mcos,
    msin,
    projector,
)

logger = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
ANCILLA_READY = np.array([[1, 0], [0, 0]], dtype=np.complex128)
QUARTER_TURN = np.pi / 2
RANGE_TOL = 1e-12
SCHEDULE_TOL = 1e-10
SEGMENT_CUTOFF = 1e-12
DEFAULT_REPETITIONS = 64


@dataclass(frozen=True)
class YesNoPrimitive:
    """System dimension and coupling product gamma*t; X, Y and rho_M are fixed."""
    d: int
    gamma_t: float

    def __post_init__(self):
        if self.d < 1:
            raise InputError(f"system dimension must be positive, got {self.d}")
        if not np.isfinite(self.gamma_t) or self.gamma_t < 0:
            raise CouplingOutOfRangeError(f"gamma_t must be finite and >= 0, got {self.gamma_t}")

    @property
    def base_projector(self) -> np.ndarray:
        return projector(self.d, 0)


@dataclass(frozen=True, eq=False)
class ScheduleSegment:
    unitary: np.ndarray
    duration: float


@dataclass(frozen=True, eq=False)
class AveragingSchedule:
    """Interleaving of fast unitaries V_i with waits Delta_i."""
    segments: Tuple[ScheduleSegment, ...]

    def __post_init__(self):
        if not self.segments:
            raise InputError("schedule needs at least one segment")
        segments = tuple(
            ScheduleSegment(unitary=as_complex_matrix(seg.unitary, square=True), duration=float(seg.duration))
            for seg in self.segments
        )
        d = segments[0].unitary.shape[0]
        for seg in segments:
            if seg.unitary.shape[0] != d:
                raise DimensionMismatchError("schedule unitaries have inconsistent dimensions")
            if not is_unitary(seg.unitary):
                raise InputError("schedule segment operator is not unitary")
            if seg.duration < 0 or not np.isfinite(seg.duration):
                raise InputError(f"segment duration must be >= 0, got {seg.duration}")
        object.__setattr__(self, "segments", segments)
        if self.total_duration <= 0:
            raise InputError("schedule total duration must be positive")
        realized = self.realized_operator()
        if abs(np.trace(realized).real - 1.0) > SCHEDULE_TOL:
            raise NotUnitTraceError("realized operator does not have unit trace")

    @property
    def d(self) -> int:
        return self.segments[0].unitary.shape[0]

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))

    def realized_operator(self) -> np.ndarray:
        """Xbar = sum_i (Delta_i / Delta_t) V_i^dag X V_i."""
        x = projector(self.d, 0)
        total = self.total_duration
        out = sum((seg.duration / total) * dagger(seg.unitary) @ x @ seg.unitary for seg in self.segments)
        return 0.5 * (out + dagger(out))


@dataclass(frozen=True, eq=False)
class EffectivePair:
    """B0 = cos(gamma_t Xbar), B1 = sin(gamma_t Xbar)."""
    B0: np.ndarray
    B1: np.ndarray


def _check_target(xbar: np.ndarray) -> np.ndarray:
    x = as_hermitian(xbar, tol=1e-10)
    tr = float(np.real(np.trace(x)))
    if abs(tr - 1.0) > SCHEDULE_TOL:
        raise NotUnitTraceError(f"target has trace {tr:.12g}, expected 1")
    min_eig = float(heig(x).eigenvalues[0])
    if min_eig < -SCHEDULE_TOL:
        raise NotPSDError(f"target has negative eigenvalue {min_eig:.3e}")
    return x


def _reflection_to(e: np.ndarray) -> np.ndarray:
    """Hermitian unitary W with W|0> = e (after fixing the phase of e[0] to be real)."""
    d = e.shape[0]
    if abs(e[0]) > 0:
        e = e * (abs(e[0]) / e[0])
    e0 = np.zeros(d, dtype=np.complex128)
    e0[0] = 1.0
    u = e0 - e
    norm2 = float(np.real(np.vdot(u, u)))
    if norm2 < 1e-24:
        return np.eye(d, dtype=np.complex128)
    return np.eye(d, dtype=np.complex128) - 2.0 * np.outer(u, u.conj()) / norm2


def compile_schedule(target: np.ndarray, delta_t: float = 1.0) -> AveragingSchedule:
    """
    Average-Hamiltonian schedule realizing a PSD unit-trace target.

    Segment i waits lambda_i * delta_t with V_i^dag X V_i = |e_i><e_i|.
    Zero-eigenvalue segments are omitted.
    """
    if delta_t <= 0:
        raise InputError(f"schedule duration must be positive, got {delta_t}")
    x = _check_target(target)
    es = heig(x)
    segments = []
    for k in range(len(es.eigenvalues)):
        lam = float(es.eigenvalues[k])
        if lam <= SEGMENT_CUTOFF:
            continue
        v = _reflection_to(es.eigenvectors[:, k])
        segments.append(ScheduleSegment(unitary=v, duration=lam * delta_t))
    return AveragingSchedule(segments=tuple(segments))


def effective_pair(p: YesNoPrimitive, xbar: np.ndarray) -> EffectivePair:
    """B0 = cos(gamma_t Xbar), B1 = sin(gamma_t Xbar) on the principal branch."""
    x = _check_target(xbar)
    if x.shape[0] != p.d:
        raise DimensionMismatchError(f"Xbar dimension {x.shape[0]} != primitive dimension {p.d}")
    angle = p.gamma_t * float(heig(x).eigenvalues[-1])
    if angle > QUARTER_TURN + RANGE_TOL:
        raise CouplingOutOfRangeError(
            f"gamma_t * lambda_max(Xbar) = {angle:.6g} exceeds pi/2; outcome operators leave the principal branch"
        )
    b0, b1 = outcome_operators(p.gamma_t, x)
    return EffectivePair(B0=b0, B1=b1)


def outcome_operators(gamma_t: float, xbar: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """cos(gamma_t Xbar), sin(gamma_t Xbar) without the principal-branch check."""
    theta = gamma_t * as_hermitian(xbar, tol=1e-10)
    return mcos(theta), msin(theta)


def coupling_unitary(gamma_t: float, x: np.ndarray) -> np.ndarray:
    """exp(-i gamma_t X (x) sigma_x) = cos(gamma_t X) (x) I - i sin(gamma_t X) (x) sigma_x."""
    c, s = outcome_operators(gamma_t, x)
    return np.kron(c, np.eye(2)) - 1j * np.kron(s, SIGMA_X)


def interleaved_unitary(p: YesNoPrimitive, schedule: AveragingSchedule, repetitions: int) -> np.ndarray:
    """
    Explicit system (x) ancilla product of the averaging sequence.

    Each repetition applies, for every segment in index order, V_i, the
    coupling for a fraction Delta_i / Delta_t of gamma_t / N, then V_i^dag.
    """
    if repetitions < 1:
        raise InputError("repetitions must be >= 1")
    if schedule.d != p.d:
        raise DimensionMismatchError("schedule and primitive dimensions differ")
    x = p.base_projector
    eye2 = np.eye(2)
    block = np.eye(2 * p.d, dtype=np.complex128)
    total = schedule.total_duration
    for seg in schedule.segments:
        angle = p.gamma_t * (seg.duration / total) / repetitions
        v = np.kron(seg.unitary, eye2)
        block = dagger(v) @ coupling_unitary(angle, x) @ v @ block
    return np.linalg.matrix_power(block, repetitions)


def joint_evolve(
    p: YesNoPrimitive,
    schedule: Optional[AveragingSchedule],
    rho_s: DensityMatrix,
    repetitions: int = DEFAULT_REPETITIONS,
) -> DensityMatrix:
    """
    Joint system (x) ancilla state after the coupling.

    Without a schedule the base projector couples directly; with one the
    interleaved sequence is simulated, which tends to the Xbar coupling as
    the number of repetitions grows.
    """
    if rho_s.dim != p.d:
        raise DimensionMismatchError(f"state dimension {rho_s.dim} != primitive dimension {p.d}")
    if schedule is None:
        u = coupling_unitary(p.gamma_t, p.base_projector)
    else:
        u = interleaved_unitary(p, schedule, repetitions)
    joint = u @ np.kron(rho_s.matrix, ANCILLA_READY) @ dagger(u)
    return DensityMatrix(0.5 * (joint + dagger(joint)), tol=OUTPUT_STATE_TOL)


def readout(joint: DensityMatrix, pfloor: float = PROBABILITY_FLOOR) -> List[MeasurementOutcome]:
    """Projective 0/1 measurement of the ancilla; post states are system-only."""
    if joint.dim % 2:
        raise DimensionMismatchError("joint state must be system (x) qubit")
    d = joint.dim // 2
    outcomes = []
    for k in (0, 1):
        block = ancilla_block(joint.matrix, d, k)
        block = 0.5 * (block + dagger(block))
        prob = min(max(float(np.real(np.trace(block))), 0.0), 1.0)
        post = DensityMatrix(block / prob, tol=OUTPUT_STATE_TOL) if prob > pfloor else None
        outcomes.append(MeasurementOutcome(label=k, probability=prob, post_state=post, unnormalized=block))
    return outcomes


def pointer_expansion(p: YesNoPrimitive, xbar: np.ndarray, rho_s: DensityMatrix) -> np.ndarray:
    """Second-order expansion of the joint state in gamma_t."""
    x = as_hermitian(xbar, tol=1e-10)
    g = p.gamma_t
    rho = rho_s.matrix
    y = SIGMA_X
    rm = ANCILLA_READY
    first = np.kron(x @ rho, y @ rm) - np.kron(rho @ x, rm @ y)
    second = (
        np.kron(x @ x @ rho, y @ y @ rm)
        - 2 * np.kron(x @ rho @ x, y @ rm @ y)
        + np.kron(rho @ x @ x, rm @ y @ y)
    )
    return np.kron(rho, rm) - 1j * g * first - 0.5 * g * g * second


def feedback_step(p: YesNoPrimitive, xbar: np.ndarray, u: Optional[np.ndarray], rho_s: DensityMatrix) -> np.ndarray:
    """Exact unconditioned state after measuring and applying U on outcome 1."""
    pair = effective_pair(p, xbar)
    u = np.eye(p.d) if u is None else u
    rho = rho_s.matrix
    a1 = u @ pair.B1
    return pair.B0 @ rho @ pair.B0 + a1 @ rho @ dagger(a1)


def feedback_expansion(p: YesNoPrimitive, xbar: np.ndarray, u: Optional[np.ndarray], rho_s: DensityMatrix) -> np.ndarray:
    """rho - (gamma_t^2 / 2)(X^2 rho - 2 U X rho X U^dag + rho X^2): one feedback step to second order."""
    x = as_hermitian(xbar, tol=1e-10)
    u = np.eye(p.d) if u is None else u
    rho = rho_s.matrix
    g2 = p.gamma_t ** 2
    return rho - 0.5 * g2 * (x @ x @ rho - 2 * u @ x @ rho @ x @ dagger(u) + rho @ x @ x)


def small_time_generator(
    p: YesNoPrimitive,
    xbar: np.ndarray,
    u: Optional[np.ndarray] = None,
    step_duration: float = 1.0,
) -> CanonicalGenerator:
    """
    Lindblad generator emerging from one short measure-feedback step.

    b = gamma_t^2 / (2 step_duration) and L = sqrt(2b) U Xbar; the drift term
    vanishes because tr(sigma_x |0><0|) = 0. A trace component of U Xbar is
    moved into an equivalent Hamiltonian correction.
    """
    if step_duration <= 0:
        raise InputError(f"step duration must be positive, got {step_duration}")
    x = _check_target(xbar)
    u = np.eye(p.d, dtype=np.complex128) if u is None else as_complex_matrix(u, square=True)
    if not is_unitary(u):
        raise InputError("feedback operator must be unitary")
    b = p.gamma_t ** 2 / (2.0 * step_duration)
    l = np.sqrt(2.0 * b) * u @ x
    generator, _ = absorb_traces(np.zeros((p.d, p.d), dtype=np.complex128), [l], warn=False)
    if frobenius(generator.H) > 0:
        logger.debug(f"Small-time generator picked up a Hamiltonian correction of norm {frobenius(generator.H):.3e}")
    return generator
