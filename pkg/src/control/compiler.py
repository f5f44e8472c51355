"""
Synthesis passes from target evolutions to control programs.

    synth_two_outcome    two Kraus operators -> measure + feedback
    synth_multi_outcome  K Kraus operators -> cascade of two-outcome stages
    synth_lindblad       canonical generator -> stroboscopic repeated steps
    commutator_step      group-commutator product of two Hamiltonians

Every two-outcome stage uses the polar decomposition A_k = U_k |A_k|:
|A_0| fixes Theta = arccos|A_0| (principal branch, spectrum in [0, pi/2]),
gamma_t = tr Theta and Xbar = Theta / gamma_t, and the U_k become the
feedback unitaries of the branch.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.control.primitive import (
    DEFAULT_REPETITIONS,
    QUARTER_TURN,
    compile_schedule,
    coupling_unitary,
    interleaved_unitary,
)
from src.control.program import (
    Branch,
    ControlProgram,
    Instruction,
    Repeat,
    Unitary,
    YesNoMeasure,
    measure_and_branch,
)
from src.control.simulator import DEFAULT_BRANCH_CAP, extract_channel, program_superoperator
from src.core.channels import (
    KrausChannel,
    channel_distance,
    choi_from_superoperator,
    renormalize,
)
from src.core.errors import (
    CouplingOutOfRangeError,
    DimensionMismatchError,
    InputError,
    RankCollapseWarning,
    ZeroOperatorError,
)
from src.core.lindblad import CanonicalGenerator, absorb_traces, propagator
from src.core.matcore import (
    PINV_RELCUT,
    commutator,
    dagger,
    expm,
    frobenius,
    loglog_slope,
    marccos,
    msqrt,
    pinv_on_support,
    polar,
    support_projector,
)

logger = logging.getLogger(__name__)

MULTI_COMPLETENESS_TOL = 1e-10
DEGENERATE_TOL = 1e-12
ZERO_OPERATOR_TOL = 1e-12
DRIFT_TOL = 1e-10
ERROR_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class SynthesisReport:
    target: str
    program: ControlProgram = field(repr=False)
    distance: float
    branch_count: int
    step_count: int
    measurement_count: int

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "distance": self.distance,
            "branch_count": self.branch_count,
            "step_count": self.step_count,
            "measurement_count": self.measurement_count,
        }


@dataclass(frozen=True)
class ConvergenceResult:
    steps: Tuple[int, ...]
    errors: Tuple[float, ...]
    slope: Optional[float]

    def to_dict(self) -> dict:
        return {"steps": list(self.steps), "errors": list(self.errors), "slope": self.slope}


def _measurement_block(b0: np.ndarray, delta_t: float) -> Optional[YesNoMeasure]:
    """YesNoMeasure whose outcome-0 operator is the positive b0, or None if b0 = I."""
    if frobenius(b0 - np.eye(b0.shape[0])) <= DEGENERATE_TOL:
        return None
    theta = marccos(b0)
    gamma_t = float(np.real(np.trace(theta)))
    xbar = theta / gamma_t
    return YesNoMeasure(gamma_t=gamma_t, schedule=compile_schedule(xbar, delta_t))


def _then(post: Optional[np.ndarray], u: np.ndarray) -> np.ndarray:
    return u if post is None else post @ u


def _single(d: int, u: np.ndarray) -> ControlProgram:
    return ControlProgram(dim=d, instructions=(Unitary(u),))


def _drop_collapsed(ops: List[np.ndarray], post: List[Optional[np.ndarray]], level: int):
    kept_ops, kept_post = [], []
    for k, (a, u) in enumerate(zip(ops, post)):
        if frobenius(a) <= ZERO_OPERATOR_TOL:
            msg = f"cascade level {level}: outcome {k} has numerically zero support and was dropped"
            logger.warning(msg, extra={"stage": "cascade"})
            warnings.warn(msg, RankCollapseWarning, stacklevel=3)
            continue
        kept_ops.append(a)
        kept_post.append(u)
    return kept_ops, kept_post


def _cascade(
    ops: List[np.ndarray],
    post: List[Optional[np.ndarray]],
    d: int,
    delta_t: float,
    relcut: float,
    level: int = 0,
) -> Tuple[Instruction, ...]:
    """
    Instructions realizing {post_k A_k} for a complete Kraus set.

    Outcome 0 is split off against B' = sqrt(sum_{k>=1} |A_k|^2); on outcome 1
    the residual set {|A_k| pinv(B')} is completed on the kernel of B' and
    compiled recursively, with U_k pushed into the leaf feedback.
    """
    ops, post = _drop_collapsed(ops, post, level)
    factors = [polar(a) for a in ops]
    if len(ops) == 1:
        return (Unitary(_then(post[0], factors[0].unitary)),)

    measure = _measurement_block(factors[0].positive, delta_t)
    if measure is None:
        logger.warning(
            f"cascade level {level}: outcome 0 is unitary; emitting a single Unitary",
            extra={"stage": "cascade"},
        )
        return (Unitary(_then(post[0], factors[0].unitary)),)

    on0 = _single(d, _then(post[0], factors[0].unitary))
    if len(ops) == 2:
        on1 = _single(d, _then(post[1], factors[1].unitary))
        return measure, Branch(on0=on0, on1=on1)

    tail = [f.positive for f in factors[1:]]
    b_tail = msqrt(sum(p @ p for p in tail))
    try:
        inverse = pinv_on_support(b_tail, relcut)
    except ZeroOperatorError:
        msg = f"cascade level {level}: remaining outcomes have no support and were dropped"
        logger.warning(msg, extra={"stage": "cascade"})
        warnings.warn(msg, RankCollapseWarning, stacklevel=2)
        return (Unitary(_then(post[0], factors[0].unitary)),)

    residuals = [p @ inverse for p in tail]
    kernel = np.eye(d) - support_projector(b_tail, relcut)
    residuals[0] = residuals[0] + kernel
    inner_post = [_then(u, f.unitary) for u, f in zip(post[1:], factors[1:])]

    closure = np.eye(d) - sum(dagger(r) @ r for r in residuals)
    closure = 0.5 * (closure + dagger(closure))
    drift = frobenius(closure)
    if drift > DRIFT_TOL:
        logger.warning(
            f"cascade level {level}: completeness drift {drift:.3e}; appending a closure operator",
            extra={"stage": "cascade"},
        )
        residuals.append(msqrt(closure))
        inner_post.append(None)

    inner = _cascade(residuals, inner_post, d, delta_t, relcut, level + 1)
    return measure, Branch(on0=on0, on1=ControlProgram(dim=d, instructions=inner))


def _strict(channel: KrausChannel) -> KrausChannel:
    if channel.check_strict():
        return channel
    return renormalize(channel)


def synth_two_outcome(target: KrausChannel, delta_t: float = 1.0) -> ControlProgram:
    """
    Measure-and-feedback program for a two-operator channel.

    A single-operator (unitary) channel is padded with a zero operator and
    compiles to one Unitary instruction, as does any target whose A_1 vanishes.
    """
    ops = list(target.operators)
    if len(ops) == 1:
        ops.append(np.zeros_like(ops[0]))
    if len(ops) != 2:
        raise InputError(f"two-outcome synthesis needs 2 Kraus operators, got {len(ops)}")
    if target.d_in != target.d_out:
        raise DimensionMismatchError("synthesis needs square Kraus operators")
    channel = _strict(KrausChannel(tuple(ops), tol=target.tol))
    d = channel.d_in
    a0, a1 = channel.operators
    f0, f1 = polar(a0), polar(a1)
    measure = _measurement_block(f0.positive, delta_t)
    if measure is None:
        logger.warning("Degenerate two-outcome target (A_0 unitary); emitting a single Unitary",
                       extra={"stage": "two_outcome"})
        return _single(d, f0.unitary)
    logger.info(f"Two-outcome synthesis: gamma_t = {measure.gamma_t:.6g}", extra={"stage": "two_outcome"})
    return ControlProgram(dim=d, instructions=(measure, Branch(on0=_single(d, f0.unitary), on1=_single(d, f1.unitary))))


def synth_multi_outcome(
    targets: Sequence[np.ndarray],
    delta_t: float = 1.0,
    relcut: float = PINV_RELCUT,
) -> ControlProgram:
    """
    Cascade program for a K-outcome Kraus set, outcomes processed in ascending index.

    Outcome k of the target corresponds to record 1...10 (k ones then a zero)
    for k < K-1 and to K-1 ones for the last outcome.
    """
    channel = KrausChannel(tuple(targets), tol=MULTI_COMPLETENESS_TOL)
    if channel.d_in != channel.d_out:
        raise DimensionMismatchError("synthesis needs square Kraus operators")
    if len(channel) == 2:
        return synth_two_outcome(channel, delta_t=delta_t)
    channel = _strict(channel)
    d = channel.d_in
    instructions = _cascade(list(channel.operators), [None] * len(channel), d, delta_t, relcut)
    logger.info(f"Cascade synthesis of {len(channel)} outcomes", extra={"stage": "cascade"})
    return ControlProgram(dim=d, instructions=instructions)


def synth_lindblad(g: CanonicalGenerator, total_time: float, steps: int, delta_t: float = 1.0) -> ControlProgram:
    """
    Stroboscopic program approximating exp(T L) with first-order splitting.

    Each of the n steps applies exp(-i H T/n) and then, for every L_k = U_k P_k,
    a measurement with Xbar_k = P_k / tr P_k and gamma_t_k = tr P_k sqrt(T/n),
    feeding back U_k on outcome 1.
    """
    if total_time <= 0:
        raise InputError(f"total time must be positive, got {total_time}")
    if int(steps) != steps or steps < 1:
        raise InputError(f"steps must be a positive integer, got {steps}")
    steps = int(steps)
    d = g.d
    tau = total_time / steps
    body: List[Instruction] = []
    if frobenius(g.H) > 0:
        body.append(Unitary(expm(-1j * tau * g.H)))
    for k, l in enumerate(g.lindblad_ops):
        if frobenius(l) <= ZERO_OPERATOR_TOL:
            continue
        factors = polar(l)
        trace_p = float(np.real(np.trace(factors.positive)))
        gamma_t = trace_p * np.sqrt(tau)
        if gamma_t > QUARTER_TURN:
            raise CouplingOutOfRangeError(
                f"L_{k}: per-step gamma_t = {gamma_t:.6g} exceeds pi/2 at {steps} steps"
            )
        schedule = compile_schedule(factors.positive / trace_p, delta_t)
        body.extend(measure_and_branch(gamma_t, schedule, ControlProgram.empty(d), _single(d, factors.unitary)))
    logger.info(f"Stroboscopic synthesis: {len(g.lindblad_ops)} Lindblad operators, {steps} steps",
                extra={"stage": "lindblad"})
    return ControlProgram(dim=d, instructions=(Repeat(count=steps, body=ControlProgram(dim=d, instructions=tuple(body))),))


def synth_lindblad_from_operators(
    h: np.ndarray, ops: Sequence[np.ndarray], total_time: float, steps: int, delta_t: float = 1.0
) -> ControlProgram:
    """synth_lindblad for raw operators; trace components become a Hamiltonian correction."""
    g, _ = absorb_traces(h, ops)
    return synth_lindblad(g, total_time, steps, delta_t=delta_t)


def commutator_step(h1: np.ndarray, h2: np.ndarray, dt: float) -> np.ndarray:
    """e^{i H2 dt} e^{i H1 dt} e^{-i H2 dt} e^{-i H1 dt}."""
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    return expm(1j * dt * h2) @ expm(1j * dt * h1) @ expm(-1j * dt * h2) @ expm(-1j * dt * h1)


def commutator_residual(h1: np.ndarray, h2: np.ndarray, dt: float) -> float:
    """||commutator_step - exp([H1, H2] dt^2)||_F, third order in dt."""
    return frobenius(commutator_step(h1, h2, dt) - expm(commutator(h1, h2) * dt * dt))


def verify(program: ControlProgram, target: KrausChannel, cap: int = DEFAULT_BRANCH_CAP,
           description: str = "channel") -> SynthesisReport:
    """Channel distance between the program's branch-sum channel and the target."""
    if program.dim != target.d_in or target.d_in != target.d_out:
        raise DimensionMismatchError(f"program dimension {program.dim} does not match target")
    achieved = extract_channel(program, cap=cap, compress=True)
    return SynthesisReport(
        target=description,
        program=program,
        distance=channel_distance(achieved, target),
        branch_count=program.leaf_count(),
        step_count=program.step_count(),
        measurement_count=program.measurement_count(),
    )


def schedule_realization_error(program: ControlProgram, repetitions: int = DEFAULT_REPETITIONS) -> float:
    """
    Largest gap between a measurement's interleaved coupling sequence and its Xbar coupling.

    Schedules from compile_schedule have commuting segments and realize Xbar
    exactly; hand-written schedules converge as 1/repetitions.
    """
    worst = 0.0
    for ins in program.walk():
        if isinstance(ins, YesNoMeasure):
            realized = interleaved_unitary(ins.primitive(), ins.schedule, repetitions)
            worst = max(worst, frobenius(realized - coupling_unitary(ins.gamma_t, ins.xbar())))
    return worst


def verify_generator(program: ControlProgram, g: CanonicalGenerator, total_time: float,
                     description: str = "generator") -> SynthesisReport:
    """Choi-Frobenius distance between the program and exp(T L), via superoperators."""
    if program.dim != g.d:
        raise DimensionMismatchError(f"program dimension {program.dim} != generator dimension {g.d}")
    achieved = choi_from_superoperator(program_superoperator(program)).matrix
    exact = choi_from_superoperator(propagator(g, total_time).matrix).matrix
    return SynthesisReport(
        target=description,
        program=program,
        distance=frobenius(achieved - exact),
        branch_count=program.leaf_count(),
        step_count=program.step_count(),
        measurement_count=program.measurement_count(),
    )


def stroboscopic_convergence(
    g: CanonicalGenerator, total_time: float, steps: Sequence[int], delta_t: float = 1.0
) -> ConvergenceResult:
    """Channel error against exact propagation for each step count, plus the log-log slope."""
    errors = []
    for n in steps:
        program = synth_lindblad(g, total_time, n, delta_t=delta_t)
        errors.append(verify_generator(program, g, total_time).distance)
        logger.debug(f"n = {n}: error {errors[-1]:.3e}", extra={"stage": "lindblad"})
    slope = None
    if len(steps) >= 2 and min(errors) > ERROR_FLOOR:
        slope = loglog_slope(steps, errors)
    return ConvergenceResult(steps=tuple(int(n) for n in steps), errors=tuple(errors), slope=slope)
