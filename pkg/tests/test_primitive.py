"""
Tests for the Yes-No primitive: outcome statistics, averaging schedules and small-time limits.
"""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.control.primitive import (
    AveragingSchedule,
    ScheduleSegment,
    YesNoPrimitive,
    compile_schedule,
    coupling_unitary,
    effective_pair,
    feedback_expansion,
    feedback_step,
    interleaved_unitary,
    joint_evolve,
    pointer_expansion,
    readout,
    small_time_generator,
)
from src.core.channels import DensityMatrix
from src.core.errors import CouplingOutOfRangeError, NotPSDError, NotUnitTraceError
from src.core.lindblad import canonical_rhs
from src.core.matcore import loglog_slope
from tests.helpers import haar_unitary, random_density, random_unit_trace_psd

logger = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
GAMMAS = [1e-1, 5e-2, 2.5e-2, 1.25e-2]


def test_primitive_validation():
    with pytest.raises(CouplingOutOfRangeError):
        YesNoPrimitive(d=2, gamma_t=-0.1)
    with pytest.raises(CouplingOutOfRangeError):
        YesNoPrimitive(d=2, gamma_t=float("inf"))
    with pytest.raises(CouplingOutOfRangeError):
        effective_pair(YesNoPrimitive(d=2, gamma_t=2.0), np.diag([1.0, 0.0]))

    # trace-normalized targets may carry gamma_t beyond pi/2
    pair = effective_pair(YesNoPrimitive(d=2, gamma_t=2.0), np.diag([0.5, 0.5]))
    assert_allclose(pair.B0, np.cos(1.0) * np.eye(2), atol=1e-14)


def test_readout_closed_forms():
    ground = DensityMatrix.basis(2, 0)
    excited = DensityMatrix.basis(2, 1)
    cases = [
        (np.pi / 6, ground, 0.75),
        (np.pi / 2, ground, 0.0),
        (np.pi / 2, excited, 1.0),
        (0.0, ground, 1.0),
    ]
    for gamma_t, rho, p0 in cases:
        outcomes = readout(joint_evolve(YesNoPrimitive(d=2, gamma_t=gamma_t), None, rho))
        assert outcomes[0].probability == pytest.approx(p0, abs=1e-10)
        assert outcomes[1].probability == pytest.approx(1 - p0, abs=1e-10)
    logger.info("✓ closed-form readout probabilities")


def test_readout_matches_effective_pair():
    rng = np.random.default_rng(31)
    for _ in range(20):
        d = int(rng.integers(2, 5))
        gamma_t = float(rng.uniform(0, np.pi / 2))
        p = YesNoPrimitive(d=d, gamma_t=gamma_t)
        rho = random_density(rng, d)
        outcomes = readout(joint_evolve(p, None, rho))
        pair = effective_pair(p, p.base_projector)
        assert_allclose(pair.B0 @ pair.B0 + pair.B1 @ pair.B1, np.eye(d), atol=1e-12)
        for outcome, b in zip(outcomes, (pair.B0, pair.B1)):
            expected = b @ rho.matrix @ b
            assert outcome.probability == pytest.approx(np.trace(expected).real, abs=1e-10)
            if outcome.post_state is not None:
                assert_allclose(outcome.post_state.matrix * outcome.probability, expected, atol=1e-10)


def test_compile_schedule_reconstruction():
    rng = np.random.default_rng(32)
    for _ in range(30):
        d = int(rng.integers(1, 5))
        target = random_unit_trace_psd(rng, d)
        schedule = compile_schedule(target)
        assert_allclose(schedule.realized_operator(), target, atol=1e-10)

    half = compile_schedule(np.eye(2) / 2)
    assert len(half.segments) == 2
    assert_allclose(half.segments[0].unitary, np.eye(2), atol=1e-15)
    assert_allclose(half.segments[1].unitary, SIGMA_X, atol=1e-15)

    pure = compile_schedule(np.diag([1.0, 0.0, 0.0]))
    assert len(pure.segments) == 1
    assert_allclose(pure.segments[0].unitary, np.eye(3), atol=1e-15)


def test_compile_schedule_rejects_invalid_targets():
    with pytest.raises(NotUnitTraceError):
        compile_schedule(np.eye(2))
    with pytest.raises(NotPSDError):
        compile_schedule(np.diag([1.5, -0.5]))


def test_commuting_schedule_is_exact():
    p = YesNoPrimitive(d=2, gamma_t=1.0)
    schedule = compile_schedule(np.eye(2) / 2)
    u = interleaved_unitary(p, schedule, repetitions=4)
    assert np.linalg.norm(u - coupling_unitary(1.0, np.eye(2) / 2)) < 0.01


def test_interleaving_error_is_first_order():
    schedule = AveragingSchedule(segments=(
        ScheduleSegment(unitary=np.eye(2), duration=0.5),
        ScheduleSegment(unitary=HADAMARD, duration=0.5),
    ))
    xbar = schedule.realized_operator()
    assert_allclose(xbar, 0.5 * np.diag([1.0, 0.0]) + 0.25 * np.ones((2, 2)), atol=1e-15)

    p = YesNoPrimitive(d=2, gamma_t=1.0)
    exact = coupling_unitary(1.0, xbar)
    reps = [8, 16, 32, 64]
    errors = [np.linalg.norm(interleaved_unitary(p, schedule, n) - exact) for n in reps]
    assert loglog_slope(reps, errors) == pytest.approx(-1.0, abs=0.2)

    rho = DensityMatrix.basis(2, 1)
    coarse = joint_evolve(p, schedule, rho, repetitions=8)
    fine = joint_evolve(p, schedule, rho, repetitions=256)
    ideal = exact @ np.kron(rho.matrix, np.diag([1.0, 0.0])) @ exact.conj().T
    assert coarse.trace_distance(DensityMatrix(ideal)) > fine.trace_distance(DensityMatrix(ideal))


def test_pointer_expansion_is_third_order():
    rng = np.random.default_rng(33)
    rho = random_density(rng, 2)
    residuals = []
    for gamma_t in GAMMAS:
        p = YesNoPrimitive(d=2, gamma_t=gamma_t)
        joint = joint_evolve(p, None, rho).matrix
        residuals.append(np.linalg.norm(joint - pointer_expansion(p, p.base_projector, rho)))
    assert loglog_slope(GAMMAS, residuals) == pytest.approx(3.0, abs=0.3)


def test_feedback_expansion_is_at_least_third_order():
    rng = np.random.default_rng(34)
    u = haar_unitary(rng, 3)
    xbar = random_unit_trace_psd(rng, 3)
    rho = random_density(rng, 3)
    residuals = []
    for gamma_t in GAMMAS:
        p = YesNoPrimitive(d=3, gamma_t=gamma_t)
        residuals.append(np.linalg.norm(feedback_step(p, xbar, u, rho) - feedback_expansion(p, xbar, u, rho)))
    assert loglog_slope(GAMMAS, residuals) >= 2.7


def test_small_time_generator():
    p = YesNoPrimitive(d=2, gamma_t=0.01)
    xbar = np.diag([1.0, 0.0])
    g = small_time_generator(p, xbar, SIGMA_X)
    assert len(g.lindblad_ops) == 1
    assert_allclose(g.lindblad_ops[0], 0.01 * np.array([[0, 0], [1, 0]]), atol=1e-15)
    assert_allclose(g.H, np.zeros((2, 2)), atol=1e-15)

    rho = random_density(np.random.default_rng(35), 2)
    step = feedback_step(p, xbar, SIGMA_X, rho)
    assert np.linalg.norm(step - rho.matrix - canonical_rhs(g, rho.matrix)) < 1e-7
