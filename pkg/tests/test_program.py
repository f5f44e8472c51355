"""
Tests for the control-program instruction set.
"""

import numpy as np
import pytest

from src.control.primitive import compile_schedule
from src.control.program import (
    Branch,
    ControlProgram,
    Repeat,
    Unitary,
    YesNoMeasure,
    measure_and_branch,
    programs_equal,
)
from src.core.errors import DimensionMismatchError, ProgramStructureError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def _measure(gamma_t=0.5):
    return YesNoMeasure(gamma_t=gamma_t, schedule=compile_schedule(np.diag([1.0, 0.0])))


def _flip():
    return ControlProgram(dim=2, instructions=(Unitary(SIGMA_X),))


def test_structure_rules():
    with pytest.raises(ProgramStructureError):
        ControlProgram(dim=2, instructions=(_measure(),))
    with pytest.raises(ProgramStructureError):
        ControlProgram(dim=2, instructions=(Branch(ControlProgram.empty(2), ControlProgram.empty(2)),))
    with pytest.raises(ProgramStructureError):
        ControlProgram(dim=2, instructions=(_measure(), Unitary(np.eye(2)), Branch(_flip(), _flip())))
    with pytest.raises(ProgramStructureError):
        Unitary(np.diag([1.0, 2.0]))
    with pytest.raises(ProgramStructureError):
        Repeat(count=-1, body=ControlProgram.empty(2))
    with pytest.raises(DimensionMismatchError):
        ControlProgram(dim=3, instructions=(Unitary(SIGMA_X),))
    with pytest.raises(ProgramStructureError):
        _measure(2.0)
    # a spread-out Xbar allows a larger gamma_t
    YesNoMeasure(gamma_t=2.0, schedule=compile_schedule(np.eye(2) / 2))


def test_counts():
    body = ControlProgram(dim=2, instructions=measure_and_branch(0.5, compile_schedule(np.diag([1.0, 0.0])),
                                                                ControlProgram.empty(2), _flip()))
    assert body.measurement_count() == 1
    assert body.step_count() == 2
    assert body.leaf_count() == 2

    program = ControlProgram(dim=2, instructions=(Unitary(np.eye(2)), Repeat(count=3, body=body)))
    assert program.measurement_count() == 3
    assert program.step_count() == 7
    assert program.leaf_count() == 8
    assert sum(isinstance(i, YesNoMeasure) for i in program.walk()) == 1

    assert ControlProgram.empty(2).leaf_count() == 1
    assert ControlProgram(dim=2, instructions=(Repeat(count=0, body=body),)).leaf_count() == 1


def test_structural_equality():
    a = ControlProgram(dim=2, instructions=(_measure(), Branch(ControlProgram.empty(2), _flip())))
    b = ControlProgram(dim=2, instructions=(_measure(), Branch(ControlProgram.empty(2), _flip())))
    c = ControlProgram(dim=2, instructions=(_measure(0.6), Branch(ControlProgram.empty(2), _flip())))
    assert a == b
    assert programs_equal(a, b)
    assert a != c
    assert a != ControlProgram.empty(2)
