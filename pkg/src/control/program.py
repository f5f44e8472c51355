"""
Instruction set of compiled control programs.

A program is an ordered tuple of instructions over a fixed system dimension:
    Unitary(matrix)                    coherent feedback or drive
    YesNoMeasure(gamma_t, schedule)    the Yes-No primitive with averaging
    Branch(on0, on1)                   classical feedback on the last outcome
    Repeat(count, body)                body executed count times
Every YesNoMeasure is followed immediately by exactly one Branch; a result is
discarded with a Branch of two empty programs.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Tuple, Union

import numpy as np

from src.control.primitive import QUARTER_TURN, RANGE_TOL, AveragingSchedule, YesNoPrimitive
from src.core.errors import DimensionMismatchError, InputError, ProgramStructureError
from src.core.matcore import as_complex_matrix, heig, is_unitary

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, square=True)
        if not is_unitary(m, tol=UNITARY_TOL):
            raise ProgramStructureError("Unitary instruction holds a non-unitary matrix")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class YesNoMeasure:
    gamma_t: float
    schedule: AveragingSchedule

    def __post_init__(self):
        YesNoPrimitive(d=self.schedule.d, gamma_t=float(self.gamma_t))
        object.__setattr__(self, "gamma_t", float(self.gamma_t))
        angle = self.gamma_t * float(heig(self.xbar()).eigenvalues[-1])
        if angle > QUARTER_TURN + RANGE_TOL:
            raise ProgramStructureError(f"measurement angle gamma_t * lambda_max(Xbar) = {angle:.6g} exceeds pi/2")

    def primitive(self) -> YesNoPrimitive:
        return YesNoPrimitive(d=self.schedule.d, gamma_t=self.gamma_t)

    def xbar(self) -> np.ndarray:
        return self.schedule.realized_operator()


@dataclass(frozen=True, eq=False)
class Branch:
    on0: "ControlProgram"
    on1: "ControlProgram"


@dataclass(frozen=True, eq=False)
class Repeat:
    count: int
    body: "ControlProgram"

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 0:
            raise ProgramStructureError(f"repeat count must be a non-negative integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))


Instruction = Union[Unitary, YesNoMeasure, Branch, Repeat]


@dataclass(frozen=True, eq=False)
class ControlProgram:
    dim: int
    instructions: Tuple[Instruction, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise InputError(f"program dimension must be positive, got {self.dim}")
        instructions = tuple(self.instructions)
        object.__setattr__(self, "instructions", instructions)
        self.validate()

    @classmethod
    def empty(cls, dim: int) -> "ControlProgram":
        return cls(dim=dim)

    def validate(self):
        """Check dimensions and the measure/branch pairing rule."""
        previous = None
        for i, ins in enumerate(self.instructions):
            if isinstance(ins, Unitary):
                if ins.matrix.shape[0] != self.dim:
                    raise DimensionMismatchError(f"instruction {i}: unitary dimension {ins.matrix.shape[0]} != {self.dim}")
            elif isinstance(ins, YesNoMeasure):
                if ins.schedule.d != self.dim:
                    raise DimensionMismatchError(f"instruction {i}: measurement dimension {ins.schedule.d} != {self.dim}")
                nxt = self.instructions[i + 1] if i + 1 < len(self.instructions) else None
                if not isinstance(nxt, Branch):
                    raise ProgramStructureError(f"instruction {i}: measurement is not followed by a Branch")
            elif isinstance(ins, Branch):
                if not isinstance(previous, YesNoMeasure):
                    raise ProgramStructureError(f"instruction {i}: Branch without a preceding measurement")
                if ins.on0.dim != self.dim or ins.on1.dim != self.dim:
                    raise DimensionMismatchError(f"instruction {i}: branch dimension mismatch")
            elif isinstance(ins, Repeat):
                if ins.body.dim != self.dim:
                    raise DimensionMismatchError(f"instruction {i}: repeat body dimension mismatch")
            else:
                raise ProgramStructureError(f"instruction {i}: unknown instruction {type(ins).__name__}")
            previous = ins

    def __len__(self) -> int:
        return len(self.instructions)

    def __eq__(self, other) -> bool:
        return isinstance(other, ControlProgram) and programs_equal(self, other)

    __hash__ = None

    def measurement_count(self) -> int:
        """Outcome bits along the longest execution path (Repeat expanded)."""
        total = 0
        for ins in self.instructions:
            if isinstance(ins, YesNoMeasure):
                total += 1
            elif isinstance(ins, Branch):
                total += max(ins.on0.measurement_count(), ins.on1.measurement_count())
            elif isinstance(ins, Repeat):
                total += ins.count * ins.body.measurement_count()
        return total

    def step_count(self) -> int:
        """Unitary and measurement instructions along the longest execution path."""
        total = 0
        for ins in self.instructions:
            if isinstance(ins, (Unitary, YesNoMeasure)):
                total += 1
            elif isinstance(ins, Branch):
                total += max(ins.on0.step_count(), ins.on1.step_count())
            elif isinstance(ins, Repeat):
                total += ins.count * ins.body.step_count()
        return total

    def leaf_count(self) -> int:
        """Number of distinct measurement records (branches) the program produces."""
        leaves = 1
        for ins in self.instructions:
            if isinstance(ins, Branch):
                leaves *= ins.on0.leaf_count() + ins.on1.leaf_count()
            elif isinstance(ins, Repeat):
                leaves *= ins.body.leaf_count() ** ins.count
        return leaves

    def walk(self) -> Iterator[Instruction]:
        """Every instruction, nested ones included, in program order."""
        for ins in self.instructions:
            yield ins
            if isinstance(ins, Branch):
                yield from ins.on0.walk()
                yield from ins.on1.walk()
            elif isinstance(ins, Repeat):
                yield from ins.body.walk()


def measure_and_branch(
    gamma_t: float, schedule: AveragingSchedule, on0: ControlProgram, on1: ControlProgram
) -> Tuple[YesNoMeasure, Branch]:
    return YesNoMeasure(gamma_t=gamma_t, schedule=schedule), Branch(on0=on0, on1=on1)


def _schedules_equal(a: AveragingSchedule, b: AveragingSchedule) -> bool:
    if len(a.segments) != len(b.segments):
        return False
    return all(
        sa.duration == sb.duration and np.array_equal(sa.unitary, sb.unitary)
        for sa, sb in zip(a.segments, b.segments)
    )


def _instructions_equal(a: Instruction, b: Instruction) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Unitary):
        return np.array_equal(a.matrix, b.matrix)
    if isinstance(a, YesNoMeasure):
        return a.gamma_t == b.gamma_t and _schedules_equal(a.schedule, b.schedule)
    if isinstance(a, Branch):
        return programs_equal(a.on0, b.on0) and programs_equal(a.on1, b.on1)
    return a.count == b.count and programs_equal(a.body, b.body)


def programs_equal(a: ControlProgram, b: ControlProgram) -> bool:
    """Exact structural equality (matrices compared bit for bit)."""
    if a.dim != b.dim or len(a.instructions) != len(b.instructions):
        return False
    return all(_instructions_equal(x, y) for x, y in zip(a.instructions, b.instructions))


