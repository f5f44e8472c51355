"""
Execution of control programs on dense states.

run_branches evolves every measurement record without normalizing, so the
branch traces are the record probabilities and their sum is the program's
unconditioned channel applied to the input. run_trajectories samples records
with the exact conditional probabilities using one counter-based RNG stream
per trajectory index, so results do not depend on the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.control.primitive import outcome_operators
from src.control.program import Branch, ControlProgram, Repeat, Unitary, YesNoMeasure
from src.core.channels import (
    DensityMatrix,
    KrausChannel,
    OUTPUT_STATE_TOL,
    PROBABILITY_FLOOR,
    superoperator_channel,
)
from src.core.errors import (
    BranchExplosionError,
    DimensionMismatchError,
    InputError,
    ProgramStructureError,
)
from src.core.matcore import dagger

logger = logging.getLogger(__name__)

DEFAULT_BRANCH_CAP = 2 ** 20
EXTRACT_COMPLETENESS_TOL = 1e-9

# (instructions, next index, remaining passes)
_Frame = Tuple[tuple, int, int]
_Split = Callable[[np.ndarray, np.ndarray, np.ndarray], List[Tuple[int, np.ndarray]]]


@dataclass(frozen=True, eq=False)
class BranchState:
    """Unnormalized state of one measurement record; its trace is the record probability."""
    state: np.ndarray
    record: str

    @property
    def probability(self) -> float:
        return float(np.real(np.trace(self.state)))


@dataclass(frozen=True, eq=False)
class TrajectoryConfig:
    seed: int
    count: int
    initial_state: DensityMatrix

    def __post_init__(self):
        if self.count < 1:
            raise InputError(f"trajectory count must be >= 1, got {self.count}")


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    estimate: DensityMatrix
    standard_error: Optional[float]
    count: int
    records: Tuple[str, ...] = field(default=(), repr=False)


class _OperatorCache:
    """cos/sin outcome operators per measurement instruction (identity-keyed)."""

    def __init__(self):
        self._pairs: Dict[int, Tuple[YesNoMeasure, np.ndarray, np.ndarray]] = {}

    def get(self, ins: YesNoMeasure) -> Tuple[np.ndarray, np.ndarray]:
        entry = self._pairs.get(id(ins))
        if entry is None or entry[0] is not ins:
            b0, b1 = outcome_operators(ins.gamma_t, ins.xbar())
            entry = (ins, b0, b1)
            self._pairs[id(ins)] = entry
        return entry[1], entry[2]

    def warm(self, program: ControlProgram) -> "_OperatorCache":
        """Fill every measurement of the program; afterwards get() only reads."""
        for ins in program.walk():
            if isinstance(ins, YesNoMeasure):
                self.get(ins)
        return self


def _execute(
    program: ControlProgram,
    start: np.ndarray,
    act: Callable[[np.ndarray, np.ndarray], np.ndarray],
    split: _Split,
    cache: _OperatorCache,
) -> Iterator[Tuple[np.ndarray, str]]:
    """
    Depth-first walk of the program yielding (leaf value, record).

    Repeat bodies are expanded lazily through the frame stack, so memory grows
    with nesting depth and live branches, not with repeat counts.
    """
    stack: List[Tuple[np.ndarray, str, Tuple[_Frame, ...]]] = [(start, "", ((program.instructions, 0, 1),))]
    while stack:
        value, record, frames = stack.pop()
        while True:
            if not frames:
                yield value, record
                break
            instrs, idx, passes = frames[-1]
            if idx >= len(instrs):
                frames = frames[:-1] + ((instrs, 0, passes - 1),) if passes > 1 else frames[:-1]
                continue
            ins = instrs[idx]
            if isinstance(ins, Unitary):
                value = act(ins.matrix, value)
                frames = frames[:-1] + ((instrs, idx + 1, passes),)
            elif isinstance(ins, Repeat):
                frames = frames[:-1] + ((instrs, idx + 1, passes),)
                if ins.count > 0 and ins.body.instructions:
                    frames = frames + ((ins.body.instructions, 0, ins.count),)
            elif isinstance(ins, YesNoMeasure):
                branch = instrs[idx + 1]
                after = frames[:-1] + ((instrs, idx + 2, passes),)
                b0, b1 = cache.get(ins)
                children = split(value, b0, b1)
                # pushed in reverse so outcome 0 is explored first
                for bit, child in reversed(children):
                    sub = branch.on0 if bit == 0 else branch.on1
                    stack.append((child, record + str(bit), after + ((sub.instructions, 0, 1),)))
                break
            elif isinstance(ins, Branch):
                raise ProgramStructureError("Branch reached without a preceding measurement")
            else:
                raise ProgramStructureError(f"unknown instruction {type(ins).__name__}")


def _conjugate(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return a @ rho @ dagger(a)


def _left_multiply(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    return a @ k


def _check_cap(program: ControlProgram, cap: int) -> int:
    leaves = program.leaf_count()
    if leaves > cap:
        raise BranchExplosionError(
            f"program has {leaves} measurement records, above the branch cap {cap}; use trajectories instead"
        )
    return leaves


def run_branches(program: ControlProgram, rho0: DensityMatrix, cap: int = DEFAULT_BRANCH_CAP) -> List[BranchState]:
    """
    Exhaustive unnormalized branch evolution.

    Args:
        program: control program to execute
        rho0: input state
        cap: maximum number of measurement records

    Returns:
        BranchState list ordered by record (outcome 0 before 1 at every level)
    """
    if rho0.dim != program.dim:
        raise DimensionMismatchError(f"state dimension {rho0.dim} != program dimension {program.dim}")
    leaves = _check_cap(program, cap)
    logger.debug(f"Running {leaves} branches")

    def split(rho, b0, b1):
        return [(0, _conjugate(b0, rho)), (1, _conjugate(b1, rho))]

    cache = _OperatorCache()
    return [BranchState(state=s, record=r) for s, r in _execute(program, np.array(rho0.matrix), _conjugate, split, cache)]


def sum_branches(branches: List[BranchState]) -> DensityMatrix:
    """Unconditioned output state: the sum of the unnormalized branch states."""
    total = sum(b.state for b in branches)
    return DensityMatrix(0.5 * (total + dagger(total)), tol=OUTPUT_STATE_TOL)


def branch_sum(program: ControlProgram, rho0: DensityMatrix, cap: int = DEFAULT_BRANCH_CAP) -> DensityMatrix:
    return sum_branches(run_branches(program, rho0, cap=cap))


def record_probabilities(branches: List[BranchState], pfloor: float = PROBABILITY_FLOOR) -> Dict[str, float]:
    """Record -> probability for the records above pfloor, in record order."""
    return {b.record: b.probability for b in branches if b.probability > pfloor}


def program_superoperator(program: ControlProgram) -> np.ndarray:
    """
    Column-stacking superoperator of the unconditioned program.

    Measurements contribute S(on0) S(B0) + S(on1) S(B1); Repeat uses a matrix power.
    """
    cache = _OperatorCache()
    return _superoperator(program, cache)


def _superoperator(program: ControlProgram, cache: _OperatorCache) -> np.ndarray:
    d = program.dim
    total = np.eye(d * d, dtype=np.complex128)
    instrs = program.instructions
    i = 0
    while i < len(instrs):
        ins = instrs[i]
        if isinstance(ins, Unitary):
            total = np.kron(ins.matrix.conj(), ins.matrix) @ total
        elif isinstance(ins, YesNoMeasure):
            branch = instrs[i + 1]
            b0, b1 = cache.get(ins)
            step = _superoperator(branch.on0, cache) @ np.kron(b0.conj(), b0)
            step = step + _superoperator(branch.on1, cache) @ np.kron(b1.conj(), b1)
            total = step @ total
            i += 1
        elif isinstance(ins, Repeat):
            total = np.linalg.matrix_power(_superoperator(ins.body, cache), ins.count) @ total
        i += 1
    return total


def extract_channel(
    program: ControlProgram,
    cap: int = DEFAULT_BRANCH_CAP,
    compress: bool = False,
) -> KrausChannel:
    """
    Kraus operators of the program, one per measurement record.

    With compress=True a program above the cap is reduced to the minimal
    Kraus form of its superoperator instead of raising BranchExplosionError.
    """
    try:
        _check_cap(program, cap)
    except BranchExplosionError:
        if not compress:
            raise
        logger.info("Branch count above cap; extracting channel from the composed superoperator")
        return superoperator_channel(program_superoperator(program))

    def split(k, b0, b1):
        return [(0, b0 @ k), (1, b1 @ k)]

    cache = _OperatorCache()
    eye = np.eye(program.dim, dtype=np.complex128)
    ops = tuple(k for k, _ in _execute(program, eye, _left_multiply, split, cache))
    return KrausChannel(ops, tol=EXTRACT_COMPLETENESS_TOL)


def _trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _run_one(
    program: ControlProgram, rho0: np.ndarray, seed: int, index: int, cache: _OperatorCache
) -> Tuple[np.ndarray, str]:
    rng = _trajectory_rng(seed, index)

    def split(rho, b0, b1):
        s0 = _conjugate(b0, rho)
        p0 = min(max(float(np.real(np.trace(s0))), 0.0), 1.0)
        if rng.random() < p0:
            return [(0, s0 / p0)]
        s1 = _conjugate(b1, rho)
        p1 = float(np.real(np.trace(s1)))
        if p1 <= 0.0:
            return [(0, s0 / p0)]
        return [(1, s1 / p1)]

    return next(_execute(program, rho0, _conjugate, split, cache))


def _run_chunk(
    program: ControlProgram, rho0: np.ndarray, seed: int, indices: range, cache: _OperatorCache
) -> List[Tuple[np.ndarray, str]]:
    return [_run_one(program, rho0, seed, i, cache) for i in indices]


def run_trajectories(program: ControlProgram, cfg: TrajectoryConfig, workers: int = 1) -> TrajectoryResult:
    """
    Monte Carlo unraveling of the program.

    The estimate is the running (Welford) mean of the final trajectory states
    accumulated in trajectory-index order; the standard error is the Frobenius
    norm of the per-entry standard errors (None for a single trajectory).
    """
    rho0 = cfg.initial_state
    if rho0.dim != program.dim:
        raise DimensionMismatchError(f"state dimension {rho0.dim} != program dimension {program.dim}")
    start = np.array(rho0.matrix)
    workers = max(1, int(workers))
    chunk = max(1, -(-cfg.count // (workers * 4)))
    chunks = [range(i, min(i + chunk, cfg.count)) for i in range(0, cfg.count, chunk)]
    cache = _OperatorCache().warm(program)

    if workers == 1:
        results = (_run_chunk(program, start, cfg.seed, c, cache) for c in chunks)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(lambda c: _run_chunk(program, start, cfg.seed, c, cache), chunks)

    mean = np.zeros_like(start)
    m2 = np.zeros(start.shape, dtype=np.float64)
    records: List[str] = []
    n = 0
    try:
        for batch in results:
            for state, record in batch:
                n += 1
                delta = state - mean
                mean = mean + delta / n
                m2 = m2 + np.real(delta.conj() * (state - mean))
                records.append(record)
    finally:
        if workers > 1:
            pool.shutdown()

    se = None
    if n > 1:
        se = float(np.sqrt(np.sum(m2) / (n - 1) / n))
    logger.info(f"Ran {n} trajectories (seed {cfg.seed}, {workers} workers)")
    estimate = DensityMatrix(0.5 * (mean + dagger(mean)), tol=OUTPUT_STATE_TOL)
    return TrajectoryResult(estimate=estimate, standard_error=se, count=n, records=tuple(records))
