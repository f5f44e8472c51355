"""
JSON file formats for matrices, channels, generators and programs.

MatrixFile     {"rows": r, "cols": c, "data": [[re, im], ...]}  (row-major)
ChannelFile    {"dim": d, "kraus": [MatrixFile, ...]}
GeneratorFile  {"dim": d, "H": MatrixFile, "form": "canonical", "lindblad": [MatrixFile, ...]}
               {"dim": d, "H": MatrixFile, "form": "gks", "A": MatrixFile, "basis": "gellmann"}
ProgramFile    {"dim": d, "instructions": [instruction, ...]} with instruction "type"
               one of "unitary", "measure", "branch", "repeat"

Numbers are written with Python's shortest round-trip float repr, so
parse(emit(x)) reproduces every matrix bit for bit.
"""

import json
import logging
import math
from typing import Any, Dict, List, Union

import numpy as np

from src.control.primitive import AveragingSchedule, ScheduleSegment
from src.control.program import Branch, ControlProgram, Instruction, Repeat, Unitary, YesNoMeasure
from src.core.channels import COMPLETENESS_TOL, DensityMatrix, KrausChannel
from src.core.errors import NotTracelessError, OQCCError, SerializationError
from src.core.lindblad import CanonicalGenerator, GKSGenerator, absorb_traces, canonicalize, gell_mann_basis

logger = logging.getLogger(__name__)

Generator = Union[CanonicalGenerator, GKSGenerator]


def _require(data: Dict[str, Any], key: str, kind: str):
    if not isinstance(data, dict):
        raise SerializationError(f"{kind}: expected a JSON object")
    if key not in data:
        raise SerializationError(f"{kind}: missing field '{key}'")
    return data[key]


def _require_int(data: Dict[str, Any], key: str, kind: str) -> int:
    value = _require(data, key, kind)
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise SerializationError(f"{kind}: '{key}' must be a non-negative integer")
    return value


def _require_float(data: Dict[str, Any], key: str, kind: str) -> float:
    value = _require(data, key, kind)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SerializationError(f"{kind}: '{key}' must be a finite number")
    return float(value)


# Matrices

def emit_matrix(m: np.ndarray) -> Dict[str, Any]:
    m = np.asarray(m, dtype=np.complex128)
    rows, cols = m.shape
    return {
        "rows": rows,
        "cols": cols,
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def parse_matrix(data: Dict[str, Any]) -> np.ndarray:
    rows = _require_int(data, "rows", "MatrixFile")
    cols = _require_int(data, "cols", "MatrixFile")
    entries = _require(data, "data", "MatrixFile")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise SerializationError(f"MatrixFile: expected {rows * cols} entries")
    values = []
    for entry in entries:
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in entry)
        ):
            raise SerializationError("MatrixFile: each entry must be [re, im]")
        if not (math.isfinite(entry[0]) and math.isfinite(entry[1])):
            raise SerializationError("MatrixFile: entries must be finite")
        values.append(complex(float(entry[0]), float(entry[1])))
    return np.array(values, dtype=np.complex128).reshape(rows, cols)


def parse_state(data: Dict[str, Any]) -> DensityMatrix:
    try:
        return DensityMatrix(parse_matrix(data))
    except SerializationError:
        raise
    except OQCCError as e:
        raise SerializationError(f"state file: {e}") from e


# Channels

def emit_channel(ch: KrausChannel) -> Dict[str, Any]:
    return {"dim": ch.d_in, "kraus": [emit_matrix(a) for a in ch.operators]}


def parse_channel(data: Dict[str, Any], tol: float = COMPLETENESS_TOL) -> KrausChannel:
    dim = _require_int(data, "dim", "ChannelFile")
    kraus = _require(data, "kraus", "ChannelFile")
    if not isinstance(kraus, list) or not kraus:
        raise SerializationError("ChannelFile: 'kraus' must be a non-empty list")
    ops = tuple(parse_matrix(k) for k in kraus)
    if any(a.shape != (dim, dim) for a in ops):
        raise SerializationError(f"ChannelFile: Kraus operators must be {dim}x{dim}")
    return KrausChannel(ops, tol=tol)


# Generators

def emit_generator(g: Generator) -> Dict[str, Any]:
    if isinstance(g, GKSGenerator):
        return {"dim": g.d, "H": emit_matrix(g.H), "form": "gks", "A": emit_matrix(g.A), "basis": "gellmann"}
    return {
        "dim": g.d,
        "H": emit_matrix(g.H),
        "form": "canonical",
        "lindblad": [emit_matrix(l) for l in g.lindblad_ops],
    }


def parse_generator(data: Dict[str, Any]) -> Generator:
    """
    Parse a GeneratorFile into the form it declares.

    Canonical operators with a trace component are made traceless with the
    matching Hamiltonian correction.
    """
    dim = _require_int(data, "dim", "GeneratorFile")
    h = parse_matrix(_require(data, "H", "GeneratorFile"))
    if h.shape != (dim, dim):
        raise SerializationError(f"GeneratorFile: H must be {dim}x{dim}")
    form = _require(data, "form", "GeneratorFile")
    if form == "canonical":
        raw = _require(data, "lindblad", "GeneratorFile")
        if not isinstance(raw, list):
            raise SerializationError("GeneratorFile: 'lindblad' must be a list")
        ops = tuple(parse_matrix(l) for l in raw)
        if any(l.shape != (dim, dim) for l in ops):
            raise SerializationError(f"GeneratorFile: Lindblad operators must be {dim}x{dim}")
        try:
            return CanonicalGenerator(H=h, lindblad_ops=ops)
        except NotTracelessError:
            g, _ = absorb_traces(h, ops)
            return g
    if form == "gks":
        basis = _require(data, "basis", "GeneratorFile")
        if basis != "gellmann":
            raise SerializationError(f"GeneratorFile: unsupported basis '{basis}'")
        a = parse_matrix(_require(data, "A", "GeneratorFile"))
        return GKSGenerator(H=h, basis=gell_mann_basis(dim), A=a)
    raise SerializationError(f"GeneratorFile: unknown form '{form}'")


def as_canonical(g: Generator) -> CanonicalGenerator:
    return canonicalize(g) if isinstance(g, GKSGenerator) else g


# Programs

def _emit_instruction(ins: Instruction) -> Dict[str, Any]:
    if isinstance(ins, Unitary):
        return {"type": "unitary", "matrix": emit_matrix(ins.matrix)}
    if isinstance(ins, YesNoMeasure):
        return {
            "type": "measure",
            "gamma_t": ins.gamma_t,
            "schedule": [
                {"unitary": emit_matrix(seg.unitary), "duration": seg.duration}
                for seg in ins.schedule.segments
            ],
        }
    if isinstance(ins, Branch):
        return {
            "type": "branch",
            "on0": [_emit_instruction(i) for i in ins.on0.instructions],
            "on1": [_emit_instruction(i) for i in ins.on1.instructions],
        }
    return {"type": "repeat", "count": ins.count, "body": [_emit_instruction(i) for i in ins.body.instructions]}


def emit_program(program: ControlProgram) -> Dict[str, Any]:
    return {"dim": program.dim, "instructions": [_emit_instruction(i) for i in program.instructions]}


def _parse_block(items: Any, dim: int) -> ControlProgram:
    if not isinstance(items, list):
        raise SerializationError("ProgramFile: instruction block must be a list")
    return ControlProgram(dim=dim, instructions=tuple(_parse_instruction(i, dim) for i in items))


def _parse_instruction(data: Dict[str, Any], dim: int) -> Instruction:
    kind = _require(data, "type", "ProgramFile")
    if kind == "unitary":
        return Unitary(parse_matrix(_require(data, "matrix", "ProgramFile")))
    if kind == "measure":
        raw = _require(data, "schedule", "ProgramFile")
        if not isinstance(raw, list):
            raise SerializationError("ProgramFile: 'schedule' must be a list")
        segments = tuple(
            ScheduleSegment(
                unitary=parse_matrix(_require(seg, "unitary", "ProgramFile")),
                duration=_require_float(seg, "duration", "ProgramFile"),
            )
            for seg in raw
        )
        return YesNoMeasure(
            gamma_t=_require_float(data, "gamma_t", "ProgramFile"),
            schedule=AveragingSchedule(segments),
        )
    if kind == "branch":
        return Branch(
            on0=_parse_block(_require(data, "on0", "ProgramFile"), dim),
            on1=_parse_block(_require(data, "on1", "ProgramFile"), dim),
        )
    if kind == "repeat":
        return Repeat(
            count=_require_int(data, "count", "ProgramFile"),
            body=_parse_block(_require(data, "body", "ProgramFile"), dim),
        )
    raise SerializationError(f"ProgramFile: unknown instruction type '{kind}'")


def parse_program(data: Dict[str, Any]) -> ControlProgram:
    dim = _require_int(data, "dim", "ProgramFile")
    if dim < 1:
        raise SerializationError("ProgramFile: 'dim' must be positive")
    return _parse_block(_require(data, "instructions", "ProgramFile"), dim)


# Files

def dumps(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, separators=(",", ":"))


def read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except OSError as e:
        raise SerializationError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise SerializationError(f"{path} is not valid JSON: {e.msg} (line {e.lineno})") from e


def write_json(path: str, payload: Dict[str, Any]):
    try:
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    except OSError as e:
        raise SerializationError(f"cannot write {path}: {e.strerror}") from e
    logger.debug(f"Wrote {path}")


def load_channel(path: str, tol: float = COMPLETENESS_TOL) -> KrausChannel:
    return parse_channel(read_json(path), tol=tol)


def load_generator(path: str) -> CanonicalGenerator:
    return as_canonical(parse_generator(read_json(path)))


def load_state(path: str) -> DensityMatrix:
    return parse_state(read_json(path))


def load_program(path: str) -> ControlProgram:
    return parse_program(read_json(path))


def format_table(rows: List[List[str]], headers: List[str]) -> str:
    """Left-aligned text table for --pretty output."""
    widths = [max(len(str(c)) for c in col) for col in zip(headers, *rows)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)
