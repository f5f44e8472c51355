"""
Sub-command implementations for oqcc.py.

Each cmd_* takes the parsed argparse namespace and returns the exit code:
0 pass, 1 verification failed, 2 input error, 3 synthesis error, 4 resource cap.
Reports go to stdout as one JSON line (or a table with --pretty); errors and
remediation hints go to stderr.
"""

import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from src.cli.serialization import (
    dumps,
    emit_channel,
    emit_matrix,
    emit_program,
    format_table,
    load_channel,
    load_generator,
    load_program,
    load_state,
    write_json,
)
from src.cli.toolkit_config import ToolkitConfig, ToolkitConfigManager
from src.control.compiler import (
    schedule_realization_error,
    stroboscopic_convergence,
    synth_lindblad,
    synth_multi_outcome,
    verify,
    verify_generator,
)
from src.control.simulator import (
    TrajectoryConfig,
    program_superoperator,
    record_probabilities,
    run_branches,
    run_trajectories,
    sum_branches,
)
from src.core.errors import (
    BranchExplosionError,
    CouplingOutOfRangeError,
    InputError,
    OQCCError,
    ResourceError,
)
from src.core.lindblad import Superoperator, propagate, propagator_channel
from src.core.matcore import trace_distance
from src.utils.run_tracker import RunTracker

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_SYNTHESIS = 3
EXIT_RESOURCE = 4

HINTS = {
    CouplingOutOfRangeError: "increase --steps",
    BranchExplosionError: "use --trajectories N --seed S for sampled simulation",
}


def _load_config(args) -> ToolkitConfig:
    return ToolkitConfigManager(getattr(args, "config", None)).config


def _tracker(config: ToolkitConfig) -> RunTracker:
    return RunTracker(results_dir=config.results_dir, auto_save=config.auto_save_results)


def _exit_code(error: OQCCError) -> int:
    if isinstance(error, InputError):
        return EXIT_INPUT
    if isinstance(error, ResourceError):
        return EXIT_RESOURCE
    return EXIT_SYNTHESIS


def _fail(error: OQCCError) -> int:
    print(f"error: {error}", file=sys.stderr)
    for kind, hint in HINTS.items():
        if isinstance(error, kind):
            print(f"hint: {hint}", file=sys.stderr)
    return _exit_code(error)


def _input_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def _emit(report: Dict[str, Any], pretty: bool, rows: Optional[List[List[str]]] = None,
          headers: Optional[List[str]] = None):
    if pretty:
        if rows is None:
            rows = [[key, _fmt(value)] for key, value in report.items()]
            headers = ["field", "value"]
        print(format_table(rows, headers))
    else:
        print(dumps(report))


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6e}"
    return str(value)


def _label(path: Optional[str]) -> str:
    return os.path.splitext(os.path.basename(path))[0] if path else "stdin"


def cmd_compile(args) -> int:
    """Compile a ChannelFile or GeneratorFile into a ProgramFile."""
    if bool(args.target) == bool(args.generator):
        return _input_error("exactly one of --target / --generator is required")
    config = _load_config(args)
    tracker = _tracker(config)
    try:
        if args.target:
            label = _label(args.target)
            channel = load_channel(args.target, tol=config.completeness_tol)
            logger.info(f"Compiling {len(channel)}-outcome channel", extra={"target": label, "stage": "compile"})
            program = synth_multi_outcome(
                channel.operators, delta_t=config.schedule_duration, relcut=config.pinv_relcut
            )
            report = verify(program, channel, cap=config.branch_cap, description=label)
        else:
            if args.time is None or args.steps is None:
                return _input_error("--generator needs --time and --steps")
            label = _label(args.generator)
            g = load_generator(args.generator)
            logger.info(f"Compiling generator, T = {args.time}, n = {args.steps}",
                        extra={"target": label, "stage": "compile"})
            program = synth_lindblad(g, args.time, args.steps, delta_t=config.schedule_duration)
            report = verify_generator(program, g, args.time, description=label)
        write_json(args.out, emit_program(program))
    except OQCCError as e:
        code = _fail(e)
        tracker.record("compile", _label(args.target or args.generator), vars_dict(args), {}, code, str(e))
        return code

    summary = report.to_dict()
    tracker.record("compile", label, vars_dict(args), summary, EXIT_OK)
    _emit(summary, args.pretty)
    return EXIT_OK


def cmd_simulate(args) -> int:
    """Run a ProgramFile on a state; branch sum by default, sampled with --trajectories."""
    config = _load_config(args)
    try:
        program = load_program(args.program)
        state = load_state(args.state)
        if args.trajectories:
            workers = args.workers or config.trajectory_workers
            result = run_trajectories(
                program,
                TrajectoryConfig(seed=args.seed, count=args.trajectories, initial_state=state),
                workers=workers,
            )
            output = result.estimate
            report = {
                "mode": "trajectories",
                "count": result.count,
                "seed": args.seed,
                "standard_error": result.standard_error,
            }
        else:
            branches = run_branches(program, state, cap=config.branch_cap)
            output = sum_branches(branches)
            report = {
                "mode": "branches",
                "branch_count": len(branches),
                "significant_branches": len(record_probabilities(branches, pfloor=config.probability_floor)),
            }
        write_json(args.out, emit_matrix(output.matrix))
    except OQCCError as e:
        return _fail(e)

    report["trace"] = float(np.real(np.trace(output.matrix)))
    _emit(report, args.pretty)
    return EXIT_OK


def cmd_verify(args) -> int:
    """Compare a ProgramFile against a ChannelFile; exit 1 when the distance exceeds --tol."""
    config = _load_config(args)
    tol = args.tol if args.tol is not None else config.default_verify_tol
    if not tol > 0:
        return _input_error("--tol must be positive")
    tracker = _tracker(config)
    try:
        program = load_program(args.program)
        target = load_channel(args.target, tol=config.completeness_tol)
        result = verify(program, target, cap=config.branch_cap, description=_label(args.target))
        schedule_error = schedule_realization_error(program, repetitions=config.averaging_repetitions)
    except OQCCError as e:
        return _fail(e)

    passed = result.distance <= tol
    report = {
        "distance": result.distance,
        "tol": tol,
        "pass": passed,
        "schedule_error": schedule_error,
        "averaging_repetitions": config.averaging_repetitions,
    }
    code = EXIT_OK if passed else EXIT_VERIFY_FAILED
    tracker.record("verify", _label(args.program), vars_dict(args), report, code)
    if not passed:
        logger.warning(f"Verification failed: distance {result.distance:.3e} > {tol:.3e}",
                       extra={"target": _label(args.target), "stage": "verify"})
    _emit(report, args.pretty)
    return code


def _parse_steps(text: str) -> List[int]:
    try:
        steps = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ValueError(f"--steps-list must be comma-separated integers, got {text!r}")
    if not steps or any(n < 1 for n in steps):
        raise ValueError("--steps-list needs positive step counts")
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ValueError("--steps-list must be strictly ascending")
    return steps


def cmd_lindblad(args) -> int:
    """Stroboscopic error against exact propagation for each step count, plus the fitted slope."""
    config = _load_config(args)
    tracker = _tracker(config)
    try:
        steps = _parse_steps(args.steps_list)
    except ValueError as e:
        return _input_error(str(e))
    if args.time is None or args.time <= 0:
        return _input_error("--time must be positive")
    try:
        g = load_generator(args.generator)
        state = load_state(args.state) if args.state else None
        if state is not None and state.dim != g.d:
            return _input_error(f"state dimension {state.dim} != generator dimension {g.d}")
        result = stroboscopic_convergence(g, args.time, steps, delta_t=config.schedule_duration)
        state_errors = None
        if state is not None:
            exact = propagate(g, state, args.time).matrix
            state_errors = []
            for n in steps:
                program = synth_lindblad(g, args.time, n, delta_t=config.schedule_duration)
                achieved = Superoperator(d=g.d, matrix=program_superoperator(program)).act(state.matrix)
                state_errors.append(trace_distance(achieved, exact))
        if args.kraus_out:
            exact_channel = propagator_channel(g, args.time)
            write_json(args.kraus_out, emit_channel(exact_channel))
            logger.info(f"Wrote the exact {len(exact_channel)}-operator channel to {args.kraus_out}",
                        extra={"target": _label(args.generator), "stage": "lindblad"})
    except OQCCError as e:
        return _fail(e)

    report = {"time": args.time, **result.to_dict()}
    if state_errors is not None:
        report["state_errors"] = state_errors
    tracker.record("lindblad", _label(args.generator), vars_dict(args), report, EXIT_OK)

    if args.pretty:
        headers = ["steps", "channel_error"] + (["state_error"] if state_errors is not None else [])
        rows = []
        for i, n in enumerate(result.steps):
            row = [str(n), _fmt(result.errors[i])]
            if state_errors is not None:
                row.append(_fmt(state_errors[i]))
            rows.append(row)
        _emit(report, True, rows, headers)
        print(f"slope: {_fmt(result.slope) if result.slope is not None else 'n/a (errors at numerical floor)'}")
    else:
        _emit(report, False)
    return EXIT_OK


def cmd_config(args) -> int:
    """Print the effective configuration and its validation issues."""
    manager = ToolkitConfigManager(getattr(args, "config", None))
    summary = manager.get_config_summary()
    if getattr(args, "save", False):
        manager.save_config()
    _emit(summary, args.pretty)
    return EXIT_OK if summary["config_valid"] else EXIT_INPUT


def vars_dict(args) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k != "func"}
