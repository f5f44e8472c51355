#!/usr/bin/env python3
"""
Unified CLI for the open-quantum-system control compiler.
Provides a single entry point for compiling, simulating and verifying programs.
"""
import argparse
import logging
import sys

__version__ = "1.0.0"


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per operation."""
    parser = argparse.ArgumentParser(
        description="Open-quantum-system control compiler",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="Suppress the banner and informational logs")
    common.add_argument("--verbose", action="store_true", help="Debug logging")
    common.add_argument("--pretty", action="store_true", help="Human-readable tables instead of JSON")
    common.add_argument("--config", default=None, help="Config file (default: oqcc_config.json or $OQCC_CONFIG)")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Compile command
    compile_parser = subparsers.add_parser("compile", parents=[common], help="Compile a channel or generator")
    compile_parser.add_argument("--target", help="ChannelFile to compile")
    compile_parser.add_argument("--generator", help="GeneratorFile to compile stroboscopically")
    compile_parser.add_argument("--time", type=float, help="Total evolution time for --generator")
    compile_parser.add_argument("--steps", type=int, help="Number of stroboscopic steps for --generator")
    compile_parser.add_argument("--out", required=True, help="ProgramFile to write")
    compile_parser.set_defaults(func=run_compile)

    # Simulate command
    simulate_parser = subparsers.add_parser("simulate", parents=[common], help="Run a program on a state")
    simulate_parser.add_argument("--program", required=True, help="ProgramFile to run")
    simulate_parser.add_argument("--state", required=True, help="MatrixFile holding the input density matrix")
    simulate_parser.add_argument("--trajectories", type=int, default=0, help="Sample N trajectories instead of summing branches")
    simulate_parser.add_argument("--seed", type=int, default=0, help="Trajectory seed")
    simulate_parser.add_argument("--workers", type=int, default=None, help="Trajectory worker threads")
    simulate_parser.add_argument("--out", required=True, help="MatrixFile to write")
    simulate_parser.set_defaults(func=run_simulate)

    # Verify command
    verify_parser = subparsers.add_parser("verify", parents=[common], help="Compare a program with a target channel")
    verify_parser.add_argument("--program", required=True, help="ProgramFile to check")
    verify_parser.add_argument("--target", required=True, help="ChannelFile to compare against")
    verify_parser.add_argument("--tol", type=float, default=None, help="Pass threshold (default 1e-8)")
    verify_parser.set_defaults(func=run_verify)

    # Lindblad convergence command
    lindblad_parser = subparsers.add_parser("lindblad", parents=[common], help="Stroboscopic convergence report")
    lindblad_parser.add_argument("--generator", required=True, help="GeneratorFile")
    lindblad_parser.add_argument("--time", type=float, required=True, help="Total evolution time")
    lindblad_parser.add_argument("--steps-list", default="16,32,64,128", help="Ascending comma-separated step counts")
    lindblad_parser.add_argument("--state", default=None, help="Optional MatrixFile for per-state errors")
    lindblad_parser.add_argument("--kraus-out", default=None, help="Write exp(T L) as a ChannelFile")
    lindblad_parser.set_defaults(func=run_lindblad)

    # Config command
    config_parser = subparsers.add_parser("config", parents=[common], help="Show the effective configuration")
    config_parser.add_argument("--save", action="store_true", help="Write the effective configuration back to the file")
    config_parser.set_defaults(func=run_config)

    # Test command
    test_parser = subparsers.add_parser("test", parents=[common], help="Run all tests")
    test_parser.set_defaults(func=run_tests)

    return parser


def main(argv=None):
    """Main CLI interface for the compiler toolkit."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not hasattr(args, "func"):
        parser.print_help()
        return 1

    from src.utils.logging_config import setup_enhanced_logging
    level = logging.DEBUG if args.verbose else None
    setup_enhanced_logging(level=level, quiet=args.quiet)

    if not args.quiet:
        print(f"oqcc {__version__}", file=sys.stderr)

    return args.func(args)


def run_compile(args):
    """Compile a target to a program."""
    from src.cli.commands import cmd_compile
    return cmd_compile(args)


def run_simulate(args):
    """Simulate a program."""
    from src.cli.commands import cmd_simulate
    return cmd_simulate(args)


def run_verify(args):
    """Verify a program against a channel."""
    from src.cli.commands import cmd_verify
    return cmd_verify(args)


def run_lindblad(args):
    """Stroboscopic convergence report."""
    from src.cli.commands import cmd_lindblad
    return cmd_lindblad(args)


def run_config(args):
    """Show configuration."""
    from src.cli.commands import cmd_config
    return cmd_config(args)


def run_tests(args):
    """Run all tests."""
    from tests.test_all import main as run_all
    return run_all()


if __name__ == "__main__":
    sys.exit(main())
